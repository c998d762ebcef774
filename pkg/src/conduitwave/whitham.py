"""The 3x3 modulation matrix and its characteristic speeds.

Slow modulations of a periodic wave transport the wavenumber k and the two
per-unit-theta conserved densities, mean = k M and qmean = k Q.  Linearizing
that first-order system about a fixed wave gives a quasilinear form

    (k, mean, qmean)_S = D * (k, mean, qmean)_X,

whose matrix D has first row -(c + k c_k, k c_mean, k c_qmean) from the
conservation-of-waves equation, and second and third rows the gradients of
the averaged fluxes

    F2 = <2 k^2 c (phi')^2 - phi^2>,      F3 = <2 ln phi>,

with <.> the average over one theta period.  Written with the opposite sign
convention, (..)_S + B (..)_X = 0, the characteristic speeds are the
eigenvalues of B = -D; `speeds` below stores those, so they limit onto the
small-amplitude values (2M, d omega0/dk +/- A sqrt(...)) directly.

All nine entries come from one finite-difference pathway: the wave family is
re-entered through Newton inversion at stencil points in (k, mean, qmean),
with the quadrature resolution frozen so differences see a smooth map.
Speeds off the real axis signal modulational instability; all-real speeds
are only a necessary condition for stability.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import ConduitError, EigenSolveError, SteppingError
from .potential import WaveParams
from .quadrature import WaveProfile, profile_resolution, reconstruct_profile
from .reparam import (
    ModParams,
    _fd_columns,
    invert_to_aEc,
    kmq_map,
    nondegeneracy,
)

__all__ = [
    "WhithamMatrix",
    "SweepRecord",
    "flux_averages",
    "whitham_matrix",
    "classify_sweep",
    "sweep_csv",
    "CSV_COLUMNS",
]

HYPERBOLIC = "hyperbolic"
ELLIPTIC = "elliptic"
MARGINAL = "marginal"
FAILED = "failed"

# Imaginary parts below tol*scale are FD noise (hyperbolic); only beyond
# MARGINAL_BAND times that do we commit to elliptic.
DEFAULT_CLASS_TOL = 1e-7
MARGINAL_BAND = 10.0

CSV_COLUMNS = [
    "k", "M", "Q", "a", "E", "c",
    "Re(s1)", "Im(s1)", "Re(s2)", "Im(s2)", "Re(s3)", "Im(s3)",
    "class",
]


@dataclass
class WhithamMatrix:
    """Modulation matrix at one wave, with speeds and stability label.

    `entries` is D in (k, mean, qmean) coordinates; `speeds` are the
    eigenvalues of -D sorted by (real, imaginary) part.
    """

    entries: np.ndarray
    speeds: np.ndarray
    classification: str
    tol: float
    scale: float
    c: float
    params: WaveParams
    kmq: ModParams

    @property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues of D itself (the negatives of `speeds`)."""
        return -self.speeds

    def to_dict(self) -> dict:
        return {
            "entries": self.entries.tolist(),
            "speeds": [[s.real, s.imag] for s in self.speeds],
            "classification": self.classification,
            "tol": self.tol,
            "scale": self.scale,
            "c": self.c,
            "a": self.params.a,
            "E": self.params.E,
            "k": self.kmq.k,
            "M": self.kmq.M,
            "Q": self.kmq.Q,
        }


def flux_averages(profile: WaveProfile) -> tuple[float, float]:
    """Averaged fluxes (F2, F3) of the mean and qmean transport equations.

    Trapezoid sums over the uniform periodic grid, spectrally accurate for
    smooth profiles.
    """
    k, c = profile.k, profile.c
    f2 = float(np.mean(2.0 * k**2 * c * profile.deriv**2 - profile.values**2))
    f3 = float(np.mean(2.0 * np.log(profile.values)))
    return f2, f3


def _classify(eigs: np.ndarray, tol: float) -> tuple[str, float]:
    scale = float(np.max(np.abs(eigs)))
    if scale == 0.0:
        return MARGINAL, scale
    im = float(np.max(np.abs(eigs.imag)))
    if im < tol * scale:
        return HYPERBOLIC, scale
    if im > MARGINAL_BAND * tol * scale:
        return ELLIPTIC, scale
    return MARGINAL, scale


def whitham_matrix(
    params: WaveParams,
    n: int = 256,
    h_rel: float = 1e-5,
    tol: float = DEFAULT_CLASS_TOL,
    newton_tol: float = 1e-13,
) -> WhithamMatrix:
    """Assemble D at the wave (a, E, c) and classify its spectrum.

    Requires the reparameterization Jacobians to be clear of zero; raises
    SteppingError otherwise.
    """
    nd = nondegeneracy(params)
    if nd.degenerate:
        raise SteppingError(
            f"reparameterization degenerate at {params}: {nd.to_dict()}"
        )
    n_nodes, cheb_deg = profile_resolution(params)
    base = reconstruct_profile(params, n=n, n_nodes=n_nodes, cheb_degree=cheb_deg)
    w0 = np.array([base.k, base.mean, base.qmean])
    c0, k0 = base.c, base.k

    inverted: dict[tuple[float, float, float], WaveParams] = {}

    def cf2f3(w):
        key = (float(w[0]), float(w[1]), float(w[2]))
        if key not in inverted:
            m = ModParams(k=w[0], M=w[1] / w[0], Q=w[2] / w[0])
            inverted[key] = invert_to_aEc(m, params, tol=newton_tol, max_iter=80,
                                          n_nodes=n_nodes)
        p = inverted[key]
        prof = reconstruct_profile(p, n=n, n_nodes=n_nodes, cheb_degree=cheb_deg)
        f2, f3 = flux_averages(prof)
        return np.array([p.c, f2, f3])

    _, grad = _fd_columns(cf2f3, w0, h_rel, richardson=True)
    entries = np.empty((3, 3))
    entries[0, :] = -(k0 * grad[0, :] + np.array([c0, 0.0, 0.0]))
    entries[1, :] = grad[1, :]
    entries[2, :] = grad[2, :]

    try:
        eigs = np.linalg.eigvals(entries)
    except np.linalg.LinAlgError as exc:
        raise EigenSolveError(f"eigenvalue solve failed: {exc}") from exc
    label, scale = _classify(eigs, tol)
    speeds = np.sort_complex(-eigs)
    return WhithamMatrix(
        entries=entries,
        speeds=speeds,
        classification=label,
        tol=tol,
        scale=scale,
        c=c0,
        params=params,
        kmq=ModParams(k=base.k, M=base.mass, Q=base.qinv),
    )


@dataclass
class SweepRecord:
    """One classified point of a parameter sweep (or its failure record)."""

    index: int
    params: WaveParams | None
    kmq: ModParams | None
    c: float | None
    speeds: np.ndarray | None
    classification: str
    reason: str | None = None

    def csv_row(self) -> list:
        if self.classification == FAILED:
            head = [
                self.kmq.k if self.kmq else "",
                self.kmq.M if self.kmq else "",
                self.kmq.Q if self.kmq else "",
                self.params.a if self.params else "",
                self.params.E if self.params else "",
                self.params.c if self.params else "",
            ]
            return head + [""] * 6 + [f"{FAILED}: {self.reason}"]
        s = self.speeds
        return [
            self.kmq.k, self.kmq.M, self.kmq.Q,
            self.params.a, self.params.E, self.params.c,
            s[0].real, s[0].imag, s[1].real, s[1].imag, s[2].real, s[2].imag,
            self.classification,
        ]


def classify_sweep(points, guess: WaveParams | None = None, **matrix_kw) -> list[SweepRecord]:
    """Classify each point of a grid; failures become records, not raises.

    Points may be WaveParams or ModParams; ModParams are inverted starting
    from `guess` (or from the previous successful point).  Output order is
    the input order.
    """
    records: list[SweepRecord] = []
    running_guess = guess
    for i, point in enumerate(points):
        try:
            if isinstance(point, ModParams):
                if running_guess is None:
                    raise SteppingError(
                        "ModParams sweep needs an initial guess in (a, E, c)"
                    )
                p = invert_to_aEc(point, running_guess)
            else:
                p = point
            wm = whitham_matrix(p, **matrix_kw)
            running_guess = p
            records.append(
                SweepRecord(
                    index=i,
                    params=p,
                    kmq=wm.kmq,
                    c=wm.c,
                    speeds=wm.speeds,
                    classification=wm.classification,
                )
            )
        except ConduitError as exc:
            records.append(
                SweepRecord(
                    index=i,
                    params=point if isinstance(point, WaveParams) else None,
                    kmq=point if isinstance(point, ModParams) else None,
                    c=None,
                    speeds=None,
                    classification=FAILED,
                    reason=f"{type(exc).__name__}: {exc}",
                )
            )
    return records


def sweep_csv(records: list[SweepRecord]) -> str:
    """Render sweep records as CSV with the fixed column schema."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow(rec.csv_row())
    return buf.getvalue()
