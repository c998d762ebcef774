"""Cross-check: Bloch spectral slopes against modulation characteristic speeds.

The two independent pipelines must agree: the slopes mu_j(0) of the three
spectral curves through the origin (eigenvalue tracking of the collocation
operators) equal the eigenvalues of the modulation matrix D shifted by the
wave speed c (finite differences of averaged fluxes).  This module matches
the two triples and reports the residual, which is the library's headline
consistency test.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .bloch import DEFAULT_XI_LIST, origin_slopes
from .potential import WaveParams
from .quadrature import reconstruct_profile
from .whitham import ELLIPTIC, whitham_matrix

__all__ = ["SpeedMatchReport", "matched_speed_table"]


@dataclass
class SpeedMatchReport:
    params: WaveParams
    c: float
    classification: str
    slopes: np.ndarray
    targets: np.ndarray
    abs_errors: np.ndarray
    scale: float
    rel_error: float
    tol: float
    bloch_residual: float
    realness_agrees: bool

    @property
    def passed(self) -> bool:
        return self.rel_error < self.tol and self.realness_agrees

    def to_dict(self) -> dict:
        return {
            "a": self.params.a,
            "E": self.params.E,
            "c": self.c,
            "classification": self.classification,
            "slopes": [[z.real, z.imag] for z in self.slopes],
            "targets": [[z.real, z.imag] for z in self.targets],
            "abs_errors": self.abs_errors.tolist(),
            "scale": self.scale,
            "rel_error": self.rel_error,
            "tol": self.tol,
            "bloch_residual": self.bloch_residual,
            "realness_agrees": self.realness_agrees,
            "passed": self.passed,
        }

    def table(self) -> str:
        lines = [
            f"speed match at a={self.params.a!r} E={self.params.E!r} "
            f"c={self.params.c!r}  [{self.classification}]",
            f"  {'origin slope mu_j':>28s}  {'eig(D) + c':>28s}  {'|diff|':>9s}",
        ]
        for mu, tgt, err in zip(self.slopes, self.targets, self.abs_errors):
            lines.append(
                f"  {mu.real:+.9f} {mu.imag:+.2e}i  "
                f"{tgt.real:+.9f} {tgt.imag:+.2e}i  {err:9.2e}"
            )
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(
            f"  max matched relative error {self.rel_error:.2e} "
            f"(tol {self.tol:.1e}), realness agreement "
            f"{'yes' if self.realness_agrees else 'NO'}: {verdict}"
        )
        lines.append(f"  slope fit residual {self.bloch_residual:.2e}")
        return "\n".join(lines)


def _best_match(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Order `a` against `b` minimizing the worst pairwise distance."""
    best, best_perm = None, None
    for perm in permutations(range(len(b))):
        errs = np.abs(a[list(perm)] - b)
        worst = float(np.max(errs))
        if best is None or worst < best:
            best, best_perm = worst, perm
    return a[list(best_perm)], np.abs(a[list(best_perm)] - b)


def matched_speed_table(
    params: WaveParams,
    n_bloch: int = 128,
    xi_list=DEFAULT_XI_LIST,
    n_whitham: int = 256,
    tol: float = 1e-3,
) -> SpeedMatchReport:
    """Run both pipelines at one wave and match the speed triples.

    The relative error is measured against the magnitude of the largest
    target speed; realness agreement requires the slopes to be real exactly
    when the modulation matrix is labeled non-elliptic.
    """
    wm = whitham_matrix(params, n=n_whitham)
    profile = reconstruct_profile(params, n=n_bloch)
    bl = origin_slopes(profile, xi_list=xi_list, n=n_bloch)
    targets = np.sort_complex(wm.eigenvalues + wm.c)
    slopes, errs = _best_match(np.asarray(bl.slopes), targets)
    scale = float(np.max(np.abs(targets)))
    rel = float(np.max(errs)) / scale
    slopes_elliptic = bool(np.max(np.abs(slopes.imag)) > tol * scale)
    agrees = slopes_elliptic == (wm.classification == ELLIPTIC)
    return SpeedMatchReport(
        params=params,
        c=wm.c,
        classification=wm.classification,
        slopes=slopes,
        targets=targets,
        abs_errors=errs,
        scale=scale,
        rel_error=rel,
        tol=tol,
        bloch_residual=bl.fit_residual,
        realness_agrees=agrees,
    )
