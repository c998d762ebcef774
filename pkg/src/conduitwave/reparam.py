"""Moving between the (a, E, c) and (k, M, Q) wave parameterizations.

The wave family carries two natural coordinate systems: the integration
constants (a, E, c) used to build profiles, and the physical coordinates
(wavenumber, mass, Q) that the modulation system evolves.  This module maps
between them, measures the Jacobian determinants whose non-vanishing makes
the change of coordinates legitimate, and differentiates profiles along the
physical coordinates with the phase pinned by evenness.

Convention: `ModParams` stores mass and Q per spatial period (integrals over
one period in z).  The per-unit-theta quantities that the modulation system
uses are `mean = k * M` and `qmean = k * Q`; profile derivatives here are
taken with respect to (k, mean, qmean).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    NewtonNotConverged,
    RegionError,
    SingularJacobian,
    SteppingError,
)
from .potential import WaveParams
from .quadrature import (
    WaveProfile,
    profile_resolution,
    reconstruct_profile,
    turning_points,
    wave_integrals,
)

__all__ = [
    "ModParams",
    "Nondegeneracy",
    "ProfilePartials",
    "kmq_map",
    "jacobian_kmq",
    "nondegeneracy",
    "invert_to_aEc",
    "profile_partials",
    "from_kma",
]


@dataclass(frozen=True)
class ModParams:
    """Physical wave coordinates: wavenumber k = 1/T, mass M, invariant Q."""

    k: float
    M: float
    Q: float

    def __post_init__(self):
        if not (self.k > 0 and self.M > 0 and self.Q > 0):
            raise DomainError(f"ModParams must be positive, got {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.k, self.M, self.Q])


@dataclass(frozen=True)
class Nondegeneracy:
    """Jacobian determinants guarding the reparameterization.

    `t_a` is dT/da, `tm_ae` the 2x2 determinant of (T, M) over (a, E), and
    `tmq_aec` the full 3x3 determinant of (T, M, Q) over (a, E, c).  A flag
    is set when the corresponding magnitude drops below `threshold`.
    """

    t_a: float
    tm_ae: float
    tmq_aec: float
    threshold: float = 1e-8

    @property
    def flags(self) -> tuple[bool, bool, bool]:
        return (
            abs(self.t_a) < self.threshold,
            abs(self.tm_ae) < self.threshold,
            abs(self.tmq_aec) < self.threshold,
        )

    @property
    def degenerate(self) -> bool:
        return any(self.flags)

    def to_dict(self) -> dict:
        return {
            "T_a": self.t_a,
            "TM_aE": self.tm_ae,
            "TMQ_aEc": self.tmq_aec,
            "threshold": self.threshold,
            "flags": list(self.flags),
        }


@dataclass
class ProfilePartials:
    """Grid derivatives of the profile along the physical coordinates.

    `wrt_k`, `wrt_mean`, `wrt_qmean` differentiate phi(theta) with respect to
    (k, mean, qmean) holding the other two fixed; `wrt_c` differentiates with
    respect to the speed at fixed (a, E).  The scalars `dc_d*` are the
    matching derivatives of the wave speed.  All profiles share the even
    phase normalization, so no translation mode leaks into the derivatives.
    """

    base: WaveProfile
    wrt_k: np.ndarray
    wrt_mean: np.ndarray
    wrt_qmean: np.ndarray
    wrt_c: np.ndarray
    dc_dk: float
    dc_dmean: float
    dc_dqmean: float
    h_rel: float


def _params_vector(params: WaveParams) -> np.ndarray:
    return np.array([params.a, params.E, params.c])


def _params_from_vector(x) -> WaveParams:
    return WaveParams(a=float(x[0]), E=float(x[1]), c=float(x[2]))


def _kmq_vector(params: WaveParams, n_nodes: int | None = None) -> np.ndarray:
    vals = wave_integrals(params, n_nodes=n_nodes)
    return np.array([1.0 / vals.period, vals.mass, vals.qinv])


def kmq_map(params: WaveParams, n_nodes: int | None = None) -> ModParams:
    """Map (a, E, c) to the physical coordinates (k, M, Q)."""
    k, M, Q = _kmq_vector(params, n_nodes=n_nodes)
    return ModParams(k=float(k), M=float(M), Q=float(Q))


def _fd_columns(fun, x0, h_rel, richardson):
    """Centered-difference Jacobian columns of `fun` at x0, one Richardson level.

    `fun` maps a parameter vector to an array.  Domain failures on the
    stencil surface as SteppingError.
    """
    f0 = np.asarray(fun(x0))
    cols = []
    for i in range(len(x0)):
        h = h_rel * max(1.0, abs(x0[i]))
        try:
            def shifted(delta, i=i):
                x = np.array(x0, dtype=float)
                x[i] += delta
                return np.asarray(fun(x))

            d_h = (shifted(h) - shifted(-h)) / (2.0 * h)
            if richardson:
                d_h2 = (shifted(h / 2) - shifted(-h / 2)) / h
                cols.append((4.0 * d_h2 - d_h) / 3.0)
            else:
                cols.append(d_h)
        except (RegionError, DomainError) as exc:
            raise SteppingError(
                f"finite-difference stencil left the wave region at "
                f"coordinate {i}: {exc}"
            ) from exc
    return f0, np.stack(cols, axis=-1)


def jacobian_kmq(
    params: WaveParams,
    h_rel: float = 1e-6,
    richardson: bool = True,
    n_nodes: int | None = None,
) -> np.ndarray:
    """3x3 matrix of partials of (k, M, Q) with respect to (a, E, c).

    Evaluations are pinned to one quadrature node count so the differences
    see a smooth function.
    """
    if n_nodes is None:
        n_nodes = wave_integrals(params).n_nodes
    _, jac = _fd_columns(
        lambda x: _kmq_vector(_params_from_vector(x), n_nodes=n_nodes),
        _params_vector(params),
        h_rel,
        richardson,
    )
    return jac


def nondegeneracy(params: WaveParams, threshold: float = 1e-8) -> Nondegeneracy:
    """Evaluate the three Jacobian determinants of the reparameterization."""
    n_nodes = wave_integrals(params).n_nodes

    def tmq(x):
        vals = wave_integrals(_params_from_vector(x), n_nodes=n_nodes)
        return np.array([vals.period, vals.mass, vals.qinv])

    _, jac = _fd_columns(tmq, _params_vector(params), 1e-6, True)
    t_a = jac[0, 0]
    tm_ae = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    tmq_aec = float(np.linalg.det(jac))
    return Nondegeneracy(t_a=float(t_a), tm_ae=float(tm_ae), tmq_aec=tmq_aec,
                         threshold=threshold)


def _newton_system(fun, x0, tol, max_iter, validate=None, h_rel=1e-6):
    """Damped Newton for a small square system with FD Jacobian.

    `fun` returns the residual vector, already scaled so a sup-norm below
    `tol` means convergence.  `validate(x)` may reject iterates (e.g. points
    outside the wave region) before evaluation.
    """
    x = np.array(x0, dtype=float)

    def safe_fun(y):
        if validate is not None:
            validate(y)
        return np.asarray(fun(y))

    r = safe_fun(x)
    for _ in range(max_iter):
        norm = float(np.max(np.abs(r)))
        if norm < tol:
            return x
        try:
            _, jac = _fd_columns(safe_fun, x, h_rel, richardson=False)
        except SteppingError as exc:
            raise NewtonNotConverged(
                f"Jacobian stencil failed near x={x}: {exc}"
            ) from exc
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(f"singular Jacobian at x={x}") from exc
        if not np.all(np.isfinite(step)):
            raise SingularJacobian(f"non-finite Newton step at x={x}")
        lam = 1.0
        for _ in range(30):
            try:
                r_new = safe_fun(x + lam * step)
            except (RegionError, DomainError):
                lam *= 0.5
                continue
            if np.max(np.abs(r_new)) < norm or np.max(np.abs(r_new)) < tol:
                x = x + lam * step
                r = r_new
                break
            lam *= 0.5
        else:
            raise NewtonNotConverged(
                f"line search failed at x={x}, residual {norm:.3e}"
            )
    if float(np.max(np.abs(r))) < tol:
        return x
    raise NewtonNotConverged(
        f"Newton exhausted {max_iter} iterations, residual "
        f"{float(np.max(np.abs(r))):.3e} > tol {tol}"
    )


def invert_to_aEc(
    target: ModParams,
    guess: WaveParams,
    tol: float = 1e-12,
    max_iter: int = 50,
    n_nodes: int | None = None,
) -> WaveParams:
    """Solve kmq_map(a, E, c) = target by Newton iteration from `guess`.

    The residual is scaled per component by max(1, |target|); `tol` bounds
    its sup-norm.  Raises NewtonNotConverged outside the convergence basin
    and SingularJacobian at degenerate points.
    """
    t = target.as_array()
    scale = np.maximum(1.0, np.abs(t))
    if n_nodes is None:
        n_nodes = wave_integrals(guess).n_nodes

    def resid(x):
        return (_kmq_vector(_params_from_vector(x), n_nodes=n_nodes) - t) / scale

    x = _newton_system(resid, _params_vector(guess), tol, max_iter)
    return _params_from_vector(x)


def profile_partials(
    params: WaveParams,
    n: int = 256,
    h_rel: float = 1e-5,
    tol: float = 1e-13,
) -> ProfilePartials:
    """Differentiate the profile along (k, mean, qmean) and along c.

    Centered differences with one Richardson level; every stencil point goes
    through the frozen-resolution reconstruction so the differences act on a
    smooth map.  Step sizes h = h_rel * max(1, |coordinate|).
    """
    nd = nondegeneracy(params)
    if nd.degenerate:
        raise SteppingError(
            f"reparameterization degenerate at {params}: {nd.to_dict()}"
        )
    n_nodes, cheb_deg = profile_resolution(params)
    base = reconstruct_profile(params, n=n, n_nodes=n_nodes, cheb_degree=cheb_deg)
    w0 = np.array([base.k, base.mean, base.qmean])
    x_base = _params_vector(params)

    inverted: dict[tuple[float, float, float], WaveParams] = {}

    def params_at(w):
        key = (float(w[0]), float(w[1]), float(w[2]))
        if key not in inverted:
            m = ModParams(k=w[0], M=w[1] / w[0], Q=w[2] / w[0])
            inverted[key] = invert_to_aEc(m, params, tol=tol, max_iter=80,
                                          n_nodes=n_nodes)
        return inverted[key]

    def values_at(w):
        p = params_at(np.asarray(w))
        return reconstruct_profile(p, n=n, n_nodes=n_nodes,
                                   cheb_degree=cheb_deg).values

    def speed_at(w):
        return np.array([params_at(np.asarray(w)).c])

    _, grad_phi = _fd_columns(values_at, w0, h_rel, richardson=True)
    _, grad_c = _fd_columns(speed_at, w0, h_rel, richardson=True)

    def values_at_c(x):
        return reconstruct_profile(_params_from_vector(x), n=n, n_nodes=n_nodes,
                                   cheb_degree=cheb_deg).values

    h_c = h_rel * max(1.0, abs(params.c))
    plus = values_at_c(x_base + np.array([0.0, 0.0, h_c]))
    minus = values_at_c(x_base - np.array([0.0, 0.0, h_c]))
    wrt_c = (plus - minus) / (2.0 * h_c)

    return ProfilePartials(
        base=base,
        wrt_k=grad_phi[:, 0],
        wrt_mean=grad_phi[:, 1],
        wrt_qmean=grad_phi[:, 2],
        wrt_c=wrt_c,
        dc_dk=float(grad_c[0, 0]),
        dc_dmean=float(grad_c[0, 1]),
        dc_dqmean=float(grad_c[0, 2]),
        h_rel=h_rel,
    )


def _stokes_guess(k: float, mean: float, amp: float) -> WaveParams:
    """Initial (a, E, c) for a small wave with given (k, mean, amplitude)."""
    q = (2.0 * math.pi * k) ** 2 * mean
    omega0 = 2.0 * k * mean / (q + 1.0)
    omega2 = (1.0 - 8.0 * q) / (12.0 * (2.0 * math.pi) ** 2 * k * mean**2 * (q + 1.0))
    c = (omega0 + amp**2 * omega2) / k
    corr = amp**2 * (q + 1.0) / (12.0 * (2.0 * math.pi * k) ** 2 * mean**2)
    hi = mean + amp + corr
    lo = mean - amp + corr
    a = -(
        (hi**2 * math.log(hi) - lo**2 * math.log(lo)) / c + (hi - lo)
    ) / (hi**2 - lo**2)
    E = hi**2 * math.log(hi) / c + a * hi**2 + hi
    return WaveParams(a=a, E=E, c=c)


def from_kma(
    k: float,
    mean: float,
    amp: float,
    guess: WaveParams | None = None,
    tol: float = 1e-12,
    max_iter: int = 50,
) -> WaveParams:
    """Find (a, E, c) whose wave has the given wavenumber, mean and amplitude.

    `mean` is the average of the 1-periodic profile (k * mass) and `amp` half
    the peak-to-trough height.  The starting point comes from the
    small-oscillation expansion, so for moderate amplitudes supply `guess`.
    """
    if amp <= 0:
        raise DomainError("amplitude must be positive; use constant_state for amp=0")
    x0 = _params_vector(guess if guess is not None else _stokes_guess(k, mean, amp))
    target = np.array([k, mean, amp])
    scale = np.maximum(1.0, np.abs(target))
    n_nodes_box = {}

    def resid(x):
        p = _params_from_vector(x)
        if "n" not in n_nodes_box:
            n_nodes_box["n"] = wave_integrals(p).n_nodes
        vals = wave_integrals(p, n_nodes=n_nodes_box["n"])
        tp = turning_points(p)
        got = np.array(
            [1.0 / vals.period, vals.mass / vals.period,
             0.5 * (tp.phi_max - tp.phi_min)]
        )
        return (got - target) / scale

    x = _newton_system(resid, x0, tol, max_iter)
    return _params_from_vector(x)
