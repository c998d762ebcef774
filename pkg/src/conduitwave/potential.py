"""Effective potential controlling periodic traveling waves.

A traveling profile phi(z) of the conduit equation integrates twice to the
energy relation

    (1/2) (phi')**2 + V(phi; a, c) = E,      V(phi; a, c) = phi**2 ln(phi)/c
                                                            + a phi**2 + phi,

with integration constants (a, E) and wave speed c > 0.  Strictly positive
periodic orbits require V to have a positive local minimum, which happens
exactly when a < zeta(c) with zeta(c) = ln(2/c)/c - 3/(2c).  In that case
V' has two positive roots 0 < phi1 < phi2 (local max and local min of V),
and orbits exist for energies strictly between V(phi2) and V(phi1).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConditioningWarning, DomainError, RegionError, RootNotConverged

__all__ = [
    "WaveParams",
    "CriticalPair",
    "effective_potential",
    "potential_derivatives",
    "zeta",
    "critical_points",
    "energy_range",
    "in_region",
]

# Waves closer than this to the saddle merger are too degenerate to trust.
DEGENERATE_GAP = 1e-6

# |V'| tolerance for the critical-point solve.
_ROOT_FTOL = 1e-13
_ROOT_MAX_ITER = 200


@dataclass(frozen=True)
class WaveParams:
    """Wave parameters (a, E, c): integration constants and wave speed."""

    a: float
    E: float
    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise DomainError(f"wave speed must be positive, got c={self.c}")


@dataclass(frozen=True)
class CriticalPair:
    """Positive critical points of V: local max `phi1` < local min `phi2`.

    `ill_conditioned` is set when the pair is within `DEGENERATE_GAP` of the
    saddle merger; downstream quadrature refuses such inputs.
    """

    phi1: float
    phi2: float
    ill_conditioned: bool = False


def _check_phi(phi):
    if np.any(np.asarray(phi) <= 0):
        raise DomainError("potential is only defined for phi > 0")


def _V(phi, a, c):
    phi = np.asarray(phi, dtype=float)
    return phi**2 * np.log(phi) / c + a * phi**2 + phi


def _V1(phi, a, c):
    """First derivative of V with respect to phi."""
    phi = np.asarray(phi, dtype=float)
    return 2.0 * phi * np.log(phi) / c + phi / c + 2.0 * a * phi + 1.0


def _V2(phi, a, c):
    """Second derivative of V with respect to phi."""
    phi = np.asarray(phi, dtype=float)
    return 2.0 / c * (np.log(phi) + 1.5 + a * c)


def effective_potential(phi, params: WaveParams):
    """Evaluate V(phi; a, c).  Accepts scalars or arrays, phi > 0."""
    _check_phi(phi)
    out = _V(phi, params.a, params.c)
    return float(out) if np.isscalar(phi) else out


def potential_derivatives(phi, params: WaveParams):
    """Return (V', V'') at phi.  Accepts scalars or arrays, phi > 0."""
    _check_phi(phi)
    v1 = _V1(phi, params.a, params.c)
    v2 = _V2(phi, params.a, params.c)
    if np.isscalar(phi):
        return float(v1), float(v2)
    return v1, v2


def zeta(c: float) -> float:
    """Existence threshold: V' has two positive roots iff a < zeta(c)."""
    if not c > 0:
        raise DomainError(f"zeta requires c > 0, got {c}")
    return math.log(2.0 / c) / c - 1.5 / c


def _bracketed_newton(f, df, lo, hi, ftol=_ROOT_FTOL, max_iter=_ROOT_MAX_ITER):
    """Newton iteration safeguarded by bisection on a sign-changing bracket.

    `f(lo)` and `f(hi)` must have opposite signs; f is assumed monotone
    enough that the bracket always contains the root.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise RootNotConverged(f"no sign change on bracket [{lo}, {hi}]")
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        fx = f(x)
        if abs(fx) < ftol:
            return x
        if fx * flo > 0:
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        if hi - lo <= 4.0 * np.finfo(float).eps * max(abs(lo), abs(hi)):
            return x  # bracket collapsed to machine resolution in x
        d = df(x)
        step_ok = d != 0.0
        if step_ok:
            x_new = x - fx / d
            step_ok = lo < x_new < hi
        if not step_ok:
            x_new = 0.5 * (lo + hi)
        if x_new == x:  # stagnated at roundoff level
            return x
        x = x_new
    if abs(f(x)) < 100 * ftol:
        return x
    raise RootNotConverged(
        f"root solve stalled at x={x}, |f|={abs(f(x)):.3e} after {max_iter} iterations"
    )


def critical_points(params: WaveParams) -> CriticalPair | None:
    """Locate the two positive roots of V', or None when a >= zeta(c).

    The derivative V' decreases on (0, phi_plus) and increases beyond, where
    phi_plus = exp(-(a c + 3/2)) is its minimum; both roots are bracketed and
    solved by safeguarded Newton.
    """
    a, c = params.a, params.c
    if a >= zeta(c):
        return None
    phi_plus = math.exp(-(a * c + 1.5))

    def f(x):
        return float(_V1(x, a, c))

    def df(x):
        return float(_V2(x, a, c))

    # V' -> 1 as phi -> 0+, so shrinking from phi_plus finds a positive value.
    lo = phi_plus
    for _ in range(2000):
        lo *= 0.5
        if f(lo) > 0:
            break
    else:
        raise RootNotConverged("could not bracket the lower critical point")
    phi1 = _bracketed_newton(f, df, lo, phi_plus)

    hi = 2.0 * phi_plus
    for _ in range(2000):
        if f(hi) > 0:
            break
        hi *= 2.0
    else:
        raise RootNotConverged("could not bracket the upper critical point")
    phi2 = _bracketed_newton(f, df, phi_plus, hi)

    return CriticalPair(phi1=phi1, phi2=phi2, ill_conditioned=(phi2 - phi1) < DEGENERATE_GAP)


def energy_range(params: WaveParams) -> tuple[float, float]:
    """Open energy interval (V(phi2), V(phi1)) admitting periodic waves."""
    pair = critical_points(params)
    if pair is None:
        raise RegionError(
            f"no periodic waves: a={params.a} >= zeta(c)={zeta(params.c):.6g}"
        )
    e_min = float(_V(pair.phi2, params.a, params.c))
    e_max = float(_V(pair.phi1, params.a, params.c))
    return e_min, e_max


def in_region(params: WaveParams) -> bool:
    """True when (a, E, c) admits a strictly positive periodic orbit."""
    if params.a >= zeta(params.c):
        return False
    e_min, e_max = energy_range(params)
    return e_min < params.E < e_max


def well_position(params: WaveParams) -> float:
    """Relative depth (E - E_min)/(E_max - E_min); warns near either end."""
    e_min, e_max = energy_range(params)
    pos = (params.E - e_min) / (e_max - e_min)
    if 0.999 < pos < 1.0:
        warnings.warn(
            "energy within 0.1% of the solitary-wave limit; integrals are "
            "ill-conditioned there",
            ConditioningWarning,
            stacklevel=2,
        )
    return pos
