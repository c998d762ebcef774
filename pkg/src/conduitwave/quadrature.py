"""Period, mass and Q integrals with turning-point singularities; profiles.

All three wave integrals have the form  int f(phi) / sqrt(E - V(phi)) dphi
over [phi_min, phi_max], with inverse-square-root singularities at both
endpoints.  The substitution

    phi(s) = mid + hw * cos(pi s),      s in [0, 1],
    mid = (phi_min + phi_max)/2,        hw = (phi_max - phi_min)/2,

absorbs both singularities: writing E - V = (phi - phi_min)(phi_max - phi) g(phi)
with g smooth and positive, sqrt(E - V) = hw sin(pi s) sqrt(g) cancels the
Jacobian dphi = -hw pi sin(pi s) ds exactly, leaving smooth integrands in s
that Gauss-Legendre nodes resolve spectrally.  g itself is evaluated through
a cancellation-free difference quotient of V anchored at the turning points.

The wave profile is reconstructed from the same substitution: the cumulative
half-period map z(s) = pi * int_0^s (2 g)**(-1/2) is represented by a
Chebyshev series and inverted by Newton at the uniform grid, giving samples
that are smooth functions of (a, E, c) — a property the finite-difference
layers upstream rely on.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.chebyshev import Chebyshev

from .errors import (
    ConditioningWarning,
    DomainError,
    EnergyDriftError,
    OdeNotConverged,
    QuadratureNotConverged,
    RegionError,
)
from .potential import (
    DEGENERATE_GAP,
    CriticalPair,
    WaveParams,
    _bracketed_newton,
    _V,
    _V1,
    _V2,
    critical_points,
    zeta,
)

__all__ = [
    "TurningPoints",
    "WaveProfile",
    "turning_points",
    "period",
    "mass",
    "q_invariant",
    "wave_integrals",
    "reconstruct_profile",
    "profile_resolution",
    "constant_state",
    "resample",
]

# Relative tolerance used to recognize E sitting on the region boundary.
_BOUNDARY_RTOL = 1e-13

_DEFAULT_QUAD_RTOL = 1e-13
_MIN_NODES = 32
_MAX_NODES = 8192


@dataclass(frozen=True)
class TurningPoints:
    """Roots of E - V bounding the orbit: phi_min < phi_max."""

    phi_min: float
    phi_max: float

    @property
    def degenerate(self) -> bool:
        return self.phi_min == self.phi_max


@dataclass(frozen=True)
class IntegralValues:
    """Period, mass and Q with the quadrature error estimate and node count."""

    period: float
    mass: float
    qinv: float
    error: float
    n_nodes: int


@dataclass
class WaveProfile:
    """One periodic wave sampled on the uniform rescaled grid theta = k z.

    `values` and `deriv` hold phi and dphi/dtheta at theta_i = i/n; the
    profile is even with its maximum at theta = 0.  `mass` and `qinv` are the
    conserved quantities per spatial period (length T = 1/k in z); the
    per-unit-theta versions are `mean = k * mass` and `qmean = k * qinv`.
    """

    n: int
    theta: np.ndarray
    values: np.ndarray
    deriv: np.ndarray
    k: float
    c: float
    params: WaveParams
    mass: float
    qinv: float

    @property
    def omega(self) -> float:
        return self.k * self.c

    @property
    def mean(self) -> float:
        return self.k * self.mass

    @property
    def qmean(self) -> float:
        return self.k * self.qinv

    def second_deriv(self) -> np.ndarray:
        """d2 phi / dtheta2 from the profile ODE: -V'(phi) / k**2."""
        return -_V1(self.values, self.params.a, self.params.c) / self.k**2

    def energy_residual(self, spectral: bool = False) -> float:
        """Sup-norm of (1/2)(k phi')**2 + V(phi) - E over the grid.

        With `spectral=True` the derivative is recomputed by Fourier
        differentiation of `values`, making the check independent of the
        stored `deriv`.
        """
        if spectral:
            modes = np.fft.rfftfreq(self.n, 1.0 / self.n)
            dphi = np.fft.irfft(2j * np.pi * modes * np.fft.rfft(self.values), self.n)
        else:
            dphi = self.deriv
        res = 0.5 * (self.k * dphi) ** 2 + _V(self.values, self.params.a, self.params.c)
        return float(np.max(np.abs(res - self.params.E)))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "c": self.c,
            "a": self.params.a,
            "E": self.params.E,
            "M": self.mass,
            "Q": self.qinv,
            "values": self.values.tolist(),
            "deriv": self.deriv.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WaveProfile":
        n = int(d["n"])
        return cls(
            n=n,
            theta=np.arange(n) / n,
            values=np.asarray(d["values"], dtype=float),
            deriv=np.asarray(d["deriv"], dtype=float),
            k=float(d["k"]),
            c=float(d["c"]),
            params=WaveParams(a=float(d["a"]), E=float(d["E"]), c=float(d["c"])),
            mass=float(d["M"]),
            qinv=float(d["Q"]),
        )


def _dq(phi, psi, a, c):
    """Difference quotient (V(phi) - V(psi)) / (phi - psi), cancellation-free.

    Uses phi^2 ln phi - psi^2 ln psi = phi^2 log1p(d/psi) + (phi+psi) d ln psi
    so every term carries an explicit factor of d = phi - psi.  Equals
    V'(psi) in the limit phi -> psi.
    """
    phi = np.asarray(phi, dtype=float)
    d = phi - psi
    s = phi + psi
    safe = np.where(d == 0.0, 1.0, d)
    ratio = np.where(d == 0.0, psi, phi**2 * np.log1p(d / psi) / safe)
    return (ratio + s * math.log(psi)) / c + a * s + 1.0


@dataclass(frozen=True)
class _Orbit:
    params: WaveParams
    phi_min: float
    phi_max: float

    @property
    def mid(self) -> float:
        return 0.5 * (self.phi_min + self.phi_max)

    @property
    def hw(self) -> float:
        return 0.5 * (self.phi_max - self.phi_min)

    def phi_of_s(self, s):
        return self.mid + self.hw * np.cos(np.pi * np.asarray(s, dtype=float))

    def g_of_s(self, s):
        """Return (phi, g) at parameter s, with g = (E - V)/((phi-min)(max-phi)).

        Anchors the difference quotient at whichever turning point is closer
        so the explicit denominator stays well separated from zero.
        """
        s = np.asarray(s, dtype=float)
        phi = self.phi_of_s(s)
        a, c = self.params.a, self.params.c
        g = np.empty_like(phi)
        up = s <= 0.5  # phi >= mid, anchor at phi_max
        g[up] = _dq(phi[up], self.phi_max, a, c) / (phi[up] - self.phi_min)
        g[~up] = -_dq(phi[~up], self.phi_min, a, c) / (self.phi_max - phi[~up])
        return phi, g


def _region_data(params: WaveParams):
    """Critical pair and energy window, raising RegionError when empty."""
    pair = critical_points(params)
    if pair is None:
        raise RegionError(
            f"a={params.a} >= zeta(c)={zeta(params.c):.6g}: no periodic orbits"
        )
    if pair.ill_conditioned:
        raise RegionError(
            f"critical points nearly merged (gap below {DEGENERATE_GAP}); "
            "refusing ill-conditioned quadrature"
        )
    e_min = float(_V(pair.phi2, params.a, params.c))
    e_max = float(_V(pair.phi1, params.a, params.c))
    return pair, e_min, e_max


def turning_points(params: WaveParams) -> TurningPoints:
    """Bracketing roots of E - V around the potential minimum.

    E on the lower boundary collapses to the degenerate constant orbit; E on
    the upper boundary returns the homoclinic pair (phi_min = phi1).  Both
    boundary cases emit a ConditioningWarning.
    """
    pair, e_min, e_max = _region_data(params)
    E = params.E
    scale = max(1.0, abs(e_min), abs(e_max))
    if E < e_min - _BOUNDARY_RTOL * scale or E > e_max + _BOUNDARY_RTOL * scale:
        raise RegionError(
            f"E={E} outside the admissible window ({e_min:.12g}, {e_max:.12g})"
        )
    a, c = params.a, params.c
    if abs(E - e_min) <= _BOUNDARY_RTOL * scale:
        warnings.warn("E at the lower boundary: degenerate constant orbit",
                      ConditioningWarning, stacklevel=2)
        return TurningPoints(pair.phi2, pair.phi2)

    def f(x):
        return E - float(_V(x, a, c))

    def df(x):
        return -float(_V1(x, a, c))

    if abs(E - e_max) <= _BOUNDARY_RTOL * scale:
        warnings.warn("E at the upper boundary: homoclinic (solitary) orbit",
                      ConditioningWarning, stacklevel=2)
        phi_lo = pair.phi1
    else:
        phi_lo = _bracketed_newton(f, df, pair.phi1, pair.phi2)

    hi = pair.phi2 + (pair.phi2 - phi_lo)
    for _ in range(200):
        if f(hi) < 0:
            break
        hi = pair.phi2 + 2.0 * (hi - pair.phi2)
    else:
        raise RegionError("could not bracket the upper turning point")
    phi_hi = _bracketed_newton(f, df, pair.phi2, hi)
    return TurningPoints(phi_lo, phi_hi)


@lru_cache(maxsize=32)
def _gauss_nodes(n: int):
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def _integrals_at(orbit: _Orbit, n_nodes: int):
    s, w = _gauss_nodes(n_nodes)
    phi, g = orbit.g_of_s(s)
    if np.any(g <= 0):
        raise QuadratureNotConverged("non-positive g encountered on the orbit")
    rg = 1.0 / np.sqrt(g)
    pref = math.sqrt(2.0) * math.pi
    T = pref * np.dot(w, rg)
    M = pref * np.dot(w, phi * rg)
    ekin = 2.0 * (orbit.hw * np.sin(np.pi * s)) ** 2 * g  # = 2 (E - V)
    Q = pref * np.dot(w, (phi + ekin) / phi**2 * rg)
    return np.array([T, M, Q])


def _make_orbit(params: WaveParams) -> _Orbit:
    tp = turning_points(params)
    if tp.degenerate:
        raise RegionError("degenerate orbit: wave integrals need E strictly "
                          "above the lower boundary")
    return _Orbit(params, tp.phi_min, tp.phi_max)


def wave_integrals(
    params: WaveParams,
    rtol: float = _DEFAULT_QUAD_RTOL,
    n_nodes: int | None = None,
    max_nodes: int = _MAX_NODES,
) -> IntegralValues:
    """Compute (T, M, Q) by adaptive node-doubling Gauss-Legendre quadrature.

    Passing `n_nodes` pins the rule to exactly that node count (no
    adaptivity); finite-difference callers use this to keep the result a
    smooth function of the parameters.
    """
    orbit = _make_orbit(params)
    if n_nodes is not None:
        vals = _integrals_at(orbit, n_nodes)
        return IntegralValues(*vals, error=np.nan, n_nodes=n_nodes)
    n = _MIN_NODES
    prev = _integrals_at(orbit, n)
    while n < max_nodes:
        n *= 2
        cur = _integrals_at(orbit, n)
        err = float(np.max(np.abs(cur - prev) / np.maximum(1.0, np.abs(cur))))
        if err < rtol:
            return IntegralValues(*cur, error=err, n_nodes=n)
        prev = cur
    raise QuadratureNotConverged(
        f"wave integrals did not settle below rtol={rtol} within {max_nodes} nodes"
    )


def period(params: WaveParams, **kw) -> float:
    """Fundamental period T of the orbit in the unscaled traveling variable."""
    return wave_integrals(params, **kw).period


def mass(params: WaveParams, **kw) -> float:
    """Mass per period, int_0^T phi dz."""
    return wave_integrals(params, **kw).mass


def q_invariant(params: WaveParams, **kw) -> float:
    """Second conserved quantity per period, int_0^T (phi + phi_z^2)/phi^2 dz."""
    return wave_integrals(params, **kw).qinv


def _degenerate_profile(params: WaveParams, n: int, pair: CriticalPair) -> WaveProfile:
    phi2 = pair.phi2
    T = 2.0 * math.pi / math.sqrt(float(_V2(phi2, params.a, params.c)))
    k = 1.0 / T
    return WaveProfile(
        n=n,
        theta=np.arange(n) / n,
        values=np.full(n, phi2),
        deriv=np.zeros(n),
        k=k,
        c=params.c,
        params=params,
        mass=T * phi2,
        qinv=T / phi2,
    )


_CHEB_DEGREES = (64, 128, 256, 512, 1024)


def _fit_halforbit(orbit: _Orbit, T: float, degrees) -> tuple[Chebyshev, int]:
    """Chebyshev series of the regularized orbit speed (2 g)**(-1/2) on [0,1].

    The antiderivative must reproduce the half period; that consistency check
    selects the degree.
    """

    def speed(s):
        _, g = orbit.g_of_s(np.atleast_1d(s))
        return 1.0 / np.sqrt(2.0 * g)

    for deg in degrees:
        cand = Chebyshev.interpolate(speed, deg, domain=[0.0, 1.0])
        z_end = math.pi * cand.integ(lbnd=0.0)(1.0)
        if abs(z_end - T / 2.0) <= 1e-11 * T:
            return cand, deg
    raise OdeNotConverged(
        "half-orbit map disagrees with the period integral; orbit unresolved"
    )


def profile_resolution(params: WaveParams, quad_rtol: float = _DEFAULT_QUAD_RTOL):
    """Adaptive (quadrature nodes, Chebyshev degree) resolving this orbit.

    Finite-difference callers evaluate all stencil points at the resolution
    chosen here so the whole pipeline varies smoothly with the parameters.
    """
    vals = wave_integrals(params, rtol=quad_rtol)
    orbit = _make_orbit(params)
    _, deg = _fit_halforbit(orbit, vals.period, _CHEB_DEGREES)
    return vals.n_nodes, deg


def reconstruct_profile(
    params: WaveParams,
    n: int = 256,
    quad_rtol: float = _DEFAULT_QUAD_RTOL,
    n_nodes: int | None = None,
    cheb_degree: int | None = None,
    energy_tol: float = 1e-9,
) -> WaveProfile:
    """Sample the even wave profile at theta_i = i/n, maximum at theta = 0.

    The half-orbit map z(s) is built as a Chebyshev antiderivative of the
    regularized speed and inverted by Newton per grid point; the derivative
    comes from the energy relation itself.  `n_nodes` and `cheb_degree` pin
    the internal resolutions (for smooth finite differencing); by default
    both are chosen adaptively.
    """
    if n < 16 or n % 2:
        raise DomainError(f"grid size must be even and >= 16, got {n}")
    pair, e_min, e_max = _region_data(params)
    scale = max(1.0, abs(e_min), abs(e_max))
    if abs(params.E - e_min) <= _BOUNDARY_RTOL * scale:
        return _degenerate_profile(params, n, pair)

    vals = wave_integrals(params, rtol=quad_rtol, n_nodes=n_nodes)
    T, M, Q = vals.period, vals.mass, vals.qinv
    orbit = _make_orbit(params)

    if cheb_degree is not None:

        def speed(s):
            _, g = orbit.g_of_s(np.atleast_1d(s))
            return 1.0 / np.sqrt(2.0 * g)

        w_ch = Chebyshev.interpolate(speed, cheb_degree, domain=[0.0, 1.0])
    else:
        w_ch, _ = _fit_halforbit(orbit, T, _CHEB_DEGREES)
    z_ch = math.pi * w_ch.integ(lbnd=0.0)

    half = n // 2
    idx = np.arange(1, half)
    target = idx / n * T
    s = 2.0 * idx / n  # linear initial guess
    converged = False
    for _ in range(60):
        resid = z_ch(s) - target
        s = np.clip(s - resid / (math.pi * w_ch(s)), 0.0, 1.0)
        if np.max(np.abs(resid)) <= 1e-13 * T:
            converged = True
            break
    if not converged:
        raise OdeNotConverged("Newton inversion of the half-orbit map stalled")

    phi_in, g_in = orbit.g_of_s(s)
    values = np.empty(n)
    deriv = np.empty(n)
    values[0], deriv[0] = orbit.phi_max, 0.0
    values[half], deriv[half] = orbit.phi_min, 0.0
    values[idx] = phi_in
    deriv[idx] = -T * math.sqrt(2.0) * orbit.hw * np.sin(np.pi * s) * np.sqrt(g_in)
    values[n - idx] = phi_in
    deriv[n - idx] = -deriv[idx]

    profile = WaveProfile(
        n=n,
        theta=np.arange(n) / n,
        values=values,
        deriv=deriv,
        k=1.0 / T,
        c=params.c,
        params=params,
        mass=M,
        qinv=Q,
    )
    res = profile.energy_residual()
    if res > energy_tol * max(1.0, abs(params.E)):
        raise EnergyDriftError(
            f"energy residual {res:.3e} exceeds tolerance on the reconstructed orbit"
        )
    return profile


def constant_state(value: float, k: float, c: float, n: int = 128) -> WaveProfile:
    """Constant profile phi == value as an equilibrium wave.

    Chooses the integration constants so that V'(value; a, c) = 0 and
    E = V(value; a, c), making the constant an exact solution for any
    speed c > 0 and nominal wavenumber k > 0.
    """
    if value <= 0 or k <= 0:
        raise DomainError("constant state needs value > 0 and k > 0")
    a = -(2.0 * value * math.log(value) / c + value / c + 1.0) / (2.0 * value)
    E = float(_V(value, a, c))
    params = WaveParams(a=a, E=E, c=c)
    return WaveProfile(
        n=n,
        theta=np.arange(n) / n,
        values=np.full(n, float(value)),
        deriv=np.zeros(n),
        k=k,
        c=c,
        params=params,
        mass=value / k,
        qinv=1.0 / (k * value),
    )


def resample(profile: WaveProfile, n: int) -> WaveProfile:
    """Trigonometric resampling of a profile onto an n-point grid."""
    if n == profile.n:
        return profile
    if n < 16 or n % 2:
        raise DomainError(f"grid size must be even and >= 16, got {n}")

    def trig(y, m):
        coef = np.fft.rfft(y)
        out = np.zeros(m // 2 + 1, dtype=complex)
        ncopy = min(len(coef), len(out))
        out[:ncopy] = coef[:ncopy]
        return np.fft.irfft(out, m) * (m / len(y))

    return WaveProfile(
        n=n,
        theta=np.arange(n) / n,
        values=trig(profile.values, n),
        deriv=trig(profile.deriv, n),
        k=profile.k,
        c=profile.c,
        params=profile.params,
        mass=profile.mass,
        qinv=profile.qinv,
    )
