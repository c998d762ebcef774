"""Closed-form asymptotics for waves with small oscillations.

The branch of 1-periodic waves bifurcating from the constant state phi == M
expands in the oscillation amplitude A (half the peak-to-trough height):

    phi(theta) = M + A cos(2 pi theta) + A^2 phi2(theta) + O(A^3),
    omega      = omega0(k, M) + A^2 omega2(k, M) + O(A^4),

with everything below expressed through q = (2 pi k)^2 M.  These formulas
serve as the analytic oracle for the finite-amplitude machinery: the three
characteristic speeds of the modulation system collapse to

    lambda_1   = 2 M + O(A^2),
    lambda_+/- = d omega0/dk +/- A sqrt(-n(k,M) d^2 omega0/dk^2) + O(A^2),

so the sign of d^2 omega0/dk^2, i.e. of q - 3, decides between real speeds
(hyperbolic) and a conjugate pair (elliptic, modulationally unstable).
The hyperbolic label is necessary for stability, never sufficient: the first
order in the Bloch parameter only pins the tangency of the spectral curves.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import AmplitudeTooLarge, DomainError
from .potential import WaveParams
from .quadrature import WaveProfile
from .reparam import _stokes_guess

__all__ = [
    "StokesData",
    "omega_expansion",
    "stokes_profile",
    "stokes_data",
    "asymptotic_speeds",
    "mi_threshold",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class StokesData:
    """Small-oscillation expansion data at (k, M, A)."""

    k: float
    M: float
    A: float
    omega0: float
    omega2: float
    domega0_dk: float
    d2omega0_dk2: float
    nval: float
    lambda1: complex
    lambda_plus: complex
    lambda_minus: complex

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "M": self.M,
            "A": self.A,
            "omega0": self.omega0,
            "omega2": self.omega2,
            "domega0_dk": self.domega0_dk,
            "d2omega0_dk2": self.d2omega0_dk2,
            "n": self.nval,
            "lambda1": [self.lambda1.real, self.lambda1.imag],
            "lambda_plus": [self.lambda_plus.real, self.lambda_plus.imag],
            "lambda_minus": [self.lambda_minus.real, self.lambda_minus.imag],
        }


def _check_km(k: float, M: float):
    if not (k > 0 and M > 0):
        raise DomainError(f"need k > 0 and M > 0, got k={k}, M={M}")


def omega_expansion(k: float, M: float) -> tuple[float, float, float, float]:
    """Return (omega0, omega2, d omega0/dk, d^2 omega0/dk^2)."""
    _check_km(k, M)
    q = (TWO_PI * k) ** 2 * M
    omega0 = 2.0 * k * M / (q + 1.0)
    omega2 = (1.0 - 8.0 * q) / (12.0 * TWO_PI**2 * k * M**2 * (q + 1.0))
    d1 = 2.0 * M * (1.0 - q) / (q + 1.0) ** 2
    d2 = 16.0 * math.pi**2 * k * M**2 * (q - 3.0) / (q + 1.0) ** 3
    return omega0, omega2, d1, d2


def nval(k: float, M: float) -> float:
    """Positive coefficient entering the speed splitting."""
    _check_km(k, M)
    q = (TWO_PI * k) ** 2 * M
    return (8.0 * q**2 + 5.0 * q + 3.0) / (
        12.0 * TWO_PI**2 * k * M**2 * (q + 1.0) * (q + 3.0)
    )


def stokes_profile(k: float, M: float, A: float, n: int = 256) -> WaveProfile:
    """Second-order small-oscillation profile on the uniform theta grid.

    Truncates phi = M + A cos(2 pi theta) + A^2 phi2; accurate to O(A^3).
    Enforces A < M/10.
    """
    _check_km(k, M)
    if n < 16 or n % 2:
        raise DomainError(f"grid size must be even and >= 16, got {n}")
    if abs(A) >= M / 10.0:
        raise AmplitudeTooLarge(f"|A|={abs(A)} too large for the expansion (need < M/10)")
    q = (TWO_PI * k) ** 2 * M
    omega0, omega2, _, _ = omega_expansion(k, M)
    omega = omega0 + A**2 * omega2
    c = omega / k
    c2 = (q + 1.0) / (12.0 * TWO_PI**2 * k**2 * M**2)  # cos(4 pi theta) weight
    theta = np.arange(n) / n
    values = M + A * np.cos(TWO_PI * theta) + A**2 * c2 * np.cos(2.0 * TWO_PI * theta)
    deriv = -A * TWO_PI * np.sin(TWO_PI * theta) - A**2 * c2 * 2.0 * TWO_PI * np.sin(
        2.0 * TWO_PI * theta
    )
    qmean = float(np.mean((values + k**2 * deriv**2) / values**2))
    params = _stokes_guess(k, M, abs(A)) if A != 0 else None
    if params is None:
        from .quadrature import constant_state

        return constant_state(M, k, c, n)
    # keep the expansion's own speed rather than the guess's
    params = WaveParams(a=params.a, E=params.E, c=c)
    return WaveProfile(
        n=n,
        theta=theta,
        values=values,
        deriv=deriv,
        k=k,
        c=c,
        params=params,
        mass=M / k,
        qinv=qmean / k,
    )


def asymptotic_speeds(k: float, M: float, A: float) -> tuple[complex, complex, complex]:
    """Truncated characteristic speeds (lambda1, lambda+, lambda-).

    The pair picks up an imaginary part exactly when q = (2 pi k)^2 M > 3.
    """
    _check_km(k, M)
    if A < 0:
        raise DomainError(f"amplitude must be >= 0, got {A}")
    _, _, d1, d2 = omega_expansion(k, M)
    split = A * cmath.sqrt(-nval(k, M) * d2)
    return complex(2.0 * M), d1 + split, d1 - split


def stokes_data(k: float, M: float, A: float) -> StokesData:
    """Bundle the expansion quantities at (k, M, A)."""
    omega0, omega2, d1, d2 = omega_expansion(k, M)
    l1, lp, lm = asymptotic_speeds(k, M, A)
    return StokesData(
        k=k,
        M=M,
        A=A,
        omega0=omega0,
        omega2=omega2,
        domega0_dk=d1,
        d2omega0_dk2=d2,
        nval=nval(k, M),
        lambda1=l1,
        lambda_plus=lp,
        lambda_minus=lm,
    )


def mi_threshold(M: float) -> float:
    """Wavenumber k* where small waves switch from hyperbolic to elliptic.

    Instability for (2 pi k)^2 > 3/M, so k* = sqrt(3/M) / (2 pi).
    """
    if not M > 0:
        raise DomainError(f"need M > 0, got {M}")
    return math.sqrt(3.0 / M) / TWO_PI
