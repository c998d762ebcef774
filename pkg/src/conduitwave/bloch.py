"""Fourier-collocation Bloch spectra of the linearized operators.

Linearizing the traveling-frame evolution about a 1-periodic wave phi gives
the generalized problem G[phi] v_t = k d/dtheta L[phi] v with

    G[phi] f = f + k^2 phi'' f - k^2 phi f'',
    L[phi] f = c f - 2 phi f - k^2 c phi'' f + 2 k^2 c phi' f' - k^2 c phi f'',

so the spectral problem concerns A[phi] = G^{-1} k d/dtheta L.  Sideband
perturbations enter through the Bloch rotation A_xi = e^{-i xi theta} A
e^{i xi theta}, realized here by shifting the spectral differentiation
matrices D -> D + i xi.  The whole-line spectrum is the union over
xi in [-pi, pi) of the 1-periodic eigenvalues of A_xi.

At xi = 0 the origin is a triple eigenvalue (kernel phi', a combination of
the mass and Q profile derivatives, plus one Jordan vector).  For small xi
it splits into three C^1 curves lambda_j(xi) = i k xi mu_j(0) + o(xi);
`origin_slopes` extracts the mu_j(0) by tracking the three smallest
eigenvalues across a few xi values and extrapolating lambda/(i k xi) to
xi -> 0.  Those slopes are the quantity the modulation matrix predicts:
mu_j(0) = eig(D) + c.  The projection construction behind that identity is
never formed; the finite-xi fit plus its residual replaces it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np

from .errors import (
    DomainError,
    EigenSolveError,
    IllConditioned,
    TrackingAmbiguous,
)
from .quadrature import WaveProfile, resample
from .reparam import ProfilePartials

__all__ = [
    "OperatorStack",
    "BlochResult",
    "KernelReport",
    "assemble_operators",
    "bloch_spectrum",
    "origin_slopes",
    "kernel_diagnostics",
    "DEFAULT_XI_LIST",
]

DEFAULT_XI_LIST = (-1e-3, -5e-4, 5e-4, 1e-3)
_TIE_TOL = 1e-9
_COND_LIMIT = 1e12

# On an even grid the sawtooth (Nyquist) mode is annihilated by the odd-order
# spectral derivative, so the discretization carries one spurious eigenvalue
# branch (slope close to c) on top of the three physical curves.  Candidates
# whose eigenvector puts more than this energy fraction into the Nyquist mode
# are discarded during slope extraction.
_SAW_ENERGY_LIMIT = 0.5


@dataclass
class OperatorStack:
    """Dense collocation matrices at one Bloch parameter."""

    n: int
    xi: float
    k: float
    c: float
    G_mat: np.ndarray
    L_mat: np.ndarray
    A_mat: np.ndarray
    cond_G: float


@dataclass
class BlochResult:
    """Per-xi eigenvalue triples near the origin and the fitted slopes."""

    xis: list[float]
    triples: list[np.ndarray]
    slopes: np.ndarray
    fit_residual: float

    def to_dict(self) -> dict:
        return {
            "xis": list(self.xis),
            "triples": [[[z.real, z.imag] for z in t] for t in self.triples],
            "slopes": [[z.real, z.imag] for z in self.slopes],
            "residual": self.fit_residual,
        }


@lru_cache(maxsize=16)
def _diff_matrices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Spectral differentiation matrices on the 1-periodic n-point grid.

    D1 zeroes the Nyquist mode (odd operator); D2 keeps it.
    """
    eye = np.eye(n)
    spec = np.fft.fft(eye, axis=0)
    modes = np.fft.fftfreq(n, 1.0 / n)
    m1 = 2j * np.pi * modes
    m1[n // 2] = 0.0
    m2 = (2j * np.pi * modes) ** 2
    d1 = np.real(np.fft.ifft(m1[:, None] * spec, axis=0))
    d2 = np.real(np.fft.ifft(m2[:, None] * spec, axis=0))
    return d1, d2


def assemble_operators(profile: WaveProfile, xi: float, n: int | None = None) -> OperatorStack:
    """Build G, L and A = G^{-1} k (D + i xi) L at Bloch parameter xi.

    The profile is trigonometrically resampled when `n` differs from its
    grid.  A is formed by LU solve against G, never by explicit inversion.
    """
    if n is None:
        n = profile.n
    if n < 32 or n % 2:
        raise DomainError(f"operator grid must be even and >= 32, got {n}")
    if not -math.pi <= xi <= math.pi:
        raise DomainError(f"Bloch parameter must lie in [-pi, pi], got {xi}")
    w = resample(profile, n)
    d1, d2 = _diff_matrices(n)
    k, c = w.k, w.c
    phi = w.values
    dphi = w.deriv
    ddphi = w.second_deriv()

    if xi == 0.0:
        eye = np.eye(n)
        dx1, dx2 = d1, d2
    else:
        eye = np.eye(n, dtype=complex)
        dx1 = d1 + 1j * xi * eye
        dx2 = d2 + 2j * xi * d1 - xi**2 * eye

    G = eye + k**2 * np.diag(ddphi) - k**2 * (phi[:, None] * dx2)
    L = (
        c * eye
        - 2.0 * np.diag(phi)
        - k**2 * c * np.diag(ddphi)
        + 2.0 * k**2 * c * (dphi[:, None] * dx1)
        - k**2 * c * (phi[:, None] * dx2)
    )
    cond = float(np.linalg.cond(G))
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise IllConditioned(f"cond(G) = {cond:.3e} exceeds {_COND_LIMIT:.0e}")
    rhs = k * ((d1 if xi == 0.0 else d1 + 1j * xi * eye) @ L)
    A = np.linalg.solve(G, rhs)
    return OperatorStack(n=n, xi=xi, k=k, c=c, G_mat=G, L_mat=L, A_mat=A, cond_G=cond)


def bloch_spectrum(
    profile: WaveProfile,
    xi: float,
    n: int | None = None,
    stack: OperatorStack | None = None,
) -> np.ndarray:
    """All eigenvalues of A_xi, sorted by modulus (then lexicographically)."""
    if stack is None:
        stack = assemble_operators(profile, xi, n)
    try:
        eigs = np.linalg.eigvals(stack.A_mat)
    except np.linalg.LinAlgError as exc:
        raise EigenSolveError(f"dense eigenvalue solve failed: {exc}") from exc
    order = np.lexsort((eigs.imag, eigs.real, np.abs(eigs)))
    return eigs[order]


def _origin_triple(stack: OperatorStack) -> np.ndarray:
    """Three smallest physical eigenvalues of A, sawtooth artifact excluded."""
    try:
        eigs, vecs = np.linalg.eig(stack.A_mat)
    except np.linalg.LinAlgError as exc:
        raise EigenSolveError(f"dense eigenvalue solve failed: {exc}") from exc
    saw = np.empty(stack.n)
    saw[::2], saw[1::2] = 1.0, -1.0
    saw /= math.sqrt(stack.n)
    frac = np.abs(saw @ vecs) ** 2 / np.sum(np.abs(vecs) ** 2, axis=0)
    keep = frac < _SAW_ENERGY_LIMIT
    eigs = eigs[keep]
    order = np.lexsort((eigs.imag, eigs.real, np.abs(eigs)))
    return eigs[order][:3]


def _match_triple(candidates: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Permute `candidates` to best follow `reference`; ties are fatal."""
    costs = []
    for perm in permutations(range(3)):
        costs.append((float(np.sum(np.abs(candidates[list(perm)] - reference))), perm))
    costs.sort(key=lambda t: t[0])
    best, second = costs[0], costs[1]
    if second[0] - best[0] < _TIE_TOL * (1.0 + best[0]):
        raise TrackingAmbiguous(
            f"eigenvalue matching tie: costs {best[0]:.3e} vs {second[0]:.3e}"
        )
    return candidates[list(best[1])]


def origin_slopes(
    profile: WaveProfile,
    xi_list=DEFAULT_XI_LIST,
    n: int | None = None,
) -> BlochResult:
    """Fit the linear-in-xi coefficients mu_j(0) of the three origin curves.

    For each xi the three eigenvalues nearest zero are divided by i k xi,
    matched across xi by nearest-neighbor continuation, and extrapolated to
    xi = 0 by a least-squares line; the fit residual is returned alongside.
    """
    xis = sorted((float(x) for x in xi_list), key=lambda x: (abs(x), x))
    if len(xis) < 2:
        raise DomainError("need at least two Bloch parameters to fit slopes")
    if any(x == 0.0 for x in xis):
        raise DomainError("xi = 0 carries no slope information; use nonzero xi")
    k = profile.k
    triples = {}
    scaled = {}
    for xi in xis:
        stack = assemble_operators(profile, xi, n)
        lam = _origin_triple(stack)
        triples[xi] = lam
        scaled[xi] = lam / (1j * k * xi)

    ref = np.array(sorted(scaled[xis[0]], key=lambda z: (z.real, z.imag)))
    ordered = {xis[0]: ref}
    for xi in xis[1:]:
        ordered[xi] = _match_triple(scaled[xi], ref)

    xs = np.array(xis)
    design = np.stack([np.ones_like(xs), xs], axis=1)
    slopes = np.empty(3, dtype=complex)
    residual = 0.0
    for j in range(3):
        ys = np.array([ordered[xi][j] for xi in xis])
        coef, *_ = np.linalg.lstsq(design.astype(complex), ys, rcond=None)
        slopes[j] = coef[0]
        residual = max(residual, float(np.max(np.abs(design @ coef - ys))))
    order = np.lexsort((slopes.imag, slopes.real))
    return BlochResult(
        xis=xis,
        triples=[triples[xi] for xi in xis],
        slopes=slopes[order],
        fit_residual=residual,
    )


@dataclass
class KernelReport:
    """Discrete residuals of the generalized-kernel relations at xi = 0.

    All norms are discrete L2 over one period.  `gram` holds the inner
    products of the adjoint kernel {1, G^T phi^-2} against
    {phi', d phi/d mean, d phi/d qmean}; the exact pattern is
    ((0, 1, 0), (0, 0, -1)).
    """

    translation: float          # ||A0 phi'||
    mean_chain: float           # ||A0 phi_mean + k c_mean phi'||
    qmean_chain: float          # ||A0 phi_qmean + k c_qmean phi'||
    wavenumber_chain: float     # ||A0 phi_k + k c_k phi' + 2k^2 c G^{-1}((phi')^2 - phi phi'')'||
    adjoint_const: float        # ||A0^T 1||
    adjoint_weight: float       # ||A0^T (G^T phi^-2)||
    gram: np.ndarray            # 2 x 3
    mean_phi_k: float           # <1, phi_k>
    weight_phi_k_residual: float  # <G^T phi^-2, phi_k> - 2k <phi^-2, (phi')^2>
    cond_G: float

    def to_dict(self) -> dict:
        return {
            "translation": self.translation,
            "mean_chain": self.mean_chain,
            "qmean_chain": self.qmean_chain,
            "wavenumber_chain": self.wavenumber_chain,
            "adjoint_const": self.adjoint_const,
            "adjoint_weight": self.adjoint_weight,
            "gram": self.gram.tolist(),
            "mean_phi_k": self.mean_phi_k,
            "weight_phi_k_residual": self.weight_phi_k_residual,
            "cond_G": self.cond_G,
        }


def _l2(v: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.abs(v) ** 2)))


def kernel_diagnostics(profile: WaveProfile, partials: ProfilePartials) -> KernelReport:
    """Check the kernel and Jordan-chain relations on the discrete grid.

    `partials` must be built on the same grid as `profile`.
    """
    if partials.base.n != profile.n:
        raise DomainError(
            f"partials grid ({partials.base.n}) does not match profile ({profile.n})"
        )
    stack = assemble_operators(profile, 0.0)
    A0, G = stack.A_mat, stack.G_mat
    d1, _ = _diff_matrices(profile.n)
    k, c = profile.k, profile.c
    phi = profile.values
    dphi = profile.deriv
    ddphi = profile.second_deriv()

    ones = np.ones(profile.n)
    weight = G.T @ phi**-2

    chain_k = (
        A0 @ partials.wrt_k
        + k * partials.dc_dk * dphi
        + 2.0 * k**2 * c * np.linalg.solve(G, d1 @ (dphi**2 - phi * ddphi))
    )
    gram = np.array(
        [
            [np.mean(ones * v) for v in (dphi, partials.wrt_mean, partials.wrt_qmean)],
            [np.mean(weight * v) for v in (dphi, partials.wrt_mean, partials.wrt_qmean)],
        ]
    )
    return KernelReport(
        translation=_l2(A0 @ dphi),
        mean_chain=_l2(A0 @ partials.wrt_mean + k * partials.dc_dmean * dphi),
        qmean_chain=_l2(A0 @ partials.wrt_qmean + k * partials.dc_dqmean * dphi),
        wavenumber_chain=_l2(chain_k),
        adjoint_const=_l2(A0.T @ ones),
        adjoint_weight=_l2(A0.T @ weight),
        gram=gram,
        mean_phi_k=float(np.mean(partials.wrt_k)),
        weight_phi_k_residual=float(
            np.mean(weight * partials.wrt_k) - 2.0 * k * np.mean(phi**-2 * dphi**2)
        ),
        cond_G=stack.cond_G,
    )
