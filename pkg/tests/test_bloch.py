import math

import numpy as np
import pytest

from conduitwave.bloch import (
    DEFAULT_XI_LIST,
    _match_triple,
    assemble_operators,
    bloch_spectrum,
    kernel_diagnostics,
    origin_slopes,
)
from conduitwave.errors import DomainError, IllConditioned, TrackingAmbiguous
from conduitwave.potential import WaveParams
from conduitwave.quadrature import constant_state, reconstruct_profile
from conduitwave.reparam import from_kma
from conduitwave.whitham import whitham_matrix

from oracles import constant_symbol

BASE = WaveParams(-1.0, 0.01, 1.0)


class TestConstantState:
    K, C, VAL = 0.35, 0.9, 1.2

    def profile(self, n=64):
        return constant_state(self.VAL, self.K, self.C, n=n)

    @pytest.mark.parametrize("xi", [0.0, 0.3, -0.7])
    def test_full_pipeline_matches_symbol(self, xi):
        eigs = bloch_spectrum(self.profile(), xi)
        for m in range(-8, 9):
            want = constant_symbol(m, xi, self.K, self.C, self.VAL)
            assert np.min(np.abs(eigs - want)) < 1e-10

    def test_g_symbol_positive(self):
        stack = assemble_operators(self.profile(), 0.0)
        eigs = np.linalg.eigvals(stack.G_mat)
        assert np.all(eigs.real > 0)
        assert np.max(np.abs(eigs.imag)) < 1e-10
        # symbol 1 + k^2 value kappa^2 at low modes
        for m in range(0, 5):
            want = 1.0 + self.K**2 * self.VAL * (2 * math.pi * m) ** 2
            assert np.min(np.abs(eigs - want)) < 1e-8

    def test_refinement_leaves_low_modes_unchanged(self):
        e32 = bloch_spectrum(self.profile(n=32), 0.2)
        e64 = bloch_spectrum(self.profile(n=64), 0.2)
        for m in range(-6, 7):
            want = constant_symbol(m, 0.2, self.K, self.C, self.VAL)
            d32 = np.min(np.abs(e32 - want))
            d64 = np.min(np.abs(e64 - want))
            assert max(d32, d64) < 1e-12


class TestSpectrum:
    def test_triple_zero_at_origin(self):
        w = reconstruct_profile(BASE, n=128)
        eigs = bloch_spectrum(w, 0.0)
        # the Jordan pair splits at the sqrt-of-roundoff floor; the cluster
        # is certified by each member being tiny and by the geometric mean
        smallest = np.abs(eigs[:3])
        assert np.all(smallest < 1e-6)
        assert np.prod(smallest) ** (1.0 / 3.0) < 1e-9

    def test_conjugation_symmetry(self):
        w = reconstruct_profile(BASE, n=96)
        for xi in (3e-3, 0.1):
            plus = bloch_spectrum(w, xi)
            minus = bloch_spectrum(w, -xi)
            # spectra at +-xi are complex conjugates of each other
            for lam in plus[:6]:
                assert np.min(np.abs(minus - lam.conjugate())) < 1e-8

    def test_domain_checks(self):
        w = reconstruct_profile(BASE, n=64)
        with pytest.raises(DomainError):
            bloch_spectrum(w, 4.0)
        with pytest.raises(DomainError):
            assemble_operators(w, 0.0, n=31)

    def test_ill_conditioned_guard(self):
        w = constant_state(1.0, 1e6, 1.0, n=64)
        with pytest.raises(IllConditioned):
            assemble_operators(w, 0.0)


class TestSlopes:
    def test_match_whitham_speeds(self):
        w = reconstruct_profile(BASE, n=128)
        res = origin_slopes(w, n=128)
        wm = whitham_matrix(BASE)
        target = np.sort_complex(wm.eigenvalues + wm.c)
        got = np.sort_complex(res.slopes)
        scale = np.max(np.abs(target))
        assert np.max(np.abs(got - target)) < 1e-4 * scale
        assert res.fit_residual < 1e-4

    def test_hyperbolic_side_slopes_real(self):
        p = from_kma(1.0 / (2 * math.pi), 1.0, 0.01)
        w = reconstruct_profile(p, n=96)
        res = origin_slopes(w, n=96)
        scale = np.max(np.abs(res.slopes))
        assert np.max(np.abs(res.slopes.imag)) < 1e-6 * scale

    def test_elliptic_side_conjugate_pair(self):
        p = from_kma(math.sqrt(6.0) / (2 * math.pi), 1.0, 0.03)
        w = reconstruct_profile(p, n=96)
        res = origin_slopes(w, n=96)
        ims = np.sort(res.slopes.imag)
        assert ims[0] < -1e-5 and ims[-1] > 1e-5
        assert abs(ims[0] + ims[-1]) < 1e-8

    def test_serialization(self):
        w = reconstruct_profile(BASE, n=64)
        d = origin_slopes(w, n=64).to_dict()
        assert set(d) == {"xis", "triples", "slopes", "residual"}
        assert len(d["slopes"]) == 3 and len(d["triples"]) == len(d["xis"])

    def test_xi_validation(self):
        w = reconstruct_profile(BASE, n=64)
        with pytest.raises(DomainError):
            origin_slopes(w, xi_list=(0.0, 1e-3), n=64)
        with pytest.raises(DomainError):
            origin_slopes(w, xi_list=(1e-3,), n=64)

    def test_tracking_tie_raises(self):
        cands = np.array([1.0 + 0j, 1.0 + 0j, 2.0 + 0j])
        ref = np.array([1.0 + 0j, 1.0 + 0j, 2.0 + 0j])
        with pytest.raises(TrackingAmbiguous):
            _match_triple(cands, ref)


class TestKernel:
    def test_residual_suite(self, base_profile, base_partials):
        rep = kernel_diagnostics(base_profile, base_partials)
        assert rep.translation < 1e-8
        assert rep.mean_chain < 1e-6
        assert rep.qmean_chain < 1e-6
        assert rep.wavenumber_chain < 1e-6
        assert rep.adjoint_const < 1e-8
        assert rep.adjoint_weight < 1e-8

    def test_gram_pattern(self, base_profile, base_partials):
        rep = kernel_diagnostics(base_profile, base_partials)
        want = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, -1.0]])
        assert np.max(np.abs(rep.gram - want)) < 1e-5

    def test_phi_k_identities(self, base_profile, base_partials):
        rep = kernel_diagnostics(base_profile, base_partials)
        assert abs(rep.mean_phi_k) < 1e-5
        assert abs(rep.weight_phi_k_residual) < 1e-5

    def test_grid_mismatch_rejected(self, base_partials):
        w = reconstruct_profile(BASE, n=128)
        with pytest.raises(DomainError):
            kernel_diagnostics(w, base_partials)
