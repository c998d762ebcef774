import math

import numpy as np
import pytest

from conduitwave.errors import DomainError, NewtonNotConverged, SteppingError
from conduitwave.potential import WaveParams
from conduitwave.quadrature import turning_points, wave_integrals
from oracles import shoot_wave
from conduitwave.reparam import (
    ModParams,
    Nondegeneracy,
    from_kma,
    invert_to_aEc,
    jacobian_kmq,
    kmq_map,
    nondegeneracy,
    profile_partials,
)

BASE = WaveParams(-1.0, 0.01, 1.0)


class TestKmqMap:
    def test_constant_state_limit(self):
        m = kmq_map(WaveParams(-1.0, 1e-8, 1.0))
        two_pi = 2 * math.pi
        assert m.k == pytest.approx(1 / two_pi, abs=1e-5)
        assert m.M == pytest.approx(two_pi, abs=1e-4)
        assert m.Q == pytest.approx(two_pi, abs=1e-4)

    def test_round_trip_identity(self):
        m = kmq_map(BASE)
        back = invert_to_aEc(m, WaveParams(-1.01, 0.0102, 0.99))
        assert back.a == pytest.approx(BASE.a, abs=1e-9)
        assert back.E == pytest.approx(BASE.E, abs=1e-9)
        assert back.c == pytest.approx(BASE.c, abs=1e-9)

    def test_mass_monotone_in_energy(self):
        # at (a, c) = (-1, 1) the per-period mass grows with E
        ms = [kmq_map(WaveParams(-1.0, e, 1.0)).M for e in (0.002, 0.01, 0.03, 0.06)]
        assert all(m2 > m1 for m1, m2 in zip(ms, ms[1:]))

    def test_modparams_validation(self):
        with pytest.raises(DomainError):
            ModParams(k=-0.1, M=1.0, Q=1.0)


class TestInvert:
    def test_converges_fast_near_solution(self):
        m = kmq_map(BASE)
        perturbed = ModParams(k=m.k * (1 + 1e-3), M=m.M * (1 - 1e-3), Q=m.Q * (1 + 1e-3))
        # five Newton iterations must suffice from the unperturbed params
        p = invert_to_aEc(perturbed, BASE, max_iter=5)
        check = kmq_map(p)
        assert check.k == pytest.approx(perturbed.k, rel=1e-10)

    def test_far_target_fails_loudly(self):
        with pytest.raises(NewtonNotConverged):
            invert_to_aEc(ModParams(k=10.0, M=1000.0, Q=0.001), BASE, max_iter=12)


class TestJacobian:
    def test_determinant_identity(self):
        # det d(k,M,Q)/d(a,E,c) = -(1/T^2) det d(T,M,Q)/d(a,E,c)
        jac = jacobian_kmq(BASE)
        nd = nondegeneracy(BASE)
        T = wave_integrals(BASE).period
        assert np.linalg.det(jac) == pytest.approx(-nd.tmq_aec / T**2, rel=1e-6)

    def test_step_halving_consistency(self):
        j1 = jacobian_kmq(BASE, h_rel=1e-5)
        j2 = jacobian_kmq(BASE, h_rel=5e-6)
        scale = np.max(np.abs(j1))
        assert np.max(np.abs(j1 - j2)) < 1e-6 * scale

    def test_finite_near_lower_boundary_with_shooting_oracle(self):
        # Near the bottom of the energy window the entries stay finite.  Note
        # the naive constant-state derivative is NOT the limit here: at fixed
        # E the well bottom E_min(a, c) moves with the parameters, so the
        # Jacobian keeps anharmonic contributions.  The oracle is therefore a
        # finite difference of the independent shooting computation.
        a, c, E = -1.0, 1.0, 2e-6
        jac = jacobian_kmq(WaveParams(a, E, c), h_rel=1e-7)
        assert np.all(np.isfinite(jac))

        def shoot_kmq(x):
            from oracles import bisect_root, v_potential

            a_, E_, c_ = x
            f = lambda p: E_ - v_potential(p, a_, c_)
            phi_max = bisect_root(lambda p: -f(p), 1.0, 2.0)
            T, M, Q = shoot_wave(a_, E_, c_, phi_max, rtol=1e-12, n_dense=2001)
            return np.array([1.0 / T, M, Q])

        x0 = np.array([a, E, c])
        for j, tol in ((0, 2e-3), (1, 2e-3), (2, 2e-3)):
            h = 1e-6 * max(1.0, abs(x0[j])) * (0.2 if j == 1 else 1.0)
            xp, xm = x0.copy(), x0.copy()
            xp[j] += h
            xm[j] -= h
            col = (shoot_kmq(xp) - shoot_kmq(xm)) / (2 * h)
            scale = np.max(np.abs(col))
            assert np.max(np.abs(jac[:, j] - col)) < tol * scale


class TestNondegeneracy:
    def test_generic_point_clear(self):
        nd = nondegeneracy(BASE)
        assert not nd.degenerate
        assert nd.t_a != 0 and nd.tm_ae != 0 and nd.tmq_aec != 0

    def test_sampled_region_clear(self):
        rng = np.random.default_rng(7)
        for _ in range(4):
            E = float(rng.uniform(0.002, 0.08))
            nd = nondegeneracy(WaveParams(-1.0, E, 1.0))
            assert not nd.degenerate

    def test_threshold_flags(self):
        nd = Nondegeneracy(t_a=0.0, tm_ae=1.0, tmq_aec=1.0)
        assert nd.flags == (True, False, False)
        assert nd.degenerate
        d = nd.to_dict()
        assert d["flags"] == [True, False, False]


class TestProfilePartials:
    def test_mean_identities(self, base_partials):
        assert np.mean(base_partials.wrt_mean) == pytest.approx(1.0, abs=1e-6)
        assert np.mean(base_partials.wrt_qmean) == pytest.approx(0.0, abs=1e-6)
        assert np.mean(base_partials.wrt_k) == pytest.approx(0.0, abs=1e-6)

    def test_partials_even_in_theta(self, base_partials):
        for arr in (base_partials.wrt_k, base_partials.wrt_mean, base_partials.wrt_qmean):
            assert np.max(np.abs(arr - np.roll(arr[::-1], 1))) < 1e-7

    def test_step_halving_consistency(self, base_params, base_partials):
        finer = profile_partials(base_params, n=256, h_rel=5e-6)
        err = np.max(np.abs(finer.wrt_mean - base_partials.wrt_mean))
        assert err < 1e-6

    def test_speed_derivative_consistent_with_map(self, base_params, base_partials):
        # dc/dmean consistent with the inverse of the full Jacobian
        jac = jacobian_kmq(base_params)  # d(k, M, Q)/d(a, E, c)
        T = wave_integrals(base_params).period
        k = 1.0 / T
        m = kmq_map(base_params)
        # chain to per-theta coordinates (k, kM, kQ)
        chain = np.array(
            [[1.0, 0.0, 0.0], [m.M, k, 0.0], [m.Q, 0.0, k]]
        )
        jac_scaled = chain @ jac  # d(k, mean, qmean)/d(a, E, c)
        dc = np.linalg.solve(jac_scaled.T, np.array([0.0, 0.0, 1.0]))
        # dc = row of d(a,E,c)/d(k,mean,qmean) for the c component
        assert base_partials.dc_dk == pytest.approx(dc[0], rel=1e-4)
        assert base_partials.dc_dmean == pytest.approx(dc[1], rel=1e-4)
        assert base_partials.dc_dqmean == pytest.approx(dc[2], rel=1e-4)


class TestFromKma:
    def test_hits_targets(self):
        k, mean, amp = 0.31, 1.0, 0.03
        p = from_kma(k, mean, amp)
        vals = wave_integrals(p)
        assert 1.0 / vals.period == pytest.approx(k, abs=1e-10)
        assert vals.mass / vals.period == pytest.approx(mean, abs=1e-10)
        tp = turning_points(p)
        assert 0.5 * (tp.phi_max - tp.phi_min) == pytest.approx(amp, abs=1e-10)

    def test_zero_amplitude_rejected(self):
        with pytest.raises(DomainError):
            from_kma(0.3, 1.0, 0.0)

    def test_partials_refuse_degenerate_reparameterization(self, monkeypatch):
        tripped = Nondegeneracy(t_a=0.0, tm_ae=0.0, tmq_aec=0.0)
        monkeypatch.setattr("conduitwave.reparam.nondegeneracy", lambda p: tripped)
        with pytest.raises(SteppingError):
            profile_partials(BASE, n=64)
