import math
import warnings

import numpy as np
import pytest

from conduitwave.errors import ConditioningWarning, DomainError, RegionError
from conduitwave.potential import WaveParams, critical_points, energy_range, zeta
from conduitwave.quadrature import (
    WaveProfile,
    constant_state,
    mass,
    period,
    q_invariant,
    reconstruct_profile,
    resample,
    turning_points,
    wave_integrals,
)

from oracles import bisect_root, shoot_wave, v_potential

BASE = WaveParams(-1.0, 0.01, 1.0)


class TestTurningPoints:
    def test_degenerate_at_lower_boundary(self):
        with pytest.warns(ConditioningWarning):
            tp = turning_points(WaveParams(-1.0, 0.0, 1.0))
        assert tp.phi_min == tp.phi_max == pytest.approx(1.0, abs=1e-12)
        assert tp.degenerate

    def test_pair_straddles_minimum_and_matches_bisection(self):
        tp = turning_points(BASE)
        assert tp.phi_min < 1.0 < tp.phi_max
        f = lambda x: 0.01 - v_potential(x, -1.0, 1.0)
        lo = bisect_root(f, 0.3, 1.0)
        hi = bisect_root(lambda x: -f(x), 1.0, 2.0)
        assert tp.phi_min == pytest.approx(lo, abs=1e-10)
        assert tp.phi_max == pytest.approx(hi, abs=1e-10)

    def test_widening_with_energy(self):
        tp1 = turning_points(WaveParams(-1.0, 0.005, 1.0))
        tp2 = turning_points(WaveParams(-1.0, 0.02, 1.0))
        assert tp2.phi_min < tp1.phi_min and tp2.phi_max > tp1.phi_max

    def test_homoclinic_boundary(self):
        _, e_max = energy_range(WaveParams(-1.0, 0.0, 1.0))
        pair = critical_points(WaveParams(-1.0, 0.0, 1.0))
        with pytest.warns(ConditioningWarning):
            tp = turning_points(WaveParams(-1.0, e_max, 1.0))
        assert tp.phi_min == pytest.approx(pair.phi1, abs=1e-12)

    def test_outside_region(self):
        with pytest.raises(RegionError):
            turning_points(WaveParams(-1.0, 0.2, 1.0))
        with pytest.raises(RegionError):
            turning_points(WaveParams(0.0, 0.01, 1.0))

    def test_refuses_near_saddle(self):
        a = zeta(1.0) - 1e-13
        with pytest.raises(RegionError):
            turning_points(WaveParams(a, 0.0, 1.0))


class TestWaveIntegrals:
    def test_harmonic_limit_period(self):
        # V''(phi2 = 1) = 1 at (a, c) = (-1, 1): T -> 2 pi
        assert period(WaveParams(-1.0, 1e-6, 1.0)) == pytest.approx(2 * math.pi, abs=1e-4)

    def test_constant_state_limits(self):
        vals = wave_integrals(WaveParams(-1.0, 1e-8, 1.0))
        assert vals.period == pytest.approx(2 * math.pi, abs=1e-6)
        assert vals.mass == pytest.approx(2 * math.pi, abs=1e-6)
        assert vals.qinv == pytest.approx(2 * math.pi, abs=1e-6)

    def test_period_grows_toward_solitary_limit(self):
        _, e_max = energy_range(WaveParams(-1.0, 0.0, 1.0))
        es = [0.6 * e_max, 0.8 * e_max, 0.95 * e_max]
        ts = [period(WaveParams(-1.0, e, 1.0)) for e in es]
        assert ts[0] < ts[1] < ts[2]

    @pytest.mark.parametrize(
        "params",
        [BASE, WaveParams(-1.0, 0.05, 1.0), WaveParams(-2.3, -1.26, 0.3)],
    )
    def test_against_shooting_oracle(self, params):
        tp = turning_points(params)
        T, M, Q = shoot_wave(params.a, params.E, params.c, tp.phi_max)
        vals = wave_integrals(params)
        assert vals.period == pytest.approx(T, rel=1e-8)
        assert vals.mass == pytest.approx(M, rel=1e-7)
        assert vals.qinv == pytest.approx(Q, rel=1e-7)

    def test_mean_lies_strictly_inside_range(self):
        tp = turning_points(BASE)
        ratio = mass(BASE) / period(BASE)
        assert tp.phi_min < ratio < tp.phi_max

    def test_q_positive(self):
        for E in (1e-4, 0.01, 0.08):
            assert q_invariant(WaveParams(-1.0, E, 1.0)) > 0

    def test_refinement_within_error_estimate(self):
        vals = wave_integrals(BASE)
        finer = wave_integrals(BASE, n_nodes=2 * vals.n_nodes)
        diff = max(
            abs(vals.period - finer.period),
            abs(vals.mass - finer.mass),
            abs(vals.qinv - finer.qinv),
        )
        assert diff <= max(vals.error * max(vals.period, vals.mass, vals.qinv), 1e-12)


class TestReconstruct:
    def test_degenerate_energy_gives_constant(self):
        w = reconstruct_profile(WaveParams(-1.0, 0.0, 1.0), n=64)
        assert np.all(w.values == w.values[0])
        assert w.values[0] == pytest.approx(1.0, abs=1e-12)
        assert np.all(w.deriv == 0.0)
        # harmonic wavenumber: T = 2 pi / sqrt(V''(phi2)) = 2 pi
        assert w.k == pytest.approx(1.0 / (2 * math.pi), rel=1e-12)

    def test_small_amplitude_is_nearly_cosine(self):
        w = reconstruct_profile(WaveParams(-1.0, 1e-4, 1.0), n=128)
        tp = turning_points(WaveParams(-1.0, 1e-4, 1.0))
        amp = 0.5 * (tp.phi_max - tp.phi_min)
        model = w.mean + amp * np.cos(2 * np.pi * w.theta)
        assert np.max(np.abs(w.values - model)) < 10 * amp**2

    def test_energy_residual_spectral(self, base_profile):
        assert base_profile.energy_residual() < 1e-12
        assert base_profile.energy_residual(spectral=True) < 1e-10

    def test_evenness_and_phase(self, base_profile):
        v = base_profile.values
        assert v[0] == np.max(v)
        assert np.max(np.abs(v - np.roll(v[::-1], 1))) == 0.0
        d = base_profile.deriv
        assert d[0] == 0.0
        assert np.max(np.abs(d + np.roll(d[::-1], 1))) == 0.0

    def test_mass_matches_grid_sum(self, base_profile):
        # contour quadrature vs trapezoid of samples: independent paths
        assert base_profile.values.mean() == pytest.approx(
            base_profile.mean, rel=1e-8
        )
        q_grid = np.mean(
            (base_profile.values + (base_profile.k * base_profile.deriv) ** 2)
            / base_profile.values**2
        )
        assert q_grid == pytest.approx(base_profile.qmean, rel=1e-8)

    def test_omega_and_mean_properties(self, base_profile):
        assert base_profile.omega == base_profile.k * base_profile.c
        assert base_profile.mean == base_profile.k * base_profile.mass

    def test_grid_validation(self):
        with pytest.raises(DomainError):
            reconstruct_profile(BASE, n=15)
        with pytest.raises(DomainError):
            reconstruct_profile(BASE, n=8)

    def test_json_round_trip(self, base_profile):
        d = base_profile.to_dict()
        assert set(d) == {"n", "k", "c", "a", "E", "M", "Q", "values", "deriv"}
        back = WaveProfile.from_dict(d)
        assert np.array_equal(back.values, base_profile.values)
        assert np.array_equal(back.deriv, base_profile.deriv)
        assert back.k == base_profile.k
        assert back.params == base_profile.params


def test_resample_round_trip(base_profile):
    up = resample(base_profile, 512)
    back = resample(up, 256)
    assert np.max(np.abs(back.values - base_profile.values)) < 1e-12
    assert np.max(np.abs(back.deriv - base_profile.deriv)) < 1e-10


def test_constant_state_is_equilibrium():
    w = constant_state(1.3, 0.4, 0.7, n=64)
    from conduitwave.potential import potential_derivatives

    v1, _ = potential_derivatives(1.3, w.params)
    assert v1 == pytest.approx(0.0, abs=1e-14)
    assert w.params.E == pytest.approx(v_potential(1.3, w.params.a, 0.7))
    assert w.mass == pytest.approx(1.3 / 0.4)


def test_boundary_approach_warns():
    _, e_max = energy_range(WaveParams(-1.0, 0.0, 1.0))
    from conduitwave.potential import well_position

    with pytest.warns(ConditioningWarning):
        well_position(WaveParams(-1.0, 0.9999 * e_max, 1.0))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        well_position(BASE)
