import math

import numpy as np
import pytest

from conftest import OMEGA0, params
from tripod_sta.controls import (
    ControlParams,
    DressingAngle,
    Flavor,
    GenericDressingSingular,
    adiabatic_envelopes,
    amplitude_threshold_time,
    cost_threshold_time,
    default_antisymmetric_gamma_rate,
    energy_cost,
    envelope_rows,
    generic_dressing,
    make_envelopes,
    make_pulse_shape,
    satd_dressing_angle,
    satd_envelopes,
)

SQRT2 = math.sqrt(2.0)


class TestPulseShape:
    def test_ramp_midpoint(self):
        shape = make_pulse_shape(4.0)
        # 6/32 - 15/16 + 10/8 at the quarter point
        assert shape.p(1.0) == pytest.approx(0.5, abs=1e-15)

    def test_boundary_values(self):
        tg = 3.7
        shape = make_pulse_shape(tg)
        assert shape.theta(0.0) == 0.0
        assert shape.theta(0.5 * tg) == pytest.approx(0.5 * math.pi, abs=1e-14)
        assert shape.theta(tg) == pytest.approx(0.0, abs=1e-14)
        for t in (0.0, 0.5 * tg, tg):
            assert shape.theta_dot(t) == pytest.approx(0.0, abs=1e-13)
            assert shape.theta_ddot(t) == pytest.approx(0.0, abs=1e-13)

    def test_mirror_symmetry(self):
        tg = 5.0
        shape = make_pulse_shape(tg)
        for t in np.linspace(0.0, tg, 41):
            assert shape.theta(tg - t) == pytest.approx(shape.theta(t), abs=1e-13)
            assert shape.theta_dot(tg - t) == pytest.approx(-shape.theta_dot(t), abs=1e-13)

    def test_peak_rate(self):
        # max theta_dot = (pi/2)*(15/8)*(2/tg), attained at tg/4.
        tg = 2.5
        shape = make_pulse_shape(tg)
        ts = np.linspace(0.0, tg, 20001)
        rates = np.array([shape.theta_dot(float(t)) for t in ts])
        peak = 0.5 * math.pi * (15.0 / 8.0) * 2.0 / tg
        assert np.max(rates) == pytest.approx(peak, rel=1e-8)
        assert ts[int(np.argmax(rates))] == pytest.approx(0.25 * tg, abs=2e-4 * tg)

    def test_grid_matches_scalar(self):
        shape = make_pulse_shape(1.8)
        ts = np.linspace(0.0, 1.8, 17)
        theta, td, tdd = shape.grid(ts)
        for i, t in enumerate(ts):
            assert theta[i] == pytest.approx(shape.theta(float(t)), abs=1e-14)
            assert td[i] == pytest.approx(shape.theta_dot(float(t)), abs=1e-14)
            assert tdd[i] == pytest.approx(shape.theta_ddot(float(t)), abs=1e-14)


class TestControlParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            ControlParams(-1.0, 0.1, 0.0, 0.1, 1.0)
        with pytest.raises(ValueError):
            ControlParams(1.0, 2.0, 0.0, 0.1, 1.0)  # alpha out of range
        with pytest.raises(ValueError):
            ControlParams(1.0, 0.1, 0.0, 7.0, 1.0)  # gamma0 out of range
        with pytest.raises(ValueError):
            ControlParams(1.0, 0.1, 0.0, 0.1, 1.0, amp_scale=0.0)

    def test_flavor_factory_dispatch(self):
        assert make_envelopes(params(2.0, Flavor.ADIABATIC)).params.flavor is Flavor.ADIABATIC
        assert make_envelopes(params(2.0, Flavor.SATD)).params.flavor is Flavor.SATD
        with pytest.raises(ValueError):
            adiabatic_envelopes(params(2.0, Flavor.SATD), make_pulse_shape(2.0))


class TestAdiabaticEnvelopes:
    def test_endpoints(self):
        p = params(3.0)
        env = adiabatic_envelopes(p, make_pulse_shape(3.0))
        o0, o1, oa = env.evaluate(0.0)
        assert abs(o0) < 1e-14 and abs(o1) < 1e-14
        assert oa == pytest.approx(OMEGA0, abs=1e-12)
        o0, o1, oa = env.evaluate(1.5)
        assert abs(oa) < 1e-12
        assert abs(o0) ** 2 + abs(o1) ** 2 == pytest.approx(OMEGA0**2, rel=1e-12)

    def test_equal_legs_at_alpha_pi4(self):
        env = make_envelopes(params(2.0, alpha=math.pi / 4, beta=0.0))
        for t in np.linspace(0.0, 2.0, 21):
            o0, o1, _ = env.evaluate(float(t))
            assert o0 == pytest.approx(o1, abs=1e-13)

    def test_constant_gap(self):
        env = make_envelopes(params(1.3, alpha=0.9, beta=1.1))
        for t in np.linspace(0.0, 1.3, 29):
            o0, o1, oa = env.evaluate(float(t))
            total = abs(o0) ** 2 + abs(o1) ** 2 + abs(oa) ** 2
            assert total == pytest.approx(OMEGA0**2, rel=1e-12)

    def test_amp_scale_multiplies_everything(self):
        env1 = make_envelopes(params(2.0))
        env2 = make_envelopes(params(2.0, amp_scale=1.3))
        for t in (0.3, 1.0, 1.7):
            for a, b in zip(env1.evaluate(t), env2.evaluate(t)):
                assert b == pytest.approx(1.3 * a, abs=1e-13)

    def test_phase_jump_on_second_half(self):
        g0 = 1.2
        env = make_envelopes(params(2.0, gamma0=g0))
        _, _, oa = env.evaluate(1.7)
        assert math.atan2(oa.imag, oa.real) == pytest.approx(g0, abs=1e-12)

    def test_max_amplitude_and_cost(self):
        p = params(2.0)
        env = make_envelopes(p)
        assert env.max_amplitude == pytest.approx(OMEGA0, rel=1e-9)
        assert env.cost == pytest.approx(0.5 * OMEGA0, rel=1e-9)


class TestSatdEnvelopes:
    def test_slow_limit_reduces_to_adiabatic(self):
        # Bracket deviation is bounded by 4*max|theta_ddot|/omega0^2.
        tg = 60.0
        p = params(tg, Flavor.SATD)
        shape = make_pulse_shape(tg)
        env = satd_envelopes(p, shape)
        env_ad = adiabatic_envelopes(params(tg), shape)
        ts = np.linspace(0.0, tg, 101)
        bound = 4.0 * 2.0 * math.pi * (10.0 / math.sqrt(3.0)) / tg**2 / OMEGA0**2
        for t in ts:
            for a, b in zip(env.evaluate(float(t)), env_ad.evaluate(float(t))):
                assert abs(a - b) <= OMEGA0 * bound * (1.0 + 1e-9)

    def test_midpoint_a_leg_vanishes(self):
        env = satd_envelopes(params(1.0, Flavor.SATD), make_pulse_shape(1.0))
        assert abs(env.evaluate(0.5)[2]) < 1e-12

    def test_phase_preservation_guard(self):
        class Broken(type(make_pulse_shape(1.0))):
            def theta_dot(self, t):
                return 1.0

        with pytest.raises(ValueError, match="SATD phase-preservation"):
            satd_envelopes(params(1.0, Flavor.SATD), Broken(1.0))

    def test_corrections_designed_at_nominal(self):
        # Mis-calibration must scale the whole set, not re-derive corrections.
        shape = make_pulse_shape(2.0)
        env1 = satd_envelopes(params(2.0, Flavor.SATD), shape)
        env2 = satd_envelopes(params(2.0, Flavor.SATD, amp_scale=0.8), shape)
        for t in (0.4, 0.9, 1.6):
            for a, b in zip(env1.evaluate(t), env2.evaluate(t)):
                assert b == pytest.approx(0.8 * a, abs=1e-13)

    def test_amplitude_threshold_bisection(self):
        p = params(1.0, Flavor.SATD)
        t_star = amplitude_threshold_time(p)
        assert 1.5 < t_star < 2.5
        below = satd_envelopes(params(0.97 * t_star, Flavor.SATD), make_pulse_shape(0.97 * t_star))
        above = satd_envelopes(params(1.03 * t_star, Flavor.SATD), make_pulse_shape(1.03 * t_star))
        # Above threshold the peak sits at t = 0 where the correction vanishes,
        # so the maximum equals omega0 exactly; below it the interior exceeds it.
        assert below.max_amplitude > OMEGA0 * (1.0 + 1e-6)
        assert above.max_amplitude == pytest.approx(OMEGA0, rel=1e-12)


class TestDressingAngles:
    def test_satd_angle_zeros_and_sign(self):
        tg = 2.0
        shape = make_pulse_shape(tg)
        nu = satd_dressing_angle(params(tg, Flavor.SATD), shape)
        for t in (0.0, 0.5 * tg, tg):
            assert nu.angle(t) == pytest.approx(0.0, abs=1e-12)
        for t in np.linspace(0.05, tg - 0.05, 19):
            td = shape.theta_dot(float(t))
            if abs(td) > 1e-12:
                assert math.copysign(1.0, nu.angle(float(t))) == math.copysign(1.0, td)

    def test_satd_angle_shrinks_with_gate_time(self):
        peaks = []
        for tg in (1.0, 4.0, 16.0):
            shape = make_pulse_shape(tg)
            nu = satd_dressing_angle(params(tg, Flavor.SATD), shape)
            ts = np.linspace(0.0, tg, 101)
            peaks.append(max(abs(nu.angle(float(t))) for t in ts))
        assert peaks[0] > peaks[1] > peaks[2]

    def test_satd_rate_matches_finite_difference(self):
        tg = 2.0
        shape = make_pulse_shape(tg)
        nu = satd_dressing_angle(params(tg, Flavor.SATD), shape)
        h = 1e-6
        for t in (0.3, 0.8, 1.4):
            fd = (nu.angle(t + h) - nu.angle(t - h)) / (2.0 * h)
            assert nu.rate(t) == pytest.approx(fd, rel=1e-6, abs=1e-8)


class TestGenericDressing:
    def test_zero_phase_rate(self):
        tg = 3.0
        p = params(tg)
        shape = make_pulse_shape(tg)
        mu, w = generic_dressing(p, shape, lambda t: 0.0)
        ts = np.linspace(0.0, tg, 11)
        assert max(abs(mu.angle(float(t))) for t in ts) < 1e-15
        # W_x vanishes, W_y -> 2*theta_dot, W_z hits the cot(2*mu) pole.
        wx, wy, wz = w(0.7)
        assert wx == 0.0
        assert wy == pytest.approx(2.0 * shape.theta_dot(0.7), rel=1e-12)
        assert math.isinf(wz)
        wx, wy, wz = w(0.5 * tg)  # theta_dot = 0 here, so W_z is finite
        assert wz == pytest.approx(-OMEGA0, rel=1e-12)

    def test_antisymmetric_rate_closes_the_loop(self):
        tg = 3.0
        p = params(tg)
        shape = make_pulse_shape(tg)
        profiles = [
            default_antisymmetric_gamma_rate(p),
            lambda t: math.sin(4.0 * math.pi * t / tg),
            lambda t: (t / tg) * (1.0 - t / tg) * (1.0 - 2.0 * t / tg),
        ]
        for rate in profiles:
            mu, _ = generic_dressing(p, shape, rate)
            assert abs(mu.angle(tg)) < 1e-10

    def test_rate_evaluator_is_analytic(self):
        tg = 2.0
        p = params(tg)
        shape = make_pulse_shape(tg)
        rate = default_antisymmetric_gamma_rate(p)
        mu, _ = generic_dressing(p, shape, rate)
        for t in (0.3, 1.1, 1.8):
            expected = math.sin(2.0 * shape.theta(t)) * rate(t) / SQRT2
            assert mu.rate(t) == pytest.approx(expected, abs=1e-14)

    def test_singular_dressing_raises(self):
        tg = 4.0
        p = params(tg)
        shape = make_pulse_shape(tg)
        with pytest.raises(GenericDressingSingular):
            generic_dressing(p, shape, lambda t: 40.0 * math.sin(2.0 * math.pi * t / tg))


class TestEnergyCost:
    def test_adiabatic_cost_is_half_gap(self):
        for tg in (0.7, 2.0, 11.0):
            p = params(tg)
            env = make_envelopes(p)
            assert energy_cost(env, p) == pytest.approx(0.5 * OMEGA0, rel=1e-10)

    def test_satd_cost_dominates_and_decays(self):
        costs = []
        for tg in (0.8, 1.5, 3.0, 8.0):
            p = params(tg, Flavor.SATD)
            c = energy_cost(make_envelopes(p), p)
            assert c >= 0.5 * OMEGA0 - 1e-12
            costs.append(c)
        assert all(a >= b for a, b in zip(costs, costs[1:]))
        assert costs[-1] == pytest.approx(0.5 * OMEGA0, rel=1e-3)

    def test_cost_thresholds(self):
        p = params(1.0, Flavor.SATD)
        for mult in (2.0, 3.0):
            t_star = cost_threshold_time(p, mult)
            p_star = params(t_star, Flavor.SATD)
            c = energy_cost(make_envelopes(p_star), p_star, 501)
            assert c == pytest.approx(mult * 0.5 * OMEGA0, rel=1e-6)
        t2 = cost_threshold_time(p, 2.0)
        t3 = cost_threshold_time(p, 3.0)
        assert t3 < t2  # higher cost budget admits faster gates

    def test_sampling_validation(self):
        p = params(1.0)
        env = make_envelopes(p)
        with pytest.raises(ValueError):
            energy_cost(env, p, 100)
        with pytest.raises(ValueError):
            energy_cost(env, p, 1)


def test_envelope_rows_layout():
    p = params(2.0, amp_scale=1.25)
    rows = envelope_rows(make_envelopes(p), 5)
    assert len(rows) == 5
    t, re0, im0, re1, im1, rea, ima = rows[0]
    assert t == 0.0
    assert (re0, im0, re1, im1) == (0.0, 0.0, 0.0, 0.0)
    assert rea == pytest.approx(1.25 * OMEGA0, rel=1e-12)
    assert ima == 0.0
    with pytest.raises(ValueError):
        envelope_rows(make_envelopes(p), 1)
