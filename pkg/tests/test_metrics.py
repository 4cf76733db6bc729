import math

import numpy as np
import pytest

from conftest import params
from tripod_sta.controls import Flavor, make_envelopes, make_pulse_shape
from tripod_sta.dynamics import NoiseModel
from tripod_sta.metrics import (
    AXIAL_QUBIT_STATES,
    FidelityReport,
    analytic_satd_dephasing_fidelity,
    avg_gate_fidelity,
    clamp_error,
    closed_form_fidelities,
    map_fidelity,
    map_fidelity_uncertainty_avg,
    qubit_overlap_operator,
)
from tripod_sta.qmath import IntegratorConfig

CFG = IntegratorConfig(rel_tol=1e-9, abs_tol=1e-11)
FAST = IntegratorConfig(rel_tol=1e-8, abs_tol=1e-10)


class TestAvgGateFidelity:
    def test_identity(self):
        assert avg_gate_fidelity(np.eye(4, dtype=complex), 4) == pytest.approx(1.0, abs=1e-15)

    def test_opposite_phases(self):
        o = np.diag([1.0, np.exp(1j * math.pi)])
        assert avg_gate_fidelity(o, 2) == pytest.approx(1.0 / 3.0, abs=1e-15)

    def test_phase_times_identity_is_perfect(self, rng):
        for _ in range(5):
            phase = np.exp(1j * rng.uniform(0.0, 2.0 * math.pi))
            assert avg_gate_fidelity(phase * np.eye(4), 4) == pytest.approx(1.0, abs=1e-12)

    def test_dimension_checked(self):
        with pytest.raises(ValueError):
            avg_gate_fidelity(np.eye(4), 2)


class TestClosedForms:
    def test_full_space_value(self):
        # omega0*tg = 20*pi gives 1 - pi^2/490 exactly.
        f_full, _ = closed_form_fidelities(params(10.0))
        assert f_full == pytest.approx(1.0 - math.pi**2 / 490.0, abs=1e-14)

    def test_qubit_formula_zeros(self):
        for cyc in (4.0, 8.0):  # first special-time family
            _, f_qubit = closed_form_fidelities(params(cyc, gamma0=0.7))
            assert f_qubit == pytest.approx(1.0, abs=1e-12)
        for cyc in (2.0, 6.0):  # second family exists only for gamma0 = pi
            _, f_qubit = closed_form_fidelities(params(cyc, gamma0=math.pi))
            assert f_qubit == pytest.approx(1.0, abs=1e-12)

    def test_slow_limit(self):
        f_full, f_qubit = closed_form_fidelities(params(3000.0))
        assert f_full == pytest.approx(1.0, abs=1e-6)
        assert f_qubit == pytest.approx(1.0, abs=1e-12)


class TestMapFidelity:
    def test_axial_states_are_normalized(self):
        for rho in AXIAL_QUBIT_STATES:
            assert np.trace(rho).real == pytest.approx(1.0, abs=1e-15)
            assert np.max(np.abs(rho - rho.conj().T)) == 0.0

    def test_noiseless_accelerated_gate_is_perfect(self):
        p = params(2.0, Flavor.SATD)
        f = map_fidelity(p, make_envelopes(p), NoiseModel(), CFG)
        assert 1.0 - f < 1e-6

    def test_noiseless_adiabatic_improves_with_time(self):
        # The error is oscillatory (refocusing dips), so compare points away
        # from the dips; the envelope falls by orders of magnitude.
        errs = []
        for cyc in (3.0, 5.0, 12.3):
            p = params(cyc)
            errs.append(1.0 - map_fidelity(p, make_envelopes(p), NoiseModel(), FAST))
        assert errs[0] > 5.0 * errs[1]
        assert errs[1] > 10.0 * errs[2]

    def test_dephasing_lifts_special_time_dips(self):
        # At a refocusing dip the noiseless map error nearly vanishes, but
        # excited-state dephasing keeps the gate imperfect.
        p = params(7.1)
        env = make_envelopes(p)
        clean = 1.0 - map_fidelity(p, env, NoiseModel(), FAST)
        noisy = 1.0 - map_fidelity(p, env, NoiseModel((0.0, 0.0, 0.0, 1e-2)), FAST)
        assert clean < 1e-4
        assert noisy > 10.0 * clean


class TestUncertaintyAverage:
    def test_zero_width_reduces_to_nominal(self):
        p = params(2.0, Flavor.SATD)
        noise = NoiseModel((0.0, 0.0, 0.0, 1e-2), k=0.0)
        direct = map_fidelity(p, make_envelopes(p), noise, FAST)
        averaged = map_fidelity_uncertainty_avg(p, noise, 7, FAST)
        assert averaged == pytest.approx(direct, abs=1e-12)

    def test_uncertainty_is_irrelevant_when_slow(self):
        # Amplitude miscalibration barely matters deep in the adiabatic regime.
        p = params(20.0)
        noise = NoiseModel(k=0.2)
        eps = 1.0 - map_fidelity_uncertainty_avg(p, noise, 11, FAST)
        assert eps < 2e-3

    def test_uncertainty_hurts_fast_accelerated_gates(self):
        p = params(2.0, Flavor.SATD)
        nominal = 1.0 - map_fidelity(p, make_envelopes(p), NoiseModel(), FAST)
        averaged = 1.0 - map_fidelity_uncertainty_avg(p, NoiseModel(k=0.2), 11, FAST)
        assert nominal < 1e-6
        assert averaged > 1e-3

    def test_node_count_validated(self):
        with pytest.raises(ValueError):
            map_fidelity_uncertainty_avg(params(2.0), NoiseModel(k=0.1), 0, FAST)


class TestAnalyticSatdDephasing:
    def test_rejects_ground_state_rates(self):
        p = params(2.0, Flavor.SATD)
        with pytest.raises(ValueError):
            analytic_satd_dephasing_fidelity(p, make_pulse_shape(2.0), NoiseModel((1e-3, 0, 0, 1e-2)))

    def test_error_scales_linearly_in_rate(self):
        p = params(3.0, Flavor.SATD)
        shape = make_pulse_shape(3.0)
        e1 = 1.0 - analytic_satd_dephasing_fidelity(p, shape, NoiseModel((0, 0, 0, 1e-3)))
        e2 = 1.0 - analytic_satd_dephasing_fidelity(p, shape, NoiseModel((0, 0, 0, 2e-3)))
        assert e2 == pytest.approx(2.0 * e1, rel=1e-12)

    def test_slow_gates_decouple(self):
        noise = NoiseModel((0.0, 0.0, 0.0, 1e-2))
        eps_10 = 1.0 - analytic_satd_dephasing_fidelity(params(10.0, Flavor.SATD), make_pulse_shape(10.0), noise)
        eps_20 = 1.0 - analytic_satd_dephasing_fidelity(params(20.0, Flavor.SATD), make_pulse_shape(20.0), noise)
        assert eps_20 == pytest.approx(0.5 * eps_10, rel=0.2)

    def test_agrees_with_lindblad_numerics(self):
        noise = NoiseModel((0.0, 0.0, 0.0, 1e-2))
        p = params(4.0, Flavor.SATD)
        shape = make_pulse_shape(4.0)
        eps_pred = 1.0 - analytic_satd_dephasing_fidelity(p, shape, noise)
        eps_num = 1.0 - map_fidelity(p, make_envelopes(p, shape), noise, CFG)
        assert abs(eps_num - eps_pred) / eps_pred < 0.1


def test_qubit_overlap_operator_projects():
    target = np.eye(4, dtype=complex)
    realized = np.zeros((4, 4), dtype=complex)
    realized[:2, :2] = np.diag([1.0, 0.5])  # deliberate norm loss
    o_q = qubit_overlap_operator(target, realized)
    assert o_q.shape == (2, 2)
    assert avg_gate_fidelity(o_q, 2) < 1.0


def test_clamp_error():
    assert clamp_error(5e-12, 1e-10) == 0.0
    assert clamp_error(-3e-12, 1e-10) == 0.0
    assert clamp_error(2e-3, 1e-10) == 2e-3


def test_fidelity_report_errors():
    report = FidelityReport(f_full=0.99, f_qubit=None, f_map=1.0, f_map_avg=0.95)
    assert report.eps_full == pytest.approx(0.01)
    assert report.eps_qubit is None
    assert report.eps_map == pytest.approx(0.0)
    assert report.eps_map_avg == pytest.approx(0.05)
