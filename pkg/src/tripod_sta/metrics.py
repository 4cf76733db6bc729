"""Figures of merit: state-averaged gate fidelity, qubit-projected fidelity,
closed-form fidelity predictions, and noisy-map fidelities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .controls import ControlParams, PulseShape, make_envelopes, make_pulse_shape
from .dynamics import NoiseModel, propagate_lindblad_batch
from .qmath import IntegratorConfig, gauss_legendre
from .tripod import ideal_gate

# Fourth-order Magnus coefficient of the qubit-projected fidelity formula.
QUBIT_FIDELITY_COEFF = 14_745_600


@dataclass(frozen=True)
class FidelityReport:
    """Bundle of the fidelity figures for one parameter point."""

    f_full: float | None = None
    f_qubit: float | None = None
    f_map: float | None = None
    f_map_avg: float | None = None

    @property
    def eps_full(self) -> float | None:
        return None if self.f_full is None else 1.0 - self.f_full

    @property
    def eps_qubit(self) -> float | None:
        return None if self.f_qubit is None else 1.0 - self.f_qubit

    @property
    def eps_map(self) -> float | None:
        return None if self.f_map is None else 1.0 - self.f_map

    @property
    def eps_map_avg(self) -> float | None:
        return None if self.f_map_avg is None else 1.0 - self.f_map_avg


def avg_gate_fidelity(o: np.ndarray, d: int) -> float:
    """State-averaged fidelity (Tr[O O^dag] + |Tr O|^2) / (d(d+1)).

    O is the overlap operator target^dag @ realized; it need not be unitary
    (projected blocks lose norm to leakage).
    """
    o = np.asarray(o, dtype=complex)
    if o.shape != (d, d):
        raise ValueError(f"operator shape {o.shape} does not match d={d}")
    hs_norm_sq = float(np.sum(np.abs(o) ** 2))
    return (hs_norm_sq + abs(np.trace(o)) ** 2) / (d * (d + 1))


def qubit_overlap_operator(target: np.ndarray, realized: np.ndarray) -> np.ndarray:
    """P_q target^dag P_q realized P_q restricted to the qubit block."""
    return target[:2, :2].conj().T @ realized[:2, :2]


def closed_form_fidelities(params: ControlParams) -> tuple[float, float]:
    """Leading-order predictions (full-space, qubit-projected) for the
    adiabatic flavor with the quintic ramp."""
    x = params.omega0 * params.amp_scale * params.t_gate
    f_full = 1.0 - 40.0 * math.pi**4 / (49.0 * x * x)
    f_qubit = 1.0 + (
        QUBIT_FIDELITY_COEFF
        * math.pi**2
        / x**6
        * (-1.0 + math.cos(0.25 * x) * math.cos(params.gamma0))
        * math.sin(0.125 * x) ** 2
    )
    return f_full, f_qubit


def _axial_qubit_states() -> np.ndarray:
    """The six axial Bloch states of the (|0>, |1>) qubit, embedded in 4x4."""
    ket0 = np.array([1.0, 0.0], dtype=complex)
    ket1 = np.array([0.0, 1.0], dtype=complex)
    kets = [
        (ket0 + ket1) / math.sqrt(2.0),
        (ket0 - ket1) / math.sqrt(2.0),
        (ket0 + 1.0j * ket1) / math.sqrt(2.0),
        (ket0 - 1.0j * ket1) / math.sqrt(2.0),
        ket0,
        ket1,
    ]
    out = np.zeros((6, 4, 4), dtype=complex)
    for i, k in enumerate(kets):
        out[i, :2, :2] = np.outer(k, k.conj())
    return out


AXIAL_QUBIT_STATES = _axial_qubit_states()


def map_fidelity(
    params: ControlParams,
    env,
    noise: NoiseModel,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> float:
    """Average fidelity of the realized qubit map against the nominal target.

    Propagates the six axial qubit states through the Lindblad dynamics of
    env and compares with the ideal gate built at the nominal amplitude (the
    geometric qubit block does not depend on omega0).
    """
    target = ideal_gate(params.with_amp_scale(1.0)).qubit_block()
    rotated = np.einsum("ij,njk,lk->nil", target, AXIAL_QUBIT_STATES[:, :2, :2], target.conj())
    results = propagate_lindblad_batch(params, env, noise, AXIAL_QUBIT_STATES, cfg)
    total = 0.0
    for rot, res in zip(rotated, results):
        total += float(np.trace(rot @ res.final_operator[:2, :2]).real)
    return total / 6.0


def map_fidelity_uncertainty_avg(
    params: ControlParams,
    noise: NoiseModel,
    n_nodes: int = 21,
    cfg: IntegratorConfig = IntegratorConfig(),
    shape: PulseShape | None = None,
) -> float:
    """Uniform average of map_fidelity over the Rabi amplitude interval
    [omega0(1-k), omega0(1+k)] by Gauss-Legendre quadrature.

    Each node rescales the realized envelopes while the pulse design (and the
    target) stays at the nominal omega0.
    """
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    if shape is None:
        shape = make_pulse_shape(params.t_gate)
    k = noise.k
    if k == 0.0:
        return map_fidelity(params, make_envelopes(params, shape), noise, cfg)
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    total = 0.0
    for x, w in zip(nodes, weights):
        r = 1.0 + k * float(x)
        p = params.with_amp_scale(r)
        total += float(w) * map_fidelity(p, make_envelopes(p, shape), noise, cfg)
    # Weights sum to 2 on [-1, 1]; uniform density cancels the interval width.
    return total / 2.0


def analytic_satd_dephasing_fidelity(
    params: ControlParams,
    shape: PulseShape,
    noise: NoiseModel,
    n_nodes: int = 96,
) -> float:
    """First-order map-fidelity prediction for the accelerated gate under
    excited-state dephasing only."""
    rates = noise.gamma_phi
    if any(g != 0.0 for g in rates[:3]):
        raise ValueError("analytic prediction covers excited-state dephasing only")
    gamma_e = rates[3]
    w2 = params.omega0 * params.omega0

    def frac(t: float) -> float:
        td2 = shape.theta_dot(t) ** 2
        return td2 / (w2 + 4.0 * td2)

    def frac_sq(t: float) -> float:
        td2 = shape.theta_dot(t) ** 2
        return td2 / (w2 + 4.0 * td2) ** 2

    half = 0.5 * params.t_gate
    i1 = gauss_legendre(frac, 0.0, half, n_nodes)
    i2 = gauss_legendre(frac_sq, 0.0, half, n_nodes)
    return 1.0 - (4.0 / 3.0) * gamma_e * i1 - (8.0 / 3.0) * gamma_e * w2 * i2


def clamp_error(eps: float, floor: float) -> float:
    """Zero out reported errors below the integrator tolerance."""
    return 0.0 if abs(eps) < floor else max(eps, 0.0)
