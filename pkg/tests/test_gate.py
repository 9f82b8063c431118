import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ket
from rydgate.errors import BracketInvalid, LowReturn, SupportOutsideQubitSubspace
from rydgate.gate import (
    calibrate_tau,
    default_bracket,
    fidelity,
    fidelity_sweep,
    plus_plus_state,
    simulate_gate,
    target_gate,
    wrap_phase,
)
from rydgate.model import PhysicalParams
from rydgate.propagate import SolverConfig

GATE = PhysicalParams(omega=50.0, delta=50.0, v_r=25.0, tau=0.05)
RB = dict(gamma0=3.0, gamma1=3.0, gammar=0.001, gammard=0.01)


@settings(max_examples=100)
@given(st.floats(-50, 50), st.integers(-5, 5))
def test_wrap_phase(phi, k):
    w = wrap_phase(phi)
    assert -math.pi < w <= math.pi
    assert wrap_phase(phi + 2 * math.pi * k) == pytest.approx(w, abs=1e-9) or abs(abs(w) - math.pi) < 1e-9
    assert wrap_phase(-math.pi) == math.pi


def test_target_gate_layout():
    u = target_gate(math.pi)
    np.testing.assert_allclose(u.matrix, np.diag([-1, 1, 1, 1]))
    big = u.embedded()
    assert big[5, 5] == pytest.approx(-1) and big[0, 0] == 1 and big[15, 15] == 1
    np.testing.assert_allclose(big @ big.conj().T, np.eye(16))


def test_fidelity_reference_values():
    psi = plus_plus_state()
    rho0 = np.outer(psi, psi.conj())
    # <++|U_pi|++> = (3 - 1) / 4
    assert fidelity(rho0, psi, target_gate(math.pi)) == pytest.approx(0.25)
    assert fidelity(rho0, psi, target_gate(0.0)) == pytest.approx(1.0)
    u = target_gate(math.pi).embedded()
    assert fidelity(u @ rho0 @ u.conj().T, psi, target_gate(math.pi)) == pytest.approx(1.0)
    with pytest.raises(SupportOutsideQubitSubspace):
        fidelity(rho0, ket("1p"), target_gate(math.pi))


@settings(max_examples=40)
@given(st.floats(-math.pi, math.pi))
def test_fidelity_of_unchanged_state(phi):
    psi = plus_plus_state()
    expected = abs((3 + np.exp(1j * phi)) / 4) ** 2
    assert fidelity(np.outer(psi, psi.conj()), psi, target_gate(phi)) == pytest.approx(expected)


def test_no_interaction_gives_no_entangling_phase():
    result = simulate_gate(GATE.replace(v_r=0.0))
    assert abs(result.entangling_phase) < 1e-8
    assert result.diagonal_phases["00"] == 0.0
    assert result.return_probabilities["00"] == 1.0


def test_unitary_gate_result():
    target = target_gate(math.pi)
    result = simulate_gate(GATE, target=target)
    m = result.overlap_matrix()
    assert m.shape == (4, 4)
    np.testing.assert_allclose(np.abs(np.diag(m)) ** 2, [result.return_probabilities[k] for k in ("00", "01", "10", "11")])
    psi_f = sum(0.5 * result.final_states[k] for k in ("00", "01", "10", "11"))
    ideal = target.embedded() @ plus_plus_state()
    assert result.fidelity == pytest.approx(abs(np.vdot(ideal, psi_f)) ** 2)
    phases = result.diagonal_phases
    combo = phases["11"] - phases["10"] - phases["01"] + phases["00"]
    assert result.entangling_phase == pytest.approx(wrap_phase(combo))


def test_dissipative_mode_agrees_when_closed_and_loses_fidelity_when_open():
    target = target_gate(math.pi)
    closed = simulate_gate(GATE, target=target)
    as_density = simulate_gate(GATE, dissipative=True, target=target)
    assert as_density.entangling_phase is None
    for k, p in closed.return_probabilities.items():
        assert as_density.return_probabilities[k] == pytest.approx(p, abs=1e-8)
    assert as_density.fidelity == pytest.approx(closed.fidelity, abs=1e-8)
    lossy = simulate_gate(GATE.replace(**RB), dissipative=True, target=target)
    assert lossy.return_probabilities["11"] < closed.return_probabilities["11"]
    assert np.trace(lossy.final_states["11"]).real == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        lossy.overlap_matrix()


def test_low_return_is_reported():
    params = PhysicalParams(omega=50.0, delta=50.0, v_r=50.0, tau=0.011)
    with pytest.raises(LowReturn):
        simulate_gate(params)
    assert simulate_gate(params, check_return=False).return_probabilities["11"] < 0.5


def test_calibration_hits_target_phase():
    params = PhysicalParams(omega=50.0, delta=50.0, v_r=10.0, tau=1.0)
    tau = calibrate_tau(params, math.pi, default_bracket(params), tol=1e-7)
    lo, hi = default_bracket(params)
    assert lo <= tau <= hi
    phase = simulate_gate(params.replace(tau=tau)).entangling_phase
    assert abs(wrap_phase(phase - math.pi)) < 1e-6


def test_calibration_bracket_errors():
    with pytest.raises(BracketInvalid):
        calibrate_tau(GATE, math.pi, (0.3, 0.1))
    with pytest.raises(BracketInvalid):
        calibrate_tau(GATE, math.pi, (0.0, 0.1))
    weak = GATE.replace(v_r=1.0)
    # perturbative phase stays below 0.1 rad on this bracket
    with pytest.raises(BracketInvalid):
        calibrate_tau(weak, math.pi, (0.02, 0.03))


def test_default_bracket_scales_inversely_with_interaction():
    a, b = default_bracket(GATE.replace(v_r=2.0))
    c, d = default_bracket(GATE.replace(v_r=4.0))
    assert a == pytest.approx(2 * c) and b == pytest.approx(2 * d) and b == pytest.approx(4 * a)


def test_fidelity_sweep_rows_and_errors():
    base = GATE.replace(**RB)

    def bracket(params, phi):
        return (0.2, 0.1) if params.v_r > 15 else default_bracket(params, phi)

    rows = fidelity_sweep(base, [20.0, 10.0], bracket_fn=bracket, tol=1e-5, threads=2)
    assert [r.v_r for r in rows] == [10.0, 20.0]
    assert rows[0].error is None and 0.5 < rows[0].fidelity <= 1.0
    assert rows[1].tau is None and rows[1].error.startswith("BracketInvalid")
    with pytest.raises(ValueError):
        fidelity_sweep(base, [])


def test_overlap_matrix_nearly_unitary_for_slow_passage():
    result = simulate_gate(PhysicalParams(omega=50.0, delta=50.0, v_r=25.0, tau=1.0))
    m = result.overlap_matrix()
    assert np.abs(m.conj().T @ m - np.eye(4)).max() < 1e-3


def test_entangling_phase_ignores_local_qubit_phases():
    result = simulate_gate(GATE)
    alpha, beta = 0.7, -1.9
    local = np.kron(np.diag([1, np.exp(1j * alpha), 1, 1]), np.diag([1, np.exp(1j * beta), 1, 1]))
    rotated = {k: np.angle((local @ v)[{"00": 0, "01": 1, "10": 4, "11": 5}[k]])
               for k, v in result.final_states.items()}
    combo = rotated["11"] - rotated["10"] - rotated["01"] + rotated["00"]
    assert abs(wrap_phase(combo - result.entangling_phase)) < 1e-9


def test_fidelity_trace_is_cyclic():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    rho = a @ a.conj().T
    rho /= np.trace(rho)
    psi = plus_plus_state()
    u = target_gate(1.1).embedded()
    ideal = u @ np.outer(psi, psi.conj()) @ u.conj().T
    assert np.trace(ideal @ rho) == pytest.approx(np.trace(rho @ ideal), abs=1e-14)
    assert fidelity(rho, psi, target_gate(1.1)) == pytest.approx(np.trace(ideal @ rho).real)


def test_perturbative_calibration():
    coarse = SolverConfig(steps_per_tau=1000, max_dt=2.5e-4)
    weak = PhysicalParams(omega=50.0, delta=50.0, v_r=1.0, tau=1.0)
    tau1 = calibrate_tau(weak, math.pi, default_bracket(weak), tol=1e-4, cfg=coarse)
    estimate = 4 * math.pi / (3 * weak.v_r_ang)
    assert abs(tau1 - estimate) / estimate < 0.15
    double = weak.replace(v_r=2.0)
    tau2 = calibrate_tau(double, math.pi, default_bracket(double), tol=1e-4, cfg=coarse)
    assert tau2 / tau1 == pytest.approx(0.5, rel=0.05)


def test_single_row_sweep_matches_direct_evaluation():
    base = GATE.replace(v_r=10.0, **RB)
    (row,) = fidelity_sweep(base, [10.0], tol=1e-5)
    direct = simulate_gate(base.replace(tau=row.tau), dissipative=True, target=target_gate(math.pi))
    assert row.fidelity == pytest.approx(direct.fidelity, abs=1e-12)
