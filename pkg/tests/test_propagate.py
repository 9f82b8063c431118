import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from conftest import ket
from rydgate.errors import ConfigError, InvalidState, NormDrift, TimeOutOfRange
from rydgate.model import PhysicalParams, collapse_operators, two_atom_hamiltonian
from rydgate.propagate import (
    SolverConfig,
    evolve_lindblad,
    evolve_schrodinger,
    propagate_pure,
    step_convergence_check,
)

SHORT = PhysicalParams(omega=50.0, delta=40.0, v_r=25.0, tau=0.05)
LOSSY = SHORT.replace(gamma0=2.0, gamma1=1.0, gammar=0.5, gammard=0.3)


def _reference_schrodinger(params, psi0, t_end):
    def rhs(t, y):
        return -1j * two_atom_hamiltonian(params, min(t, 2 * params.tau)) @ y

    sol = solve_ivp(rhs, (0.0, t_end), psi0.astype(complex), method="DOP853", rtol=1e-12, atol=1e-12)
    return sol.y[:, -1]


def _reference_lindblad(params, rho0, t_end):
    # column-stacking vectorisation: vec(A X B) = (B^T x A) vec(X)
    eye = np.eye(16)
    jumps = collapse_operators(params)
    dissipator = sum(
        np.kron(c.conj(), c) - 0.5 * np.kron(eye, c.conj().T @ c) - 0.5 * np.kron((c.conj().T @ c).T, eye)
        for c in jumps
    )

    def rhs(t, y):
        h = two_atom_hamiltonian(params, min(t, 2 * params.tau))
        return (-1j * (np.kron(eye, h) - np.kron(h.T, eye)) + dissipator) @ y

    y0 = rho0.reshape(-1, order="F").astype(complex)
    sol = solve_ivp(rhs, (0.0, t_end), y0, method="DOP853", rtol=1e-11, atol=1e-12)
    return sol.y[:, -1].reshape(16, 16, order="F")


def test_schrodinger_matches_independent_integrator():
    psi0 = (ket("11") + ket("01")) / np.sqrt(2)
    # the |cos| kink at tau limits a smooth adaptive integrator; stop just before it
    t_end = 0.9 * SHORT.tau
    ours = evolve_schrodinger(SHORT, psi0, 0.0, t_end).final_state
    ref = _reference_schrodinger(SHORT, psi0, t_end)
    np.testing.assert_allclose(ours, ref, atol=1e-8)


def test_lindblad_matches_independent_integrator():
    rho0 = np.outer(ket("11"), ket("11"))
    t_end = 0.9 * LOSSY.tau
    ours = evolve_lindblad(LOSSY, rho0, 0.0, t_end).final_state
    ref = _reference_lindblad(LOSSY, rho0, t_end)
    np.testing.assert_allclose(ours, ref, atol=1e-8)


def test_lindblad_full_cycle_integrity():
    rho0 = np.outer(ket("11"), ket("11"))
    traj = evolve_lindblad(LOSSY, rho0, 0.0, 2 * LOSSY.tau, SolverConfig(record_every=25))
    assert np.abs(traj.norm - 1).max() < 1e-10
    for rho in traj.states:
        assert np.abs(rho - rho.conj().T).max() < 1e-12
        assert np.linalg.eigvalsh(rho)[0] > -1e-10
    # loss channels move population out of the driven states into |0>
    assert traj.population("00")[-1] + traj.population("01")[-1] + traj.population("10")[-1] > 0


def test_uncoupled_state_is_stationary():
    traj = evolve_schrodinger(SHORT, ket("00"), 0.0, 2 * SHORT.tau)
    assert np.all(traj.population("00") == 1.0)


@settings(max_examples=10, deadline=None)
@given(st.floats(-80, 80), st.floats(0.02, 0.08))
def test_no_interaction_factorises(delta, tau):
    params = PhysicalParams(omega=50.0, delta=delta, v_r=0.0, tau=tau)
    cfg = SolverConfig()
    single = propagate_pure(params, ket("10"), 0.0, 2 * tau, cfg).reshape(4, 4)[:, 0]
    pair = propagate_pure(params, ket("11"), 0.0, 2 * tau, cfg)
    # equal up to the RK4 truncation error, which differs for the product form
    np.testing.assert_allclose(pair, np.kron(single, single), atol=1e-9)


def test_batched_columns_equal_single_runs():
    cfg = SolverConfig()
    batch = np.stack([ket("11"), ket("01")], axis=1)
    out = propagate_pure(SHORT, batch, 0.0, 2 * SHORT.tau, cfg)
    np.testing.assert_allclose(out[:, 0], propagate_pure(SHORT, ket("11"), 0.0, 2 * SHORT.tau, cfg), atol=1e-13)


def test_fourth_order_convergence():
    params = PhysicalParams(omega=50.0, delta=50.0, v_r=25.0, tau=0.25)
    ref = evolve_schrodinger(params, ket("11"), 0.0, params.tau, SolverConfig(dt=params.tau / 32000))
    errors = []
    for steps in (1000, 2000):
        run = evolve_schrodinger(params, ket("11"), 0.0, params.tau, SolverConfig(dt=params.tau / steps))
        errors.append(np.abs(run.final_state - ref.final_state).max())
    assert 12 < errors[0] / errors[1] < 20


def test_recording_and_step_grid():
    cfg = SolverConfig(record_every=100)
    traj = evolve_schrodinger(SHORT, ket("11"), 0.0, SHORT.tau, cfg)
    assert traj.times[0] == 0.0 and traj.times[-1] == SHORT.tau
    assert len(traj.times) == cfg.grid(SHORT.tau, 0.0, SHORT.tau)[0] // 100 + 1
    assert np.all(np.diff(traj.times) > 0)
    np.testing.assert_allclose(traj.populations.sum(axis=1), traj.norm)
    assert not traj.is_mixed
    default = SolverConfig()
    assert default.base_step(0.25) == pytest.approx(0.25 / 4000)
    assert default.base_step(1.0) == pytest.approx(6.25e-5)
    n, h = default.grid(0.3, 0.0, 0.3)
    assert n * h == pytest.approx(0.3) and h <= default.max_dt


def test_step_convergence_check_small():
    assert step_convergence_check(SHORT, ket("11")) < 1e-8


def test_invalid_inputs():
    with pytest.raises(InvalidState):
        evolve_schrodinger(SHORT, 2 * ket("11"), 0.0, 0.01)
    with pytest.raises(InvalidState):
        evolve_schrodinger(SHORT, np.ones(4), 0.0, 0.01)
    with pytest.raises(InvalidState):
        evolve_lindblad(SHORT, np.eye(16), 0.0, 0.01)
    bad = np.diag([1.5, -0.5] + [0.0] * 14)
    with pytest.raises(InvalidState):
        evolve_lindblad(SHORT, bad, 0.0, 0.01)
    with pytest.raises(TimeOutOfRange):
        evolve_schrodinger(SHORT, ket("11"), 0.0, 0.2)
    with pytest.raises(ConfigError):
        SolverConfig(dt=0.0)
    with pytest.raises(ConfigError):
        SolverConfig(record_every=0)


def test_unstable_step_reports_norm_drift():
    with pytest.raises(NormDrift):
        evolve_schrodinger(SHORT, ket("11"), 0.0, SHORT.tau, SolverConfig(dt=0.01))
