"""Fixed-step RK4 propagation of pure states and density matrices.

Both integrators step the explicitly time-dependent generator with the
classical fourth-order Runge-Kutta scheme. The step is uniform and chosen so
that ``t = tau`` (the kink of the |cos| pulse) is always a grid point when the
interval starts at 0. Output is fully deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, InvalidState, NormDrift, PositivityLoss, TimeOutOfRange, TraceDrift
from .linalg import dagger
from .model import (
    BASIS_LABELS,
    DIM_PAIR,
    RR,
    PhysicalParams,
    collapse_operators,
    hamiltonian_terms,
    pulse_amplitudes,
)

NORM_DRIFT_LIMIT = 1e-6
TRACE_DRIFT_LIMIT = 1e-6
POSITIVITY_LIMIT = -1e-6

P_INDICES = np.array([i for i, lab in enumerate(BASIS_LABELS) if "p" in lab])


@dataclass(frozen=True)
class SolverConfig:
    """Step control for the RK4 integrators.

    When ``dt`` is None the step is ``min(tau / steps_per_tau, max_dt)``,
    rounded down so that an integer number of steps spans ``tau``.
    """

    dt: float | None = None
    steps_per_tau: int = 4000
    max_dt: float = 6.25e-5
    record_every: int = 1
    tolerance: float = 1e-7

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.steps_per_tau < 1 or self.record_every < 1:
            raise ConfigError("steps_per_tau and record_every must be positive integers")
        if not self.max_dt > 0:
            raise ConfigError("max_dt must be positive")

    def base_step(self, tau: float) -> float:
        target = self.dt if self.dt is not None else min(tau / self.steps_per_tau, self.max_dt)
        return tau / math.ceil(tau / target - 1e-9)

    def grid(self, tau: float, t_start: float, t_end: float) -> tuple[int, float]:
        """Number of steps and uniform step size for ``[t_start, t_end]``."""
        span = t_end - t_start
        if span == 0.0:
            return 0, 0.0
        n = max(1, math.ceil(span / self.base_step(tau) - 1e-9))
        return n, span / n

    def halved(self, tau: float) -> "SolverConfig":
        """Config with half the step and the same recorded sample times."""
        return replace(self, dt=self.base_step(tau) / 2, record_every=2 * self.record_every)


@dataclass(frozen=True)
class Trajectory:
    """Recorded samples of a propagation.

    ``states`` is ``(n, 16)`` for pure states or ``(n, 16, 16)`` for density
    matrices. ``norm`` holds ``<psi|psi>`` or ``Tr rho``.
    """

    times: np.ndarray
    states: np.ndarray
    populations: np.ndarray
    norm: np.ndarray
    p_rr: np.ndarray
    p_p_total: np.ndarray

    @property
    def is_mixed(self) -> bool:
        return self.states.ndim == 3

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def population(self, label: str) -> np.ndarray:
        return self.populations[:, BASIS_LABELS.index(label)]

    @classmethod
    def from_states(cls, times, states) -> "Trajectory":
        times = np.asarray(times, dtype=float)
        states = np.asarray(states)
        if states.ndim == 2:
            pops = np.abs(states) ** 2
        else:
            pops = np.real(np.diagonal(states, axis1=1, axis2=2)).copy()
        return cls(
            times=times,
            states=states,
            populations=pops,
            norm=pops.sum(axis=1),
            p_rr=pops[:, RR].copy(),
            p_p_total=pops[:, P_INDICES].sum(axis=1),
        )


def _check_interval(params: PhysicalParams, t_start: float, t_end: float) -> None:
    t_max = 2.0 * params.tau
    slack = 1e-12 * t_max
    if not (-slack <= t_start <= t_end <= t_max + slack):
        raise TimeOutOfRange(f"interval [{t_start}, {t_end}] not inside [0, {t_max}]")


def _stage_pulses(params: PhysicalParams, t_start: float, n: int, h: float):
    half_grid = t_start + 0.5 * h * np.arange(2 * n + 1)
    return pulse_amplitudes(params, half_grid)


def propagate_pure(params: PhysicalParams, psi: np.ndarray, t_start: float, t_end: float,
                   cfg: SolverConfig, record=None) -> np.ndarray:
    """RK4 for ``d psi/dt = -i H(t) psi``; ``psi`` may be ``(16,)`` or ``(16, k)``.

    ``record(step_index, t, psi)`` is called at every ``cfg.record_every``-th
    step and at the final step. Returns the final state.
    """
    _check_interval(params, t_start, t_end)
    n, h = cfg.grid(params.tau, t_start, t_end)
    y = np.array(psi, dtype=complex)
    expected = float(np.vdot(y, y).real)
    if record is not None:
        record(0, t_start, y)
    if n == 0:
        return y
    terms = hamiltonian_terms(params)
    b0, b1, b2 = -1j * terms.static, -1j * terms.coupling1, -1j * terms.coupling2
    om1, om2 = _stage_pulses(params, t_start, n, h)
    hh, h6 = 0.5 * h, h / 6.0
    a_end = b0 + om1[0] * b1 + om2[0] * b2
    for k in range(n):
        a_start = a_end
        a_mid = b0 + om1[2 * k + 1] * b1 + om2[2 * k + 1] * b2
        a_end = b0 + om1[2 * k + 2] * b1 + om2[2 * k + 2] * b2
        k1 = a_start @ y
        k2 = a_mid @ (y + hh * k1)
        k3 = a_mid @ (y + hh * k2)
        k4 = a_end @ (y + h * k3)
        y = y + h6 * (k1 + 2.0 * (k2 + k3) + k4)
        drift = abs(float(np.vdot(y, y).real) - expected)
        if drift > NORM_DRIFT_LIMIT * max(1.0, expected):
            raise NormDrift(f"norm drifted by {drift:.2e} at t = {t_start + (k + 1) * h:.6g} us; reduce dt")
        if record is not None and ((k + 1) % cfg.record_every == 0 or k + 1 == n):
            record(k + 1, t_start + (k + 1) * h if k + 1 < n else t_end, y)
    return y


class _LindbladGenerator:
    """``d rho/dt = X + X^dagger + sum_k C_k rho C_k^dagger`` with ``X = G rho``.

    ``G = -i H - K/2`` and ``K = sum_k C_k^dagger C_k``; this is the standard
    trace-preserving Lindblad form written so that Hermiticity is exact.
    """

    def __init__(self, params: PhysicalParams):
        terms = hamiltonian_terms(params)
        ops = collapse_operators(params)
        if ops:
            stack = np.array(ops)
            self.jumps = stack.reshape(-1, DIM_PAIR)
            self.jumps_dag = dagger(stack)
            k_sum = np.einsum("kji,kjl->il", stack.conj(), stack)
        else:
            self.jumps = None
            k_sum = np.zeros((DIM_PAIR, DIM_PAIR), dtype=complex)
        self.n_jumps = len(ops)
        self.g0 = -1j * terms.static - 0.5 * k_sum
        self.g1 = -1j * terms.coupling1
        self.g2 = -1j * terms.coupling2

    def generator(self, om1: float, om2: float) -> np.ndarray:
        return self.g0 + om1 * self.g1 + om2 * self.g2

    def __call__(self, g: np.ndarray, rho: np.ndarray) -> np.ndarray:
        x = g @ rho
        out = x + dagger(x)
        if self.jumps is not None:
            cr = (self.jumps @ rho).reshape(self.n_jumps, DIM_PAIR, DIM_PAIR)
            out += np.sum(cr @ self.jumps_dag, axis=0)
        return out


def propagate_density(params: PhysicalParams, rho: np.ndarray, t_start: float, t_end: float,
                      cfg: SolverConfig, record=None) -> np.ndarray:
    """RK4 for the Lindblad master equation; see :func:`propagate_pure` for ``record``."""
    _check_interval(params, t_start, t_end)
    n, h = cfg.grid(params.tau, t_start, t_end)
    y = np.array(rho, dtype=complex)
    if record is not None:
        record(0, t_start, y)
    if n == 0:
        return y
    rhs = _LindbladGenerator(params)
    om1, om2 = _stage_pulses(params, t_start, n, h)
    hh, h6 = 0.5 * h, h / 6.0
    g_end = rhs.generator(om1[0], om2[0])
    for k in range(n):
        g_start = g_end
        g_mid = rhs.generator(om1[2 * k + 1], om2[2 * k + 1])
        g_end = rhs.generator(om1[2 * k + 2], om2[2 * k + 2])
        k1 = rhs(g_start, y)
        k2 = rhs(g_mid, y + hh * k1)
        k3 = rhs(g_mid, y + hh * k2)
        k4 = rhs(g_end, y + h * k3)
        y = y + h6 * (k1 + 2.0 * (k2 + k3) + k4)
        if record is not None and ((k + 1) % cfg.record_every == 0 or k + 1 == n):
            _check_density(y, t_start + (k + 1) * h)
            record(k + 1, t_start + (k + 1) * h if k + 1 < n else t_end, y)
    if record is None:
        _check_density(y, t_end)
    return y


def _check_density(rho: np.ndarray, t: float) -> None:
    drift = abs(np.trace(rho).real - 1.0)
    if drift > TRACE_DRIFT_LIMIT:
        raise TraceDrift(f"trace drifted by {drift:.2e} at t = {t:.6g} us; reduce dt")
    lowest = np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))[0]
    if lowest < POSITIVITY_LIMIT:
        raise PositivityLoss(f"density matrix eigenvalue {lowest:.2e} at t = {t:.6g} us; reduce dt")


def _recorder():
    times, states = [], []

    def record(_k, t, y):
        times.append(t)
        states.append(y.copy())

    return times, states, record


def evolve_schrodinger(params: PhysicalParams, psi0, t_start: float, t_end: float,
                       cfg: SolverConfig | None = None) -> Trajectory:
    """Integrate ``d psi/dt = -i H(t) psi`` and record observables."""
    cfg = cfg or SolverConfig()
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (DIM_PAIR,):
        raise InvalidState(f"expected a pair state of dim {DIM_PAIR}, got shape {psi0.shape}")
    norm2 = float(np.vdot(psi0, psi0).real)
    if abs(norm2 - 1.0) > 1e-10:
        raise InvalidState(f"initial state has norm^2 = {norm2!r}")
    times, states, record = _recorder()
    propagate_pure(params, psi0, t_start, t_end, cfg, record)
    return Trajectory.from_states(times, states)


def evolve_lindblad(params: PhysicalParams, rho0, t_start: float, t_end: float,
                    cfg: SolverConfig | None = None) -> Trajectory:
    """Integrate the Lindblad master equation and record observables."""
    cfg = cfg or SolverConfig()
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (DIM_PAIR, DIM_PAIR):
        raise InvalidState(f"expected a {DIM_PAIR}x{DIM_PAIR} density matrix, got {rho0.shape}")
    if np.max(np.abs(rho0 - dagger(rho0))) > 1e-10 or abs(np.trace(rho0).real - 1.0) > 1e-10:
        raise InvalidState("initial density matrix must be Hermitian with unit trace")
    if np.linalg.eigvalsh(rho0)[0] < -1e-8:
        raise InvalidState("initial density matrix is not positive semidefinite")
    times, states, record = _recorder()
    propagate_density(params, rho0, t_start, t_end, cfg, record)
    return Trajectory.from_states(times, states)


def step_convergence_check(params: PhysicalParams, psi0, cfg: SolverConfig | None = None,
                           t_start: float = 0.0, t_end: float | None = None) -> float:
    """Largest population change at shared sample times when the step is halved."""
    cfg = cfg or SolverConfig()
    t_end = 2.0 * params.tau if t_end is None else t_end
    coarse = evolve_schrodinger(params, psi0, t_start, t_end, cfg)
    fine = evolve_schrodinger(params, psi0, t_start, t_end, cfg.halved(params.tau))
    if coarse.times.shape != fine.times.shape or not np.allclose(coarse.times, fine.times, rtol=0, atol=1e-12):
        raise ValueError("halved trajectory does not share the coarse sample times")
    return float(np.max(np.abs(coarse.populations - fine.populations)))
