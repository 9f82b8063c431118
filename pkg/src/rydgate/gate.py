"""Controlled-phase gate: simulation, entangling phase, fidelity and tau calibration."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BracketInvalid, LowReturn, RydgateError, SupportOutsideQubitSubspace
from .linalg import dagger
from .model import DIM_PAIR, IDX, PhysicalParams
from .propagate import SolverConfig, propagate_density, propagate_pure

QUBIT_LABELS = ("00", "01", "10", "11")
QUBIT_INDICES = np.array([IDX[label] for label in QUBIT_LABELS])
# basis order of the 4x4 target matrix: |11>, |10>, |01>, |00>
TARGET_ORDER = ("11", "10", "01", "00")
MIN_RETURN = 0.5
PRESCAN_POINTS = 16


def wrap_phase(phi: float) -> float:
    """Map an angle into ``(-pi, pi]``."""
    wrapped = math.remainder(phi, 2.0 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


def plus_plus_state() -> np.ndarray:
    """``(|0> + |1>)(|0> + |1>) / 2`` on the pair space."""
    psi = np.zeros(DIM_PAIR, dtype=complex)
    psi[QUBIT_INDICES] = 0.5
    return psi


@dataclass(frozen=True)
class TargetGate:
    phi: float
    matrix: np.ndarray

    def embedded(self) -> np.ndarray:
        """16x16 operator: the target on the qubit subspace, identity elsewhere."""
        u = np.eye(DIM_PAIR, dtype=complex)
        rows = [IDX[label] for label in TARGET_ORDER]
        u[np.ix_(rows, rows)] = self.matrix
        return u


def target_gate(phi: float) -> TargetGate:
    """``diag(exp(i phi), 1, 1, 1)`` in the basis |11>, |10>, |01>, |00>."""
    return TargetGate(phi=phi, matrix=np.diag([np.exp(1j * phi), 1.0, 1.0, 1.0]).astype(complex))


def fidelity(rho_final, psi0, target: TargetGate) -> float:
    """``Tr[U rho(0) U^dagger rho(2 tau)]`` with ``rho(0) = |psi0><psi0|``, clipped to [0, 1]."""
    rho_final = np.asarray(rho_final, dtype=complex)
    psi0 = np.asarray(psi0, dtype=complex)
    outside = np.delete(psi0, QUBIT_INDICES)
    if np.max(np.abs(outside), initial=0.0) > 1e-10:
        raise SupportOutsideQubitSubspace("initial state has |p> or |r> amplitude")
    u = target.embedded()
    ideal = u @ np.outer(psi0, psi0.conj()) @ dagger(u)
    value = np.trace(ideal @ rho_final)
    return float(min(1.0, max(0.0, value.real)))


@dataclass
class GateResult:
    """Outcome of one full ``[0, 2 tau]`` cycle for the four qubit basis inputs.

    ``final_states`` maps ``"00"``, ``"01"``, ``"10"``, ``"11"`` to a state
    vector (unitary run) or density matrix (dissipative run).
    ``entangling_phase`` is only defined for unitary runs.
    """

    params: PhysicalParams
    dissipative: bool
    final_states: dict[str, np.ndarray]
    return_probabilities: dict[str, float]
    entangling_phase: float | None
    diagonal_phases: dict[str, float] = field(default_factory=dict)
    fidelity: float | None = None

    def overlap_matrix(self) -> np.ndarray:
        """``M[b', b] = <b'|psi_b(2 tau)>`` restricted to the qubit subspace (unitary runs)."""
        if self.dissipative:
            raise ValueError("overlap matrix needs pure final states")
        cols = [self.final_states[label][QUBIT_INDICES] for label in QUBIT_LABELS]
        return np.array(cols).T


def simulate_gate(params: PhysicalParams, dissipative: bool = False, cfg: SolverConfig | None = None,
                  target: TargetGate | None = None, check_return: bool = True) -> GateResult:
    """Propagate |00>, |01>, |10>, |11> over one full pulse cycle.

    In unitary mode the entangling phase is the gauge-invariant combination
    ``phi_11 - phi_10 - phi_01 + phi_00`` of the diagonal return amplitudes'
    arguments, wrapped to ``(-pi, pi]``. With a ``target`` the fidelity for
    the initial state ``|++>`` is also evaluated, under the same dynamics.
    """
    cfg = cfg or SolverConfig()
    t_end = 2.0 * params.tau
    finals: dict[str, np.ndarray] = {}
    if not dissipative:
        inputs = np.zeros((DIM_PAIR, len(QUBIT_LABELS)), dtype=complex)
        inputs[QUBIT_INDICES, np.arange(len(QUBIT_LABELS))] = 1.0
        out = propagate_pure(params, inputs, 0.0, t_end, cfg)
        for col, label in enumerate(QUBIT_LABELS):
            finals[label] = out[:, col].copy()
        amps = {label: finals[label][IDX[label]] for label in QUBIT_LABELS}
        probs = {label: float(abs(a) ** 2) for label, a in amps.items()}
    else:
        for label in QUBIT_LABELS:
            rho0 = np.zeros((DIM_PAIR, DIM_PAIR), dtype=complex)
            rho0[IDX[label], IDX[label]] = 1.0
            finals[label] = propagate_density(params, rho0, 0.0, t_end, cfg)
        amps = {}
        probs = {label: float(finals[label][IDX[label], IDX[label]].real) for label in QUBIT_LABELS}

    phase = None
    diag = {}
    if amps:
        low = {label: p for label, p in probs.items() if p < MIN_RETURN}
        if low and check_return:
            raise LowReturn(f"return probability below {MIN_RETURN}: {low}")
        diag = {label: float(np.angle(a)) for label, a in amps.items()}
        phase = wrap_phase(diag["11"] - diag["10"] - diag["01"] + diag["00"])

    result = GateResult(params, dissipative, finals, probs, phase, diag)
    if target is not None:
        psi0 = plus_plus_state()
        if dissipative:
            rho_final = propagate_density(params, np.outer(psi0, psi0.conj()), 0.0, t_end, cfg)
        else:
            psi_final = sum(0.5 * finals[label] for label in QUBIT_LABELS)
            rho_final = np.outer(psi_final, psi_final.conj())
        result.fidelity = fidelity(rho_final, psi0, target)
    return result


def entangling_phase(params: PhysicalParams, cfg: SolverConfig | None = None) -> float:
    return simulate_gate(params, dissipative=False, cfg=cfg).entangling_phase


def _unwrap_to(value: float, reference: float) -> float:
    return value + 2.0 * math.pi * round((reference - value) / (2.0 * math.pi))


def calibrate_tau(params: PhysicalParams, phi_target: float, bracket: tuple[float, float],
                  tol: float = 1e-6, cfg: SolverConfig | None = None, max_iter: int = 200) -> float:
    """Half-cycle duration giving entangling phase ``phi_target`` (mod 2 pi).

    The unitary entangling phase is sampled at 16 points across ``bracket``
    and unwrapped. Points whose basis states do not return (``LowReturn``)
    are skipped. The first crossing of ``phi_target + 2 pi m`` between two
    valid neighbours is refined by bisection until the phase is within
    ``tol``. ``params.tau`` is ignored.
    """
    tau_lo, tau_hi = bracket
    if not (0.0 < tau_lo < tau_hi):
        raise BracketInvalid(f"bracket must satisfy 0 < tau_lo < tau_hi, got {bracket}")

    def phase_at(tau: float, strict: bool) -> float:
        return simulate_gate(params.replace(tau=tau), cfg=cfg, check_return=strict).entangling_phase

    taus = np.linspace(tau_lo, tau_hi, PRESCAN_POINTS)
    raw = []
    for t in taus:
        try:
            raw.append(phase_at(t, strict=True))
        except LowReturn:
            raw.append(math.nan)
    raw = np.array(raw)
    valid = ~np.isnan(raw)
    if valid.sum() < 2:
        raise BracketInvalid(f"fewer than two pre-scan points on [{tau_lo}, {tau_hi}] us return to the qubit subspace")
    # unwrap along runs of valid points only
    phases = np.full_like(raw, math.nan)
    run_start = None
    for k in range(len(raw) + 1):
        if k < len(raw) and valid[k]:
            run_start = k if run_start is None else run_start
        elif run_start is not None:
            phases[run_start:k] = np.unwrap(raw[run_start:k])
            run_start = None

    goal = None
    for i in range(len(taus) - 1):
        if not (valid[i] and valid[i + 1]):
            continue
        a = (phases[i] - phi_target) / (2.0 * math.pi)
        b = (phases[i + 1] - phi_target) / (2.0 * math.pi)
        if a == math.floor(a):
            return float(taus[i])
        if math.floor(a) != math.floor(b) or b == math.floor(b):
            goal = phi_target + 2.0 * math.pi * max(math.floor(a), math.floor(b))
            break
    if goal is None:
        raise BracketInvalid(
            f"entangling phase does not cross {phi_target:.6g} (mod 2 pi) on [{tau_lo}, {tau_hi}] us"
        )

    lo, hi = float(taus[i]), float(taus[i + 1])
    f_lo = phases[i] - goal
    if abs(phases[i + 1] - goal) < tol:
        return hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        guess = phases[i] + (phases[i + 1] - phases[i]) * (mid - taus[i]) / (taus[i + 1] - taus[i])
        f_mid = _unwrap_to(phase_at(mid, strict=False), guess) - goal
        if abs(f_mid) < tol:
            return mid
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    raise BracketInvalid(f"bisection did not reach tolerance {tol} within {max_iter} steps")


def default_bracket(params: PhysicalParams, phi_target: float = math.pi) -> tuple[float, float]:
    """Bracket around the weak-interaction estimate ``|phi| = (3/4) V_R tau``."""
    estimate = abs(phi_target) / (0.75 * params.v_r_ang)
    return 0.5 * estimate, 2.0 * estimate


@dataclass(frozen=True)
class SweepRow:
    v_r: float
    tau: float | None
    fidelity: float | None
    error: str | None = None


def _sweep_row(base: PhysicalParams, v_r: float, cfg, phi_target, bracket_fn, tol) -> SweepRow:
    params = base.replace(v_r=v_r)
    try:
        tau = calibrate_tau(params.replace(gamma0=0.0, gamma1=0.0, gammar=0.0, gammard=0.0),
                            phi_target, bracket_fn(params, phi_target), tol=tol, cfg=cfg)
        psi0 = plus_plus_state()
        calibrated = params.replace(tau=tau)
        rho_final = propagate_density(calibrated, np.outer(psi0, psi0.conj()), 0.0, 2.0 * tau, cfg)
        return SweepRow(v_r, tau, fidelity(rho_final, psi0, target_gate(phi_target)))
    except RydgateError as exc:
        return SweepRow(v_r, None, None, f"{type(exc).__name__}: {exc}")


def fidelity_sweep(base_params: PhysicalParams, v_r_values, cfg: SolverConfig | None = None,
                   phi_target: float = math.pi, bracket_fn=default_bracket, tol: float = 1e-6,
                   threads: int = 1) -> list[SweepRow]:
    """For each ``V_R`` (MHz): calibrate tau without dissipation, then evaluate the dissipative fidelity.

    A failed row carries its error message and the sweep continues. Rows are
    returned sorted by ``V_R``.
    """
    values = sorted(float(v) for v in v_r_values)
    if not values:
        raise ValueError("v_r_values must be non-empty")
    cfg = cfg or SolverConfig()

    def run(v):
        return _sweep_row(base_params, v, cfg, phi_target, bracket_fn, tol)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, values))
    else:
        rows = [run(v) for v in values]
    return sorted(rows, key=lambda r: r.v_r)
