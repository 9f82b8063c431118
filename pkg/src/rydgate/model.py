"""Level scheme, pulses, Hamiltonians and collapse operators.

Every atom has four levels, indexed ``|0>=0, |1>=1, |p>=2, |r>=3``. Two-atom
states use atom-1-major ordering, ``index = 4 * level(atom 1) + level(atom 2)``,
so ``|11> = 5``, ``|pp> = 10`` and ``|rr> = 15``.

Parameters are given as ordinary frequencies in MHz and times in
microseconds. Everything that enters the dynamics is converted once, here, to
angular frequency in rad/us.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from enum import IntEnum
from functools import lru_cache

import numpy as np

from .errors import ParameterError, TimeOutOfRange
from .linalg import ket_bra, tensor_product

TWO_PI = 2.0 * math.pi
DIM_ATOM = 4
DIM_PAIR = 16


class Level(IntEnum):
    G0 = 0
    G1 = 1
    P = 2
    R = 3


LEVEL_LABELS = {Level.G0: "0", Level.G1: "1", Level.P: "p", Level.R: "r"}


def pair_index(a: Level | int, b: Level | int) -> int:
    return DIM_ATOM * int(a) + int(b)


def pair_label(index: int) -> str:
    a, b = divmod(index, DIM_ATOM)
    return LEVEL_LABELS[Level(a)] + LEVEL_LABELS[Level(b)]


BASIS_LABELS = tuple(pair_label(i) for i in range(DIM_PAIR))
IDX = {label: i for i, label in enumerate(BASIS_LABELS)}
RR = IDX["rr"]


@dataclass(frozen=True)
class PhysicalParams:
    """Laser, interaction and decay parameters.

    All frequencies and rates are ordinary frequencies in MHz (the value of
    ``f`` in ``omega = 2 pi f``); ``tau`` is the half-cycle duration in us.
    """

    omega: float
    delta: float
    v_r: float
    tau: float
    gamma0: float = 0.0
    gamma1: float = 0.0
    gammar: float = 0.0
    gammard: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise ParameterError(f"{f.name} must be finite, got {value!r}")
        if self.omega <= 0:
            raise ParameterError(f"omega must be positive, got {self.omega}")
        if self.tau <= 0:
            raise ParameterError(f"tau must be positive, got {self.tau}")
        for name in ("gamma0", "gamma1", "gammar", "gammard"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be non-negative")

    @classmethod
    def with_gamma_p(cls, gamma_p: float, **kwargs) -> "PhysicalParams":
        """Split the total |p> decay rate evenly between the two ground states."""
        return cls(gamma0=gamma_p / 2.0, gamma1=gamma_p / 2.0, **kwargs)

    def replace(self, **changes) -> "PhysicalParams":
        return replace(self, **changes)

    @property
    def gamma_p(self) -> float:
        return self.gamma0 + self.gamma1

    # angular values, rad/us
    @property
    def omega_ang(self) -> float:
        return TWO_PI * self.omega

    @property
    def delta_ang(self) -> float:
        return TWO_PI * self.delta

    @property
    def v_r_ang(self) -> float:
        return TWO_PI * self.v_r

    @property
    def is_closed(self) -> bool:
        return self.gamma0 == self.gamma1 == self.gammar == self.gammard == 0.0


@dataclass(frozen=True)
class PulseSample:
    t: float
    omega1: float
    omega2: float
    theta: float


def _check_time(params: PhysicalParams, t: float) -> float:
    t_max = 2.0 * params.tau
    slack = 1e-12 * t_max
    if not (-slack <= t <= t_max + slack):
        raise TimeOutOfRange(f"t = {t} outside [0, {t_max}]")
    return min(max(t, 0.0), t_max)


def pulse_amplitudes(params: PhysicalParams, t):
    """Vectorised ``(omega1, omega2)`` in rad/us; no range check."""
    x = np.pi * np.asarray(t, dtype=float) / (2.0 * params.tau)
    return params.omega_ang * np.sin(x), params.omega_ang * np.abs(np.cos(x))


def pulse(params: PhysicalParams, t: float) -> PulseSample:
    """Counter-intuitive sin / |cos| pulse pair at time ``t`` (us)."""
    t = _check_time(params, t)
    x = math.pi * t / (2.0 * params.tau)
    om1 = params.omega_ang * math.sin(x)
    om2 = params.omega_ang * abs(math.cos(x))
    return PulseSample(t=t, omega1=om1, omega2=om2, theta=math.atan2(om1, om2))


def pulse_derivative(params: PhysicalParams, t: float) -> tuple[float, float]:
    """Analytic time derivatives of ``(omega1, omega2)``, rad/us^2.

    ``omega2`` has a kink at ``t = tau``; the left derivative is returned there.
    """
    t = _check_time(params, t)
    k = math.pi / (2.0 * params.tau)
    x = k * t
    d1 = params.omega_ang * k * math.cos(x)
    d2 = -params.omega_ang * k * math.sin(x)
    if t > params.tau:
        d2 = -d2
    return d1, d2


# single-atom operator pieces, dimensionless
_P = ket_bra(Level.P, Level.P, DIM_ATOM)
_C1 = ket_bra(Level.G1, Level.P, DIM_ATOM) + ket_bra(Level.P, Level.G1, DIM_ATOM)
_C2 = ket_bra(Level.P, Level.R, DIM_ATOM) + ket_bra(Level.R, Level.P, DIM_ATOM)
_I4 = np.eye(DIM_ATOM, dtype=complex)


def _both(op: np.ndarray) -> np.ndarray:
    return tensor_product(op, _I4) + tensor_product(_I4, op)


_PAIR_P = _both(_P)
_PAIR_C1 = _both(_C1)
_PAIR_C2 = _both(_C2)


@dataclass(frozen=True)
class HamiltonianTerms:
    """``H(t) = static + omega1(t) * coupling1 + omega2(t) * coupling2``."""

    static: np.ndarray
    coupling1: np.ndarray
    coupling2: np.ndarray

    def at(self, omega1: float, omega2: float) -> np.ndarray:
        return self.static + omega1 * self.coupling1 + omega2 * self.coupling2


@lru_cache(maxsize=256)
def _pair_terms(delta_ang: float, v_r_ang: float) -> HamiltonianTerms:
    static = delta_ang * _PAIR_P
    static[RR, RR] += v_r_ang
    for m in (static, _PAIR_C1, _PAIR_C2):
        m.setflags(write=False)
    return HamiltonianTerms(static, _PAIR_C1, _PAIR_C2)


def hamiltonian_terms(params: PhysicalParams) -> HamiltonianTerms:
    return _pair_terms(params.delta_ang, params.v_r_ang)


def single_atom_hamiltonian(params: PhysicalParams, t: float) -> np.ndarray:
    """4x4 single-atom Hamiltonian in rad/us; the |0> row and column are zero."""
    s = pulse(params, t)
    return params.delta_ang * _P + s.omega1 * _C1 + s.omega2 * _C2


def two_atom_hamiltonian(params: PhysicalParams, t: float) -> np.ndarray:
    """16x16 pair Hamiltonian ``H1 x I + I x H2 + V_R |rr><rr|`` in rad/us."""
    s = pulse(params, t)
    return hamiltonian_terms(params).at(s.omega1, s.omega2)


def hamiltonian_derivative(params: PhysicalParams, t: float) -> np.ndarray:
    d1, d2 = pulse_derivative(params, t)
    return d1 * _PAIR_C1 + d2 * _PAIR_C2


def single_atom_collapse_operators(params: PhysicalParams) -> list[tuple[str, np.ndarray]]:
    """Named single-atom jump operators with angular rates folded in.

    Channels with zero rate are left out.
    """
    rates = {
        "C0": TWO_PI * params.gamma0,
        "C1": TWO_PI * params.gamma1,
        "Cr": TWO_PI * params.gammar,
        "Crd": TWO_PI * params.gammard,
    }
    shapes = {
        "C0": ket_bra(Level.G0, Level.P, DIM_ATOM),
        "C1": ket_bra(Level.G1, Level.P, DIM_ATOM),
        "Cr": ket_bra(Level.P, Level.R, DIM_ATOM),
        "Crd": _I4 - 2.0 * ket_bra(Level.R, Level.R, DIM_ATOM),
    }
    return [(name, math.sqrt(rates[name]) * shapes[name]) for name in rates if rates[name] > 0]


def collapse_operators(params: PhysicalParams) -> list[np.ndarray]:
    """Jump operators on the pair space, ordered atom 1 then atom 2, C0, C1, Cr, Crd.

    Zero-rate channels are omitted, so a closed system returns an empty list.
    """
    single = single_atom_collapse_operators(params)
    ops = [tensor_product(c, _I4) for _, c in single]
    ops += [tensor_product(_I4, c) for _, c in single]
    return ops


def swap_operator() -> np.ndarray:
    """Permutation exchanging the two atoms."""
    s = np.zeros((DIM_PAIR, DIM_PAIR), dtype=complex)
    for a in range(DIM_ATOM):
        for b in range(DIM_ATOM):
            s[pair_index(b, a), pair_index(a, b)] = 1.0
    return s
