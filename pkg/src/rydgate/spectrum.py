"""Instantaneous eigenstates of the pair Hamiltonian and adiabatic branch tracking."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousTracking, DegenerateAngle, DegenerateGap
from .linalg import EigenDecomposition, dagger, eigh
from .model import (
    BASIS_LABELS,
    DIM_ATOM,
    DIM_PAIR,
    IDX,
    RR,
    Level,
    PhysicalParams,
    hamiltonian_derivative,
    pulse,
    swap_operator,
    two_atom_hamiltonian,
)

OVERLAP_FLOOR = 0.5
_CLUSTER_RTOL = 1e-9
_COUPLING_RTOL = 1e-10


def dark_state(theta: float) -> np.ndarray:
    """Single-atom dark state ``cos(theta)|1> - sin(theta)|r>``."""
    v = np.zeros(DIM_ATOM, dtype=complex)
    v[Level.G1] = math.cos(theta)
    v[Level.R] = -math.sin(theta)
    return v


def two_atom_dark_state(theta: float) -> np.ndarray:
    """Normalised zero-energy pair state that |11> follows when the detuning is zero."""
    c, s = math.cos(theta), math.sin(theta)
    weight = c**4 + 2.0 * s**4
    if weight < 1e-12:
        raise DegenerateAngle(f"normalisation vanishes at theta = {theta}")
    v = np.zeros(DIM_PAIR, dtype=complex)
    v[IDX["11"]] = c * c - s * s
    v[IDX["1r"]] = -c * s
    v[IDX["r1"]] = -c * s
    v[IDX["pp"]] = s * s
    return v / math.sqrt(weight)


def instantaneous_spectrum(params: PhysicalParams, t: float) -> EigenDecomposition:
    return eigh(two_atom_hamiltonian(params, t))


def perturbative_phase(params: PhysicalParams, t: float, n_points: int = 10001) -> float:
    """``V_R * integral_0^t sin^4(theta(t')) dt'`` by the composite trapezoid rule (rad)."""
    if n_points < 2:
        raise ValueError("need at least two quadrature points")
    pulse(params, t)  # range check
    grid = np.linspace(0.0, t, n_points)
    integrand = np.sin(np.pi * grid / (2.0 * params.tau)) ** 4
    return params.v_r_ang * float(np.trapezoid(integrand, grid))


def perturbative_phase_report(params: PhysicalParams) -> dict[str, float]:
    """Full-cycle |11> phase from quadrature next to two closed forms.

    ``closed_form`` is ``3 V_R tau / 4``, which the quadrature reproduces.
    ``three_eighths`` is ``3 V_R tau / 8``, a frequently quoted value that is
    half of the integral; it is reported for comparison only.
    """
    return {
        "quadrature": perturbative_phase(params, 2.0 * params.tau),
        "closed_form": 0.75 * params.v_r_ang * params.tau,
        "three_eighths": 0.375 * params.v_r_ang * params.tau,
    }


def _clusters(values: np.ndarray, scale: float) -> list[np.ndarray]:
    """Index groups of (near-)degenerate eigenvalues; ``values`` ascending."""
    tol = _CLUSTER_RTOL * max(1.0, scale)
    groups, start = [], 0
    for k in range(1, len(values) + 1):
        if k == len(values) or values[k] - values[k - 1] > tol:
            groups.append(np.arange(start, k))
            start = k
    return groups


def _align_clusters(values: np.ndarray, vectors: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Rotate each degenerate eigenspace so its basis lines up with ``reference`` columns."""
    vectors = vectors.copy()
    scale = float(np.max(np.abs(values))) if values.size else 1.0
    for group in _clusters(values, scale):
        if len(group) == 1:
            continue
        w = vectors[:, group]
        weight = np.sum(np.abs(dagger(w) @ reference) ** 2, axis=0)
        chosen = np.sort(np.argsort(-weight, kind="stable")[: len(group)])
        u, _, vh = np.linalg.svd(dagger(w) @ reference[:, chosen])
        vectors[:, group] = w @ (u @ vh)
    return vectors


def _seed_vectors(values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Fix the basis of degenerate eigenspaces at ``t = 0``.

    ``H(t)`` commutes with the atom swap and with the number of atoms in the
    uncoupled level |0>. Degenerate spaces are split along the joint
    eigenspaces of these two operators, because the degeneracy lifts along
    that split once the pulses turn on. Within each joint eigenspace the basis
    is aligned to the computational basis states.
    """
    vectors = vectors.copy()
    labels = _symmetry_labels()
    identity = np.eye(DIM_PAIR, dtype=complex)
    scale = float(np.max(np.abs(values))) if values.size else 1.0
    for group in _clusters(values, scale):
        if len(group) == 1:
            continue
        w = vectors[:, group]
        block = dagger(w) @ labels @ w
        split = eigh(0.5 * (block + dagger(block)))
        w = w @ split.vectors
        parts, start = [], 0
        for k in range(1, len(group) + 1):
            if k == len(group) or split.values[k] - split.values[k - 1] > 0.5:
                sub = w[:, start:k]
                parts.append(_align_clusters(np.zeros(k - start), sub, identity))
                start = k
        vectors[:, group] = np.hstack(parts)
    return vectors


def _symmetry_labels() -> np.ndarray:
    """``S + 3 N0``: distinct integer eigenvalues for every (parity, |0>-count) sector."""
    n0 = np.diag([float(lab.count("0")) for lab in BASIS_LABELS]).astype(complex)
    return swap_operator() + 3.0 * n0


def _greedy_match(overlap: np.ndarray) -> np.ndarray:
    """``match[i]`` is the new column assigned to previous branch ``i``."""
    n = overlap.shape[0]
    match = np.full(n, -1)
    taken = np.zeros(n, dtype=bool)
    for flat in np.argsort(-overlap, axis=None, kind="stable"):
        i, j = divmod(int(flat), n)
        if match[i] >= 0 or taken[j]:
            continue
        match[i] = j
        taken[j] = True
    return match


@dataclass(frozen=True)
class SpectrumBranches:
    """Continuity-tracked eigenvalue curves over ``[0, 2 tau]``.

    ``energies[k, b]`` and ``vectors[k, :, b]`` give branch ``b`` at
    ``times[k]``. Each branch is labelled by the basis state it overlaps most
    at ``t = 0`` (one-to-one, so mixed eigenvectors get the best free
    label); ``connectivity`` maps that label to the dominant basis state
    at ``t = tau``.
    """

    times: np.ndarray
    energies: np.ndarray
    vectors: np.ndarray
    labels: tuple[str, ...]
    connectivity: dict[str, str]
    min_overlap: float

    @property
    def tau_index(self) -> int:
        return (len(self.times) - 1) // 2

    def branch(self, label: str) -> int:
        return self.labels.index(label)

    def weight(self, label: str, basis_label: str, k: int | None = None) -> np.ndarray | float:
        """``|<basis|v_branch>|^2`` along the grid, or at grid index ``k``."""
        w = np.abs(self.vectors[:, IDX[basis_label], self.branch(label)]) ** 2
        return w if k is None else float(w[k])

    @property
    def rr_weight_at_tau(self) -> float:
        """|rr> content of the branch seeded in |11>, at ``t = tau``."""
        return self.weight("11", "rr", self.tau_index)


def track_branches(params: PhysicalParams, grid_size: int = 200) -> SpectrumBranches:
    """Follow all 16 eigenvectors of ``H(t)`` by maximal overlap.

    The grid has ``grid_size`` intervals per half cycle, so ``t = tau`` is the
    middle point. Degenerate eigenspaces are first rotated to match the
    previous grid point (at ``t = 0``, split by exchange parity and aligned
    to the basis states), then branches are
    matched greedily on ``|<v_prev|v_new>|^2``.
    """
    if grid_size < 100:
        raise ValueError("grid_size must be at least 100")
    times = np.linspace(0.0, 2.0 * params.tau, 2 * grid_size + 1)
    energies = np.empty((len(times), DIM_PAIR))
    vectors = np.empty((len(times), DIM_PAIR, DIM_PAIR), dtype=complex)

    dec = instantaneous_spectrum(params, times[0])
    vecs = _seed_vectors(dec.values, dec.vectors)
    energies[0], vectors[0] = dec.values, vecs
    owner = _greedy_match(np.abs(vecs) ** 2)
    names = [""] * DIM_PAIR
    for basis, b in enumerate(owner):
        names[b] = BASIS_LABELS[basis]
    labels = tuple(names)

    worst = 1.0
    for k in range(1, len(times)):
        prev = vectors[k - 1]
        dec = instantaneous_spectrum(params, times[k])
        new = _align_clusters(dec.values, dec.vectors, prev)
        amp = dagger(prev) @ new
        overlap = np.abs(amp) ** 2
        match = _greedy_match(overlap)
        best = overlap[np.arange(DIM_PAIR), match]
        if best.min() < OVERLAP_FLOOR:
            b = int(np.argmin(best))
            raise AmbiguousTracking(
                f"branch {labels[b]} overlap {best[b]:.3f} < {OVERLAP_FLOOR} at t = {times[k]:.6g} us"
            )
        worst = min(worst, float(best.min()))
        gauge = amp[np.arange(DIM_PAIR), match]
        gauge = np.where(np.abs(gauge) > 0, np.conj(gauge) / np.abs(gauge), 1.0)
        vectors[k] = new[:, match] * gauge
        energies[k] = dec.values[match]

    mid = (len(times) - 1) // 2
    connectivity = {
        labels[b]: BASIS_LABELS[int(np.argmax(np.abs(vectors[mid, :, b])))] for b in range(DIM_PAIR)
    }
    return SpectrumBranches(times, energies, vectors, labels, connectivity, worst)


def adiabaticity_metric(params: PhysicalParams, grid_size: int = 200) -> float:
    """Largest ``|<m|dH/dt|n>| / (E_m - E_n)^2`` over the grid and coupled eigenpairs.

    Pairs without a matrix element (different symmetry sectors) are skipped.
    Inside an exactly degenerate eigenspace the basis diagonalising ``dH/dt``
    is used, so a degenerate pair only counts if it stays coupled there, in
    which case :class:`DegenerateGap` is raised.
    """
    if grid_size < 100:
        raise ValueError("grid_size must be at least 100")
    worst = 0.0
    for t in np.linspace(0.0, 2.0 * params.tau, 2 * grid_size + 1):
        dec = instantaneous_spectrum(params, t)
        dh = hamiltonian_derivative(params, t)
        vecs = dec.vectors.copy()
        groups = _clusters(dec.values, float(np.max(np.abs(dec.values))))
        for group in groups:
            if len(group) > 1:
                w = vecs[:, group]
                block = dagger(w) @ dh @ w
                vecs[:, group] = w @ eigh(0.5 * (block + dagger(block))).vectors
        coupling = np.abs(dagger(vecs) @ dh @ vecs)
        floor = _COUPLING_RTOL * max(1.0, float(np.max(np.abs(dh))))
        gap = dec.values[:, None] - dec.values[None, :]
        same = np.zeros((DIM_PAIR, DIM_PAIR), dtype=bool)
        for group in groups:
            same[np.ix_(group, group)] = True
        np.fill_diagonal(coupling, 0.0)
        if np.any(same & (coupling > floor)):
            raise DegenerateGap(f"coupled degenerate eigenstates at t = {t:.6g} us")
        mask = ~same & (coupling > floor)
        if np.any(mask):
            worst = max(worst, float(np.max(coupling[mask] / gap[mask] ** 2)))
    return worst
