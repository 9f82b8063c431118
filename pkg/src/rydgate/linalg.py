"""Dense complex linear algebra for 4- and 16-dimensional atomic systems.

States are 1-D complex numpy arrays and operators are 2-D complex arrays.
Nothing here is sparse; the largest object is a 16x16 matrix.

The Hermitian eigensolver is a cyclic Jacobi method using a round-robin
(parallel) pair ordering, so that every round of ``n/2`` disjoint plane
rotations can be applied as one unitary matrix product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonHermitianInput

HERMITIAN_TOL = 1e-12
_MAX_SWEEPS = 60


@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending eigenvalues and matching orthonormal eigenvectors.

    ``vectors[:, k]`` is the eigenvector belonging to ``values[k]``.
    """

    values: np.ndarray
    vectors: np.ndarray

    def vector(self, k: int) -> np.ndarray:
        return self.vectors[:, k]

    def __len__(self) -> int:
        return len(self.values)


def as_operator(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    return a


def as_state(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D state vector, got shape {v.shape}")
    return v


def basis_state(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def ket_bra(i: int, j: int, dim: int) -> np.ndarray:
    """Matrix unit ``|i><j|``."""
    m = np.zeros((dim, dim), dtype=complex)
    m[i, j] = 1.0
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermiticity_error(a: np.ndarray) -> float:
    """Largest entrywise deviation ``max|A - A^dagger|``."""
    return float(np.max(np.abs(a - dagger(a)))) if a.size else 0.0


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product; ``(a x b)[i*n + k, j*n + l] = a[i, j] * b[k, l]``."""
    return np.kron(as_operator(a), as_operator(b))


def matvec(a, v) -> np.ndarray:
    a = as_operator(a)
    v = as_state(v)
    if a.shape[1] != v.shape[0]:
        raise DimensionMismatch(f"operator of dim {a.shape[1]} applied to state of dim {v.shape[0]}")
    return a @ v


def inner(u, v) -> complex:
    """``<u|v>``, conjugating the first argument."""
    u = as_state(u)
    v = as_state(v)
    if u.shape != v.shape:
        raise DimensionMismatch(f"inner product of dims {u.shape[0]} and {v.shape[0]}")
    return complex(np.vdot(u, v))


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings for the ``n - 1`` rounds of a round-robin tournament (``n`` even)."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        p = np.array(players[:half])
        q = np.array(players[half:][::-1])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n, dtype=complex)
    if n == 1:
        return a.real.diagonal().copy(), v
    padded = n + (n % 2)
    rounds = [
        (p[q < n], q[q < n]) for p, q in _round_robin(padded)
    ]
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n), v
    target = (np.finfo(float).eps * scale) ** 2

    for _ in range(_MAX_SWEEPS):
        off = np.sum(np.abs(a - np.diag(np.diagonal(a))) ** 2)
        if off <= target:
            break
        for p, q in rounds:
            b = a[p, q]
            mag = np.abs(b)
            active = mag > 1e-300
            if not np.any(active):
                continue
            p, q, b, mag = p[active], q[active], b[active], mag[active]
            phase = b / mag
            zeta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            j = np.eye(n, dtype=complex)
            j[p, p] = c
            j[q, q] = c
            j[p, q] = s * phase
            j[q, p] = -s * np.conj(phase)
            a = dagger(j) @ a @ j
            v = v @ j
        a = 0.5 * (a + dagger(a))
    return a.diagonal().real.copy(), v


def eigh(h, tol: float = HERMITIAN_TOL) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Raises :class:`NonHermitianInput` when ``max|H - H^dagger|`` exceeds
    ``tol`` scaled by ``max(1, max|H|)``.
    """
    h = as_operator(h)
    bound = tol * max(1.0, float(np.max(np.abs(h))) if h.size else 1.0)
    err = hermiticity_error(h)
    if err > bound:
        raise NonHermitianInput(f"max|H - H^dagger| = {err:.3e} exceeds {bound:.3e}")
    values, vectors = _jacobi(0.5 * (h + dagger(h)))
    order = np.argsort(values, kind="stable")
    return EigenDecomposition(values=values[order], vectors=vectors[:, order])
