"""Dense operator algebra on the qubit (x) oscillator Hilbert space.

Basis ordering is qubit-major: ``index = q * (n_max + 1) + n`` where
``q = 0`` is the excited qubit level and ``q = 1`` the ground level.
"""
from dataclasses import dataclass

import numpy as np

QUBIT_DIM = 2

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# sigma_+ = |e><g| raises the qubit; excited is index 0
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class HilbertDims:
    n_max: int

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max!r}")

    @property
    def qubit_dim(self) -> int:
        return QUBIT_DIM

    @property
    def osc_dim(self) -> int:
        return self.n_max + 1

    @property
    def total(self) -> int:
        return QUBIT_DIM * (self.n_max + 1)

    def index(self, q: int, n: int) -> int:
        return q * self.osc_dim + n


def _check_n_max(n_max):
    if int(n_max) != n_max or n_max < 1:
        raise ValueError(f"n_max must be an integer >= 1, got {n_max!r}")


def annihilation(n_max: int) -> np.ndarray:
    """Truncated lowering operator with ``a[n-1, n] = sqrt(n)``."""
    _check_n_max(n_max)
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1).astype(complex)


def creation(n_max: int) -> np.ndarray:
    return adjoint(annihilation(n_max))


def number(n_max: int) -> np.ndarray:
    _check_n_max(n_max)
    return np.diag(np.arange(n_max + 1)).astype(complex)


def position(n_max: int) -> np.ndarray:
    a = annihilation(n_max)
    return (a + adjoint(a)) / np.sqrt(2)


def momentum(n_max: int) -> np.ndarray:
    a = annihilation(n_max)
    return (a - adjoint(a)) / (1j * np.sqrt(2))


def adjoint(a: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(a)).T


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product, left factor is the slow index."""
    return np.kron(a, b)


def _check_square_pair(a, b):
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
        raise ValueError(f"need square matrices of equal shape, got {a.shape} and {b.shape}")


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    _check_square_pair(a, b)
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    _check_square_pair(a, b)
    return a @ b + b @ a


def lift_osc(op: np.ndarray) -> np.ndarray:
    """Embed an oscillator operator as ``I_2 (x) op``."""
    return kron(IDENTITY_2, op)


def lift_qubit(op: np.ndarray, n_max: int) -> np.ndarray:
    return kron(op, np.eye(n_max + 1, dtype=complex))


def partial_trace_env(rho: np.ndarray, dims: HilbertDims) -> np.ndarray:
    """Trace out the oscillator, returning the 2x2 reduced qubit matrix.

    Works for any square matrix of the right size, not only states.
    """
    rho = np.asarray(rho)
    d = dims.total
    if rho.shape != (d, d):
        raise ValueError(f"expected a {d}x{d} matrix for n_max={dims.n_max}, got {rho.shape}")
    return np.einsum("anbn->ab", rho.reshape(QUBIT_DIM, dims.osc_dim, QUBIT_DIM, dims.osc_dim))


def partial_trace_qubit(rho: np.ndarray, dims: HilbertDims) -> np.ndarray:
    rho = np.asarray(rho)
    d = dims.total
    if rho.shape != (d, d):
        raise ValueError(f"expected a {d}x{d} matrix for n_max={dims.n_max}, got {rho.shape}")
    return np.einsum("anam->nm", rho.reshape(QUBIT_DIM, dims.osc_dim, QUBIT_DIM, dims.osc_dim))


def hermiticity_defect(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - adjoint(a)))) if a.size else 0.0
