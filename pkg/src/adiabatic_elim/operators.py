"""Standard operator builders.

Qubits use the ordered basis ``(|e>, |g>)`` so that ``sigma_z = |e><e| - |g><g|``
and ``sigma_minus = |g><e|``; oscillators use the Fock basis ``|0>, ..., |N-1>``.
"""

import numpy as np


def identity(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex)


def zero(d: int) -> np.ndarray:
    return np.zeros((d, d), dtype=complex)


def sigma_minus() -> np.ndarray:
    return np.array([[0, 0], [1, 0]], dtype=complex)


def sigma_plus() -> np.ndarray:
    return np.array([[0, 1], [0, 0]], dtype=complex)


def sigma_x() -> np.ndarray:
    return np.array([[0, 1], [1, 0]], dtype=complex)


def sigma_y() -> np.ndarray:
    return np.array([[0, -1j], [1j, 0]], dtype=complex)


def sigma_z() -> np.ndarray:
    return np.array([[1, 0], [0, -1]], dtype=complex)


def excited_projector() -> np.ndarray:
    return np.array([[1, 0], [0, 0]], dtype=complex)


def ground_projector() -> np.ndarray:
    return np.array([[0, 0], [0, 1]], dtype=complex)


def annihilation(n: int) -> np.ndarray:
    """Truncated bosonic lowering operator on ``n`` Fock states."""
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def creation(n: int) -> np.ndarray:
    return annihilation(n).conj().T


def number(n: int) -> np.ndarray:
    return np.diag(np.arange(n, dtype=float)).astype(complex)


def ket(d: int, i: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return v


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def plus_state() -> np.ndarray:
    """Density matrix of (|e> + |g>)/sqrt(2)."""
    return projector(np.array([1, 1], dtype=complex) / np.sqrt(2))


def maximally_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex) / d


# name -> builder(dim); used by the document parser
NAMED = {
    "identity": identity,
    "zero": zero,
    "sigma_minus": lambda d: _qubit(sigma_minus, d, "sigma_minus"),
    "sigma_plus": lambda d: _qubit(sigma_plus, d, "sigma_plus"),
    "sigma_x": lambda d: _qubit(sigma_x, d, "sigma_x"),
    "sigma_y": lambda d: _qubit(sigma_y, d, "sigma_y"),
    "sigma_z": lambda d: _qubit(sigma_z, d, "sigma_z"),
    "excited": lambda d: _qubit(excited_projector, d, "excited"),
    "ground": lambda d: _qubit(ground_projector, d, "ground"),
    "annihilation": annihilation,
    "creation": creation,
    "number": number,
}

OSCILLATOR_BUILDERS = frozenset({"annihilation", "creation", "number"})


def _qubit(builder, d, name):
    if d != 2:
        raise ValueError(f"{name} needs a qubit (dim 2), got dim {d}")
    return builder()
