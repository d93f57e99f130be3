"""Dense complex matrix kernel.

Operators are plain ``numpy`` complex arrays of shape ``(rows, cols)``.
Vectorization is column stacking everywhere in this package::

    vec(X)[j * d + i] == X[i, j]

so that ``vec(A @ X @ B) == kron(B.T, A) @ vec(X)``.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError

__all__ = [
    "as_matrix",
    "dag",
    "kron",
    "partial_trace",
    "vectorize",
    "devectorize",
    "trace_norm",
    "fro_norm",
    "structural_tol",
    "is_hermitian",
    "is_psd",
    "is_trace_one",
    "hermitize",
    "commutator",
    "anticommutator",
    "map_matrix",
    "choi_matrix",
]


def as_matrix(X) -> np.ndarray:
    A = np.asarray(X, dtype=complex)
    if A.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {A.shape}")
    return A


def dag(X: np.ndarray) -> np.ndarray:
    return X.conj().T


def kron(A, B) -> np.ndarray:
    """Kronecker product, ``out[i*rB + k, j*cB + l] = A[i, j] * B[k, l]``."""
    return np.kron(as_matrix(A), as_matrix(B))


def partial_trace(X, dimA: int, dimB: int, over: str = "A") -> np.ndarray:
    """Trace out one factor of an operator on H_A (x) H_B.

    ``over="A"`` returns an operator on H_B, ``over="B"`` one on H_A.
    """
    X = as_matrix(X)
    n = dimA * dimB
    if X.shape != (n, n):
        raise DimensionError(
            f"partial_trace: shape {X.shape} does not match dims ({dimA}, {dimB})"
        )
    T = X.reshape(dimA, dimB, dimA, dimB)
    if over == "A":
        return np.einsum("ijik->jk", T)
    if over == "B":
        return np.einsum("ijkj->ik", T)
    raise ValueError(f"over must be 'A' or 'B', got {over!r}")


def vectorize(X) -> np.ndarray:
    return as_matrix(X).reshape(-1, order="F")


def devectorize(v, d: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    n = v.size
    if d is None:
        d = int(round(np.sqrt(n)))
    if d * d != n:
        raise DimensionError(f"vector of length {n} is not a vectorized {d}x{d} matrix")
    return v.reshape(d, d, order="F")


def trace_norm(X) -> float:
    """Sum of singular values."""
    return float(np.linalg.svd(as_matrix(X), compute_uv=False).sum())


def fro_norm(X) -> float:
    return float(np.linalg.norm(as_matrix(X)))


def structural_tol(X, rel: float = 1e-9) -> float:
    return rel * max(1.0, fro_norm(X))


def is_hermitian(X, tol: float | None = None) -> bool:
    X = as_matrix(X)
    if X.shape[0] != X.shape[1]:
        return False
    tol = structural_tol(X) if tol is None else tol
    return fro_norm(X - dag(X)) <= tol


def is_psd(X, tol: float | None = None) -> bool:
    X = as_matrix(X)
    tol = structural_tol(X) if tol is None else tol
    if not is_hermitian(X, tol):
        return False
    return float(np.linalg.eigvalsh(hermitize(X)).min()) >= -tol


def is_trace_one(X, tol: float | None = None) -> bool:
    X = as_matrix(X)
    tol = structural_tol(X) if tol is None else tol
    return abs(np.trace(X) - 1.0) <= tol


def hermitize(X) -> np.ndarray:
    X = as_matrix(X)
    return 0.5 * (X + dag(X))


def commutator(A, B) -> np.ndarray:
    return A @ B - B @ A


def anticommutator(A, B) -> np.ndarray:
    return A @ B + B @ A


def map_matrix(f, d_in: int, d_out: int | None = None) -> np.ndarray:
    """Matrix of a linear map on operators, acting on column-stacked vectors.

    ``f`` takes a ``d_in x d_in`` matrix and returns a ``d_out x d_out`` one.
    """
    d_out = d_in if d_out is None else d_out
    S = np.zeros((d_out * d_out, d_in * d_in), dtype=complex)
    for b in range(d_in):
        for a in range(d_in):
            E = np.zeros((d_in, d_in), dtype=complex)
            E[a, b] = 1.0
            S[:, b * d_in + a] = vectorize(f(E))
    return S


def choi_matrix(S, d_in: int, d_out: int | None = None) -> np.ndarray:
    """Choi matrix ``sum_ab |a><b| (x) Phi(|a><b|)`` of a map given by its matrix."""
    d_out = d_in if d_out is None else d_out
    S = np.asarray(S, dtype=complex)
    J = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for b in range(d_in):
        for a in range(d_in):
            J[a * d_out:(a + 1) * d_out, b * d_out:(b + 1) * d_out] = devectorize(
                S[:, b * d_in + a], d_out
            )
    return J
