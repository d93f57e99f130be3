"""Lindblad generators as dense superoperators, and the standard solves on them.

A generator acts on column-stacked density matrices, so for an operator ``X``
on a ``d``-dimensional space, ``L(X) == devectorize(L.matrix @ vectorize(X))``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from .config import TOL
from .errors import DimensionError, NonUniqueSteadyState, NotHermitianError, NumericalError
from .linalg import (
    as_matrix,
    choi_matrix,
    dag,
    devectorize,
    fro_norm,
    hermitize,
    is_hermitian,
    kron,
    map_matrix,
    partial_trace,
    structural_tol,
    vectorize,
)

logger = logging.getLogger(__name__)

# singular values of L below this fraction of the largest count as null directions


@dataclass(frozen=True)
class SubsystemSpec:
    """Hamiltonian plus rated jump operators on one subsystem.

    Each jump is ``(operator, rate)`` and contributes ``rate * D[operator]``.
    """

    dim: int
    hamiltonian: np.ndarray
    jumps: tuple = ()

    def __post_init__(self):
        H = as_matrix(self.hamiltonian)
        if H.shape != (self.dim, self.dim):
            raise DimensionError(f"hamiltonian has shape {H.shape}, expected dim {self.dim}")
        if not is_hermitian(H):
            raise NotHermitianError("subsystem Hamiltonian is not Hermitian", stage="SubsystemSpec")
        jumps = []
        for op, rate in self.jumps:
            op = as_matrix(op)
            if op.shape != (self.dim, self.dim):
                raise DimensionError(f"jump operator has shape {op.shape}, expected dim {self.dim}")
            if rate < 0:
                raise ValueError(f"jump rate must be nonnegative, got {rate}")
            jumps.append((op, float(rate)))
        object.__setattr__(self, "hamiltonian", H)
        object.__setattr__(self, "jumps", tuple(jumps))

    @classmethod
    def empty(cls, dim: int) -> "SubsystemSpec":
        return cls(dim, np.zeros((dim, dim), dtype=complex))

    def scaled_jumps(self) -> list[np.ndarray]:
        return [np.sqrt(rate) * op for op, rate in self.jumps]


@dataclass(frozen=True, eq=False)
class SuperOperator:
    """A linear map on ``d x d`` operators, stored as its ``d^2 x d^2`` matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=complex)
        n = M.shape[0]
        d = int(round(np.sqrt(n)))
        if M.ndim != 2 or M.shape[1] != n or d * d != n:
            raise DimensionError(f"superoperator matrix must be d^2 x d^2, got {M.shape}")
        object.__setattr__(self, "matrix", M)

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.matrix.shape[0])))

    def __call__(self, X) -> np.ndarray:
        return devectorize(self.matrix @ vectorize(X), self.dim)

    def __add__(self, other: "SuperOperator") -> "SuperOperator":
        return SuperOperator(self.matrix + other.matrix)

    def __sub__(self, other: "SuperOperator") -> "SuperOperator":
        return SuperOperator(self.matrix - other.matrix)

    def __neg__(self) -> "SuperOperator":
        return SuperOperator(-self.matrix)

    def __mul__(self, c) -> "SuperOperator":
        return SuperOperator(complex(c) * self.matrix)

    __rmul__ = __mul__

    @classmethod
    def zero(cls, d: int) -> "SuperOperator":
        return cls(np.zeros((d * d, d * d), dtype=complex))

    def dual(self) -> "SuperOperator":
        """Heisenberg-picture adjoint w.r.t. the Hilbert-Schmidt product."""
        return SuperOperator(dag(self.matrix))

    def norm(self) -> float:
        return fro_norm(self.matrix)

    def trace_defect(self) -> float:
        """Size of ``vec(I)^T L``; zero for trace-preserving generators."""
        d = self.dim
        return float(np.linalg.norm(vectorize(np.eye(d)) @ self.matrix))

    def is_trace_preserving(self, tol: float = 1e-10) -> bool:
        return self.trace_defect() <= tol * max(1.0, self.norm())

    def is_hermiticity_preserving(self, tol: float = 1e-10, samples: int = 5, seed: int = 0) -> bool:
        rng = np.random.default_rng(seed)
        d = self.dim
        for _ in range(samples):
            X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            if fro_norm(self(dag(X)) - dag(self(X))) > tol * max(1.0, self.norm()) * fro_norm(X):
                return False
        return True

    def lift(self, dim_other: int, side: str) -> "SuperOperator":
        """Extend to a bipartite space; ``side="A"`` means this acts on the first factor."""
        d = self.dim
        L4 = self.matrix.reshape(d, d, d, d)  # (col_out, row_out, col_in, row_in)
        I = np.eye(dim_other)
        if side == "A":
            # joint vec index order: (colA, colB, rowA, rowB)
            T = np.einsum("acgi,bh,dj->abcdghij", L4, I, I)
        elif side == "B":
            T = np.einsum("bdhj,ag,ci->abcdghij", L4, I, I)
        else:
            raise ValueError(f"side must be 'A' or 'B', got {side!r}")
        n = (d * dim_other) ** 2
        return SuperOperator(T.reshape(n, n))


def hamiltonian_superop(H) -> SuperOperator:
    """Matrix of ``X -> -i[H, X]``."""
    H = as_matrix(H)
    I = np.eye(H.shape[0])
    return SuperOperator(-1j * (np.kron(I, H) - np.kron(H.T, I)))


def dissipator_superop(L, rate: float = 1.0) -> SuperOperator:
    """Matrix of ``X -> rate * (L X L^+ - {L^+ L, X}/2)``."""
    L = as_matrix(L)
    I = np.eye(L.shape[0])
    LdL = dag(L) @ L
    M = np.kron(L.conj(), L) - 0.5 * np.kron(I, LdL) - 0.5 * np.kron(LdL.T, I)
    return SuperOperator(rate * M)


def lindbladian(H, jumps: Sequence = ()) -> SuperOperator:
    """``-i[H, .] + sum D[L]`` for unrated jump operators ``L``."""
    total = hamiltonian_superop(H)
    for L in jumps:
        total = total + dissipator_superop(L)
    return total


def build_generator(spec: SubsystemSpec) -> SuperOperator:
    return lindbladian(spec.hamiltonian, spec.scaled_jumps())


def steady_state(L: SuperOperator, check_psd: bool = True) -> np.ndarray:
    """Unique density matrix in the kernel of ``L``.

    Uses the right singular vector of the smallest singular value. Raises
    ``NonUniqueSteadyState`` unless exactly one singular value lies below
    ``1e-8`` times the largest.
    """
    d = L.dim
    _, s, vh = sla.svd(L.matrix, check_finite=False)
    nullity = int(np.sum(s < TOL.nullity_rtol * s[0])) if s[0] > 0 else s.size
    if nullity != 1:
        raise NonUniqueSteadyState(
            f"generator has numerical nullity {nullity} (expected 1)", nullity=nullity
        )
    rho = devectorize(vh[-1].conj(), d)
    tr = np.trace(rho)
    if abs(tr) < 1e-14:
        raise NumericalError("null vector has vanishing trace", stage="steady_state")
    rho = hermitize(rho / tr)
    if check_psd:
        rho = clip_psd(rho, stage="steady_state")
        rho = rho / np.trace(rho).real
    resid = fro_norm(L(rho))
    if resid > 1e-10 * max(1.0, s[0]):
        raise NumericalError(f"steady-state residual {resid:.2e} too large", stage="steady_state")
    return rho


def clip_psd(X, stage: str = "clip_psd") -> np.ndarray:
    """Zero out eigenvalues in (-tol, 0); raise on anything more negative."""
    X = hermitize(X)
    w, V = np.linalg.eigh(X)
    tol = TOL.psd_rtol * max(fro_norm(X), 1e-300)
    if w.min() < -tol:
        raise NumericalError(f"matrix has eigenvalue {w.min():.3e} below -{tol:.1e}", stage=stage)
    w = np.where(w < 0, 0.0, w)
    return (V * w) @ dag(V)


def spectral_gap(L: SuperOperator) -> float:
    """Smallest decay rate among the non-stationary eigenmodes of ``L``."""
    rates = np.sort(-np.linalg.eigvals(L.matrix).real)
    if rates.size < 2:
        return float("inf")
    return float(rates[1])


def _bordered(L: SuperOperator) -> np.ndarray:
    d = L.dim
    return np.vstack([L.matrix, vectorize(np.eye(d))[None, :]])


def solve_traceless(L: SuperOperator, W, rho_bar) -> np.ndarray:
    """Zero-trace ``X`` with ``-L(X) = W - tr(W) rho_bar``.

    ``W`` may be one matrix or a stack of them (shape ``(m, d, d)``); all
    right-hand sides share one factorization.
    """
    d = L.dim
    W = np.asarray(W, dtype=complex)
    single = W.ndim == 2
    Ws = W[None] if single else W
    if Ws.shape[1:] != (d, d):
        raise DimensionError(f"right-hand side has shape {W.shape}, generator dim is {d}")
    rhs = np.stack([Wk - np.trace(Wk) * rho_bar for Wk in Ws])
    B = np.zeros((d * d + 1, len(Ws)), dtype=complex)
    for k, R in enumerate(rhs):
        B[:-1, k] = -vectorize(R)
    sol = sla.lstsq(_bordered(L), B, lapack_driver="gelsy", check_finite=False)[0]
    Xs = np.stack([devectorize(sol[:, k], d) for k in range(len(Ws))])
    for X, R, Wk in zip(Xs, rhs, Ws):
        resid = fro_norm(L(X) + R) + abs(np.trace(X))
        tol = TOL.solve_rtol * max(fro_norm(Wk), 1e-300)
        if resid > tol and fro_norm(Wk) > 0:
            raise NumericalError(
                f"inconsistent traceless solve: residual {resid:.2e} > {tol:.1e}",
                stage="solve_traceless",
            )
    return Xs[0] if single else Xs


def propagator(L: SuperOperator, t: float) -> np.ndarray:
    """``expm(t L)`` as a dense matrix (scaling and squaring, Pade 13)."""
    if t < 0:
        raise ValueError("propagation time must be nonnegative")
    return sla.expm(t * L.matrix)


def propagate(L: SuperOperator, rho0, t: float) -> np.ndarray:
    rho0 = as_matrix(rho0)
    if rho0.shape != (L.dim, L.dim):
        raise DimensionError(f"state has shape {rho0.shape}, generator dim is {L.dim}")
    return devectorize(propagator(L, t) @ vectorize(rho0), L.dim)


def evolve_uniform(L: SuperOperator, rho0, dt: float, steps: int, method: str = "auto") -> list[np.ndarray]:
    """States at ``t = 0, dt, ..., steps*dt``.

    ``method="dense"`` applies ``expm(dt L)`` repeatedly; ``"taylor"`` uses
    scipy's truncated-Taylor ``expm_multiply`` on a sparse copy of ``L``,
    which is far cheaper for joint spaces. ``"auto"`` picks taylor once
    ``d^2 > 256``.
    """
    if method == "auto":
        method = "taylor" if L.dim ** 2 > 256 else "dense"
    v = vectorize(rho0)
    if method == "dense":
        P = propagator(L, dt)
        out = [devectorize(v, L.dim)]
        for _ in range(steps):
            v = P @ v
            out.append(devectorize(v, L.dim))
        return out
    if method == "taylor":
        if steps == 0:
            return [devectorize(v, L.dim)]
        V = spla.expm_multiply(sparse.csr_matrix(L.matrix), v, start=0.0, stop=dt * steps,
                               num=steps + 1, endpoint=True)
        return [devectorize(row, L.dim) for row in V]
    raise ValueError(f"unknown method {method!r}")


def gell_mann_basis(d: int) -> list[np.ndarray]:
    """Traceless orthonormal basis, ``tr(G_j^+ G_k) = delta_jk``, of size ``d^2 - 1``."""
    basis = []
    for j in range(d):
        for k in range(j + 1, d):
            S = np.zeros((d, d), dtype=complex)
            S[j, k] = S[k, j] = 1 / np.sqrt(2)
            A = np.zeros((d, d), dtype=complex)
            A[j, k] = -1j / np.sqrt(2)
            A[k, j] = 1j / np.sqrt(2)
            basis += [S, A]
    for l in range(1, d):
        D = np.zeros((d, d), dtype=complex)
        D[np.arange(l), np.arange(l)] = 1.0
        D[l, l] = -l
        basis.append(D / np.sqrt(l * (l + 1)))
    return basis


@dataclass
class GKSDecomposition:
    """``L(rho) = -i[H, rho] + sum_jk K_jk (G_j rho G_k^+ - {G_k^+ G_j, rho}/2)``."""

    hamiltonian: np.ndarray
    kossakowski: np.ndarray
    basis: list = field(repr=False)
    reconstruction_error: float = 0.0

    @property
    def min_eigenvalue(self) -> float:
        if self.kossakowski.size == 0:
            return 0.0
        return float(np.linalg.eigvalsh(hermitize(self.kossakowski)).min())

    @property
    def is_lindblad(self) -> bool:
        return self.min_eigenvalue >= -structural_tol(self.kossakowski, TOL.psd_rtol)

    def __iter__(self):
        # allows ``H, K, basis = gks_decompose(L)``
        return iter((self.hamiltonian, self.kossakowski, self.basis))

    def rebuild(self) -> SuperOperator:
        d = self.hamiltonian.shape[0]
        total = hamiltonian_superop(self.hamiltonian).matrix
        I = np.eye(d)
        for j, Gj in enumerate(self.basis):
            for k, Gk in enumerate(self.basis):
                c = self.kossakowski[j, k]
                if c == 0:
                    continue
                P = dag(Gk) @ Gj
                total = total + c * (
                    np.kron(Gk.conj(), Gj) - 0.5 * np.kron(I, P) - 0.5 * np.kron(P.T, I)
                )
        return SuperOperator(total)


def gks_decompose(L: SuperOperator, tol: float = 1e-10) -> GKSDecomposition:
    """Hamiltonian and Kossakowski matrix of a trace-preserving generator."""
    d = L.dim
    if not L.is_trace_preserving(tol):
        raise NumericalError(
            f"generator is not trace preserving (defect {L.trace_defect():.2e})",
            stage="gks_decompose",
        )
    G = [np.eye(d, dtype=complex) / np.sqrt(d)] + gell_mann_basis(d)
    V = np.stack([vectorize(g) for g in G], axis=1)
    # reshuffle the superoperator into sum_ij c_ij vec(G_i) vec(G_j)^+
    S4 = L.matrix.reshape(d, d, d, d)
    J = S4.transpose(3, 1, 2, 0).reshape(d * d, d * d)
    c = dag(V) @ J @ V
    c = hermitize(c)
    F = sum(c[k, 0] * G[k] for k in range(1, len(G))) / np.sqrt(d) if d > 1 else np.zeros((d, d))
    H = hermitize(0.5j * (F - dag(F)))
    K = c[1:, 1:]
    out = GKSDecomposition(H, K, G[1:])
    out.reconstruction_error = fro_norm(out.rebuild().matrix - L.matrix)
    return out


def kernel_inclusion_check(rho_bar, X, tol: float = 1e-9, kernel_tol: float = 1e-9) -> bool:
    """True iff ``||X v|| <= tol * max(1, ||X||)`` on the eigenvectors ``v`` of
    ``rho_bar`` with eigenvalue below ``kernel_tol``."""
    w, V = np.linalg.eigh(hermitize(rho_bar))
    kernel = V[:, w < kernel_tol]
    if kernel.shape[1] == 0:
        return True
    scale = max(fro_norm(X), 1.0)
    return bool(np.linalg.norm(as_matrix(X) @ kernel) <= tol * scale)


def partial_trace_generator(L_joint: SuperOperator, rho_A, dimA: int, dimB: int) -> SuperOperator:
    """``rho_B -> tr_A L(rho_A (x) rho_B)`` as a superoperator on H_B."""
    rho_A = as_matrix(rho_A)

    def f(X):
        return partial_trace(L_joint(kron(rho_A, X)), dimA, dimB, over="A")

    return SuperOperator(map_matrix(f, dimB))


def inverse_kraus_map(L: SuperOperator, rho_bar) -> tuple[float, SuperOperator]:
    """Smallest ``tau`` and CPTP map ``K`` with ``-L(tau K(X)) = X - tr(X) rho_bar``.

    ``tau K(X) = int_0^inf e^{tL}(X - tr(X) rho_bar) dt + tau tr(X) rho_bar``;
    ``tau`` is the least value making the Choi matrix PSD, found by bisection.
    """
    d = L.dim
    basis = []
    for b in range(d):
        for a in range(d):
            E = np.zeros((d, d), dtype=complex)
            E[a, b] = 1.0
            basis.append(E)
    sols = solve_traceless(L, np.stack(basis), rho_bar)
    Mmat = np.stack([vectorize(X) for X in sols], axis=1)
    Rmat = np.outer(vectorize(rho_bar), vectorize(np.eye(d)))
    JM = hermitize(choi_matrix(Mmat, d))
    JR = hermitize(choi_matrix(Rmat, d))
    tol = TOL.psd_rtol * max(1.0, fro_norm(JM))

    def ok(tau):
        return np.linalg.eigvalsh(JM + tau * JR).min() >= -tol

    hi = 1.0
    while not ok(hi):
        hi *= 2.0
        if hi > 1e12:
            raise NumericalError("no admissible tau found", stage="inverse_kraus_map")
    lo = 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    tau = hi
    return tau, SuperOperator((Mmat + tau * Rmat) / tau)
