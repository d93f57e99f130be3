"""Second-order elimination of a fast subsystem under Hamiltonian coupling.

With ``H_int = sum_k A_k (x) B_k^+`` the slow generator is::

    eps * (-i[sum_k tr(A_k rho_A) B_k^+, .] + L_B)
    + eps^2 * (-i[sum_kj Y_kj B_k B_j^+, .] + sum_k D[L_k])

where ``L_k = sum_j conj(Lambda_jk) B_j^+`` and ``X = Lambda Lambda^+``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .config import TOL
from .errors import EliminationError, KernelInclusionError, NotHermitianError, NumericalError
from .linalg import dag, fro_norm, hermitize, is_hermitian, kron, structural_tol, vectorize, devectorize
from .lindblad import (
    SuperOperator,
    build_generator,
    dissipator_superop,
    hamiltonian_superop,
    inverse_kraus_map,
    kernel_inclusion_check,
    solve_traceless,
    spectral_gap,
    steady_state,
)
from .system import BipartiteSystem, HamiltonianCoupling

logger = logging.getLogger(__name__)

GAUGES = ("simple", "zero")
PSD_MODES = ("cholesky", "eigen")


def zeno_generator(rho_barA, coupling: HamiltonianCoupling, LB: SuperOperator):
    """First-order slow generator ``-i[H_zeno, .] + L_B``."""
    H = sum(np.trace(A @ rho_barA) * dag(B) for A, B in coupling.terms)
    if not is_hermitian(H):
        raise NotHermitianError("Zeno Hamiltonian is not Hermitian", stage="zeno_generator")
    H = hermitize(H)
    return H, hamiltonian_superop(H) + LB


def density_pinv(rho, tol: float = 1e-10) -> np.ndarray:
    """Moore-Penrose inverse of a density matrix, eigenvalues <= tol treated as zero."""
    w, V = np.linalg.eigh(hermitize(rho))
    inv = np.where(w > tol, 1.0 / np.where(w > tol, w, 1.0), 0.0)
    return (V * inv) @ dag(V)


def peel_rho(X, rho_bar, stage: str) -> np.ndarray:
    """``F`` with ``F rho_bar = X``, certified by kernel inclusion when rho_bar is singular.

    The inclusion test is looser than the default because truncated oscillator
    states have eigenvalues near 1e-14 on which the solve leaves round-off;
    genuine violations are of order ``||X||``.
    """
    if not kernel_inclusion_check(rho_bar, X, tol=TOL.peel_inclusion_rtol):
        raise KernelInclusionError("solution does not vanish on ker(rho_bar)", stage=stage)
    return X @ density_pinv(rho_bar)


def compute_F(LA: SuperOperator, rho_barA, coupling: HamiltonianCoupling) -> list[np.ndarray]:
    """Operators ``F_k`` with ``-L_A(F_k rho_A) = A_k rho_A - tr(A_k rho_A) rho_A``, ``tr(F_k rho_A) = 0``."""
    rhs = np.stack([A @ rho_barA for A in coupling.A])
    sols = solve_traceless(LA, rhs, rho_barA)
    F = [peel_rho(X, rho_barA, "compute_F") for X in sols]
    for Fk, X in zip(F, sols):
        if fro_norm(Fk @ rho_barA - X) > 1e-8 * max(1.0, fro_norm(X)):
            raise KernelInclusionError("F_k rho_A does not reproduce the solve", stage="compute_F")
        if abs(np.trace(Fk @ rho_barA)) > 1e-9 * max(1.0, fro_norm(Fk)):
            raise NumericalError("tr(F_k rho_A) != 0", stage="compute_F")
    return F


def second_order_XY(rho_barA, coupling: HamiltonianCoupling, F_ops):
    """Dissipation matrix ``X`` (Hermitian PSD) and Hamiltonian matrix ``Y`` (Hermitian)."""
    A = coupling.A
    S = [F @ rho_barA for F in F_ops]
    m = len(A)
    X = np.empty((m, m), dtype=complex)
    Y = np.empty((m, m), dtype=complex)
    for k in range(m):
        for j in range(m):
            p = np.trace(S[j] @ dag(A[k]))
            q = np.trace(A[j] @ dag(S[k]))
            X[k, j] = p + q
            Y[k, j] = (p - q) / 2j
    if not is_hermitian(X) or not is_hermitian(Y):
        raise NumericalError("X or Y is not Hermitian", stage="second_order_XY")
    X, Y = hermitize(X), hermitize(Y)
    lam = np.linalg.eigvalsh(X).min()
    if lam < -structural_tol(X):
        raise NumericalError(
            f"X has eigenvalue {lam:.3e}; X must be PSD (broken solve?)", stage="second_order_XY"
        )
    return X, Y


def _pivoted_cholesky(X: np.ndarray, tol: float) -> np.ndarray:
    m = X.shape[0]
    R = X.copy()
    cols = []
    for _ in range(m):
        diag = np.real(np.diag(R))
        p = int(np.argmax(diag))
        if diag[p] <= tol:
            break
        c = R[:, p] / np.sqrt(diag[p])
        cols.append(c)
        R = R - np.outer(c, c.conj())
    if not cols:
        return np.zeros((m, 0), dtype=complex)
    return np.stack(cols, axis=1)


def psd_factor(X, mode: str = "cholesky") -> np.ndarray:
    """``Lambda`` with ``X = Lambda Lambda^+``.

    ``cholesky`` gives a lower-triangular ``Lambda`` (so ``Lambda^+`` is upper
    triangular) when X is positive definite, and a rank-truncated pivoted
    factor otherwise. ``eigen`` gives ``U sqrt(diag(w))``.
    """
    X = hermitize(np.asarray(X, dtype=complex))
    w, V = np.linalg.eigh(X)
    tol = structural_tol(X)
    if w.size and w.min() < -tol:
        raise NumericalError(f"X has eigenvalue {w.min():.3e} < -{tol:.1e}", stage="psd_factor")
    scale = max(w.max(initial=0.0), 0.0)
    if scale == 0.0:
        return np.zeros_like(X)
    if mode == "eigen":
        Lam = V * np.sqrt(np.clip(w, 0.0, None))
    elif mode == "cholesky":
        if w.min() > TOL.pivot_rtol * scale * X.shape[0]:
            Lam = np.linalg.cholesky(X)
        else:
            Lam = _pivoted_cholesky(X, TOL.pivot_rtol * np.real(np.trace(X)))
    else:
        raise ValueError(f"psd mode must be one of {PSD_MODES}, got {mode!r}")
    err = fro_norm(X - Lam @ dag(Lam))
    if err > 1e-10 * max(fro_norm(X), 1e-300) * max(1, X.shape[0]):
        raise NumericalError(f"factorization error {err:.2e}", stage="psd_factor")
    return Lam


def channel_operators(Lam, B_ops, X) -> list[np.ndarray]:
    """``L_k = sum_j conj(Lambda_jk) B_j^+`` for the numerically nonzero columns."""
    cut = TOL.channel_rtol * np.sqrt(max(fro_norm(X), 0.0))
    out = []
    for k in range(Lam.shape[1]):
        col = Lam[:, k]
        if np.linalg.norm(col) <= cut:
            continue
        out.append(sum(np.conj(col[j]) * dag(B) for j, B in enumerate(B_ops)))
    return out


def x_form_superop(X, B_ops) -> SuperOperator:
    """``rho -> sum_kj X_kj (B_j^+ rho B_k - {B_k B_j^+, rho}/2)``."""
    d = B_ops[0].shape[0]
    I = np.eye(d)
    M = np.zeros((d * d, d * d), dtype=complex)
    for k, Bk in enumerate(B_ops):
        for j, Bj in enumerate(B_ops):
            c = X[k, j]
            if c == 0:
                continue
            P = Bk @ dag(Bj)
            M += c * (np.kron(Bk.T, dag(Bj)) - 0.5 * np.kron(I, P) - 0.5 * np.kron(P.T, I))
    return SuperOperator(M)


def second_order_hamiltonian(Y, B_ops) -> np.ndarray:
    H = sum(Y[k, j] * Bk @ dag(Bj) for k, Bk in enumerate(B_ops) for j, Bj in enumerate(B_ops))
    return hermitize(H)


@dataclass
class KrausEmbedding:
    """First-order map from slow states to joint states."""

    M: np.ndarray
    rho_barA: np.ndarray
    epsilon: float
    gauge: str = "simple"
    _apply: object = field(default=None, repr=False)

    def __call__(self, rho_s) -> np.ndarray:
        return self._apply(rho_s)


def kraus_first_order(rho_barA, coupling: HamiltonianCoupling, F_ops, epsilon: float,
                      gauge: str = "simple", LA: SuperOperator | None = None) -> KrausEmbedding:
    """``rho_s -> exp(-i eps M)(rho_A (x) rho_s)exp(i eps M^+)`` with ``M = sum_k F_k (x) B_k^+``.

    ``gauge="zero"`` instead returns the CPTP composition ``Kbar_A o exp(eps tau L_int) o K_0``;
    it needs the fast generator ``LA``.
    """
    M = sum(kron(F, dag(B)) for F, B in zip(F_ops, coupling.B))
    if gauge == "simple":
        U = sla.expm(-1j * epsilon * M)
        Ud = sla.expm(1j * epsilon * dag(M))

        def apply(rho_s):
            return U @ kron(rho_barA, rho_s) @ Ud

    elif gauge == "zero":
        if LA is None:
            raise ValueError("zero gauge needs the fast generator LA")
        dB = coupling.dims[1]
        tau, Kbar = inverse_kraus_map(LA, rho_barA)
        Kj = Kbar.lift(dB, "A")
        Lint = hamiltonian_superop(coupling.hamiltonian())
        P = Kj.matrix @ sla.expm(epsilon * tau * Lint.matrix)
        n = rho_barA.shape[0] * dB

        def apply(rho_s):
            return devectorize(P @ vectorize(kron(rho_barA, rho_s)), n)

    else:
        raise ValueError(f"gauge must be one of {GAUGES}, got {gauge!r}")
    return KrausEmbedding(M, rho_barA, epsilon, gauge, apply)


@dataclass
class ReducedModel:
    """Slow-subsystem Lindblad model to second order, plus the first-order embedding."""

    epsilon: float
    rho_barA: np.ndarray
    zeno_hamiltonian: np.ndarray
    second_order_hamiltonian: np.ndarray
    channels: list
    slow_generator_LB: SuperOperator
    X: np.ndarray
    Y: np.ndarray
    Lam: np.ndarray
    F_ops: list
    B_ops: list
    kraus: KrausEmbedding
    diagnostics: dict = field(default_factory=dict)

    @property
    def kraus_M(self) -> np.ndarray:
        return self.kraus.M

    def first_order_part(self) -> SuperOperator:
        return hamiltonian_superop(self.zeno_hamiltonian) + self.slow_generator_LB

    def second_order_part(self) -> SuperOperator:
        total = hamiltonian_superop(self.second_order_hamiltonian)
        for L in self.channels:
            total = total + dissipator_superop(L)
        return total

    def x_form(self) -> SuperOperator:
        return hamiltonian_superop(self.second_order_hamiltonian) + x_form_superop(self.X, self.B_ops)

    def generator(self, order: int = 2) -> SuperOperator:
        d = self.slow_generator_LB.dim
        total = SuperOperator.zero(d)
        if order >= 1:
            total = total + self.epsilon * self.first_order_part()
        if order >= 2:
            total = total + self.epsilon ** 2 * self.second_order_part()
        return total

    def embed(self, rho_s) -> np.ndarray:
        return self.kraus(rho_s)


def build_reduced_model(system: BipartiteSystem, psd_mode: str = "cholesky",
                        gauge: str = "simple") -> ReducedModel:
    if not isinstance(system.coupling, HamiltonianCoupling):
        raise EliminationError("build_reduced_model needs a Hamiltonian coupling",
                               stage="build_reduced_model")
    coupling = system.coupling
    LA = build_generator(system.A)
    LB = build_generator(system.B)
    rho = steady_state(LA)
    H1, _ = zeno_generator(rho, coupling, LB)
    F = compute_F(LA, rho, coupling)
    X, Y = second_order_XY(rho, coupling, F)
    # natural size of X is sum ||A_k||^2 / ||L_A||; anything far below is round-off
    x_scale = sum(fro_norm(A) ** 2 for A in coupling.A) / max(LA.norm(), 1e-300)
    if fro_norm(X) <= 1e-13 * x_scale:
        X = np.zeros_like(X)
    if fro_norm(Y) <= 1e-13 * x_scale:
        Y = np.zeros_like(Y)
    Lam = psd_factor(X, psd_mode)
    channels = channel_operators(Lam, coupling.B, X)
    H2 = second_order_hamiltonian(Y, coupling.B)
    kraus = kraus_first_order(rho, coupling, F, system.epsilon, gauge=gauge, LA=LA)

    model = ReducedModel(
        epsilon=system.epsilon,
        rho_barA=rho,
        zeno_hamiltonian=H1,
        second_order_hamiltonian=H2,
        channels=channels,
        slow_generator_LB=LB,
        X=X,
        Y=Y,
        Lam=Lam,
        F_ops=F,
        B_ops=list(coupling.B),
        kraus=kraus,
    )
    factored = x_form_superop(X, coupling.B)
    diss = SuperOperator.zero(LB.dim)
    for L in channels:
        diss = diss + dissipator_superop(L)
    residuals = [
        fro_norm(LA(Fk @ rho) + A @ rho - np.trace(A @ rho) * rho)
        for Fk, A in zip(F, coupling.A)
    ]
    model.diagnostics = {
        "gauge": gauge,
        "psd_mode": psd_mode,
        "spectral_gap": spectral_gap(LA),
        "solve_residual": max(residuals),
        "trace_F_rho": max(abs(np.trace(Fk @ rho)) for Fk in F),
        "X_min_eigenvalue": float(np.linalg.eigvalsh(X).min()),
        "factorization_error": fro_norm(X - Lam @ dag(Lam)),
        "channel_form_error": float(np.linalg.norm(diss.matrix - factored.matrix, 2)),
        "channel_count": len(channels),
    }
    return model
