"""Second-order elimination for a fast system cascaded into a slow one.

The slow generator is::

    eps [c* b - c b^+, .]
    + eps^2 (L_B + D[x1 b + y1 b^+] + D[x2 b + y2 b^+] + (alpha* - alpha)/2 [b^+ b - b b^+, .])

with ``c = tr(a rho_A)`` and ``(x, y)`` any solution of::

    |x1|^2 + |x2|^2 = 2 Re(alpha) + 1
    |y1|^2 + |y2|^2 = 2 Re(alpha)
    x1 y1* + x2 y2* = -2 beta
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .config import TOL
from .errors import ConjectureViolation, EliminationError, NumericalError, TruncationError
from .linalg import dag, hermitize, kron, map_matrix
from .lindblad import (
    SuperOperator,
    build_generator,
    dissipator_superop,
    hamiltonian_superop,
    solve_traceless,
    spectral_gap,
    steady_state,
)
from .elim_hamiltonian import peel_rho
from .system import BipartiteSystem, CascadeCoupling

logger = logging.getLogger(__name__)



def cascade_fast_generator(specA, a) -> SuperOperator:
    """``L_A + D[a]``; ``a`` already carries the square root of the cascade rate."""
    return build_generator(specA) + dissipator_superop(a)


def cascade_first_order(rho_barA, coupling: CascadeCoupling) -> SuperOperator:
    """``rho_s -> [conj(c) b - c b^+, rho_s]`` with ``c = tr(a rho_A)``."""
    return hamiltonian_superop(first_order_hamiltonian(rho_barA, coupling))


def first_order_hamiltonian(rho_barA, coupling: CascadeCoupling) -> np.ndarray:
    # [Z, .] == -i[iZ, .] and iZ is Hermitian for Z = c* b - c b^+
    c = np.trace(coupling.a_eff @ rho_barA)
    b = coupling.b
    return hermitize(1j * (np.conj(c) * b - c * dag(b)))


def _centered_solves(LA_fast: SuperOperator, rho_barA, a):
    """Traceless solves for ``rho_A abar^+`` and ``abar rho_A``, ``abar = a - tr(a rho_A)``."""
    d = rho_barA.shape[0]
    abar = a - np.trace(a @ rho_barA) * np.eye(d)
    S_plus, S_minus = solve_traceless(LA_fast, np.stack([rho_barA @ dag(abar), abar @ rho_barA]), rho_barA)
    return S_plus, S_minus


def cascade_alpha_beta(LA_fast: SuperOperator, rho_barA, a, tol: float | None = None):
    S_plus, _ = _centered_solves(LA_fast, rho_barA, a)
    return _alpha_beta(S_plus, a, TOL.alpha_tol if tol is None else tol)


def _alpha_beta(S_plus, a, tol):
    alpha = complex(np.trace(a @ S_plus))
    beta = complex(np.trace(dag(a) @ S_plus))
    if alpha.real < -tol:
        raise NumericalError(
            f"Re(alpha) = {alpha.real:.3e} < 0 contradicts the positivity guarantee",
            stage="cascade_alpha_beta",
        )
    return alpha, beta


def condition_defect(alpha: complex, beta: complex) -> float:
    s = 2.0 * alpha.real
    return (s + 1.0) * s - 4.0 * abs(beta) ** 2


def solve_channel_coefficients(alpha: complex, beta: complex, rtol: float | None = None):
    """Canonical ``((x1, y1), (x2, y2))`` solving the three channel equations.

    ``x1 = sqrt(s + 1)``, ``y1 = -2 conj(beta) / sqrt(s + 1)``, ``x2 = 0``,
    ``y2 = sqrt(s - 4|beta|^2 / (s + 1))`` with ``s = 2 Re(alpha)``; ``y2`` is
    set to zero when the solvability inequality holds with equality to ``rtol``.
    """
    rtol = TOL.condition_rtol if rtol is None else rtol
    s = 2.0 * alpha.real
    scale = max(1.0, (s + 1.0) * abs(s), 4.0 * abs(beta) ** 2)
    if s < -rtol * scale:
        raise NumericalError(f"2 Re(alpha) = {s:.3e} < 0", stage="solve_channel_coefficients")
    s = max(s, 0.0)
    defect = (s + 1.0) * s - 4.0 * abs(beta) ** 2
    if defect < -rtol * scale:
        raise ConjectureViolation(alpha, beta, defect)
    x1 = np.sqrt(s + 1.0)
    y1 = -2.0 * np.conj(beta) / x1
    if s == 0.0 or abs(defect) <= rtol * scale:
        y2 = 0.0
    else:
        y2 = np.sqrt(defect / (s + 1.0))
    return (complex(x1), complex(y1)), (0j, complex(y2))


def channel_residuals(alpha: complex, beta: complex, coeffs) -> tuple[float, float, float]:
    """Residuals of the three channel equations, relative to ``max(1, s + 1)``."""
    (x1, y1), (x2, y2) = coeffs
    s = 2.0 * alpha.real
    scale = max(1.0, s + 1.0)
    r1 = abs(abs(x1) ** 2 + abs(x2) ** 2 - (s + 1.0)) / scale
    r2 = abs(abs(y1) ** 2 + abs(y2) ** 2 - s) / scale
    r3 = abs(x1 * np.conj(y1) + x2 * np.conj(y2) + 2.0 * beta) / scale
    return float(r1), float(r2), float(r3)


def alpha_beta_form(alpha: complex, beta: complex, b) -> SuperOperator:
    """``tr_A L_int(K_1) + D[b]`` written out in alpha and beta (no channel solve)."""
    d = b.shape[0]

    def f(r):
        bd = dag(b)
        return (
            np.conj(beta) * ((r @ bd - bd @ r) @ bd - bd @ (r @ bd - bd @ r))
            + alpha * ((b @ r - r @ b) @ bd - bd @ (b @ r - r @ b))
            + np.conj(alpha) * (b @ (r @ bd - bd @ r) - (r @ bd - bd @ r) @ b)
            + beta * (b @ (b @ r - r @ b) - (b @ r - r @ b) @ b)
        )

    return SuperOperator(map_matrix(f, d)) + dissipator_superop(b)


@dataclass
class CascadeKraus:
    M: np.ndarray
    rho_barA: np.ndarray
    epsilon: float

    def __call__(self, rho_s) -> np.ndarray:
        return self.M @ kron(self.rho_barA, rho_s) @ dag(self.M)


def cascade_kraus(rho_barA, coupling: CascadeCoupling, epsilon: float, LA_fast: SuperOperator,
                  solves=None) -> CascadeKraus:
    """``rho_s -> M (rho_A (x) rho_s) M^+`` with
    ``M = I + eps (S+ rho_A^+ (x) b - S- rho_A^+ (x) b^+)``."""
    S_plus, S_minus = solves if solves is not None else _centered_solves(LA_fast, rho_barA, coupling.a_eff)
    P = peel_rho(S_plus, rho_barA, "cascade_kraus")
    Q = peel_rho(S_minus, rho_barA, "cascade_kraus")
    dA, dB = coupling.dims
    M = np.eye(dA * dB, dtype=complex) + epsilon * (kron(P, coupling.b) - kron(Q, dag(coupling.b)))
    return CascadeKraus(M, rho_barA, epsilon)


@dataclass
class CascadeModel:
    epsilon: float
    rho_barA: np.ndarray
    first_order_coeffs: tuple  # (tr(rho_A a^+), tr(a rho_A))
    alpha: complex
    beta: complex
    channel_coeffs: tuple
    b: np.ndarray
    slow_generator_LB: SuperOperator
    kraus: CascadeKraus
    diagnostics: dict = field(default_factory=dict)

    @property
    def kraus_M(self) -> np.ndarray:
        return self.kraus.M

    @property
    def first_order_hamiltonian(self) -> np.ndarray:
        conj_c, c = self.first_order_coeffs
        return hermitize(1j * (conj_c * self.b - c * dag(self.b)))

    @property
    def second_order_hamiltonian(self) -> np.ndarray:
        # ((alpha* - alpha)/2)[N, .] == -i[H, .] with H = i (alpha* - alpha)/2 N = Im(alpha) N
        b = self.b
        return self.alpha.imag * (dag(b) @ b - b @ dag(b))

    @property
    def channels(self) -> list[np.ndarray]:
        b = self.b
        return [x * b + y * dag(b) for x, y in self.channel_coeffs if abs(x) > 0 or abs(y) > 0]

    def first_order_part(self) -> SuperOperator:
        return hamiltonian_superop(self.first_order_hamiltonian)

    def second_order_part(self) -> SuperOperator:
        """Everything at eps^2 except ``L_B``."""
        total = hamiltonian_superop(self.second_order_hamiltonian)
        for L in self.channels:
            total = total + dissipator_superop(L)
        return total

    def generator(self, order: int = 2) -> SuperOperator:
        d = self.b.shape[0]
        total = SuperOperator.zero(d)
        if order >= 1:
            total = total + self.epsilon * self.first_order_part()
        if order >= 2:
            total = total + self.epsilon ** 2 * (self.second_order_part() + self.slow_generator_LB)
        return total

    def embed(self, rho_s) -> np.ndarray:
        return self.kraus(rho_s)


def cascade_reduced_model(system: BipartiteSystem, audit: bool = True) -> CascadeModel:
    if not isinstance(system.coupling, CascadeCoupling):
        raise EliminationError("cascade_reduced_model needs a cascade coupling",
                               stage="cascade_reduced_model")
    coupling = system.coupling
    a = coupling.a_eff
    LA = cascade_fast_generator(system.A, a)
    rho = steady_state(LA)
    S_plus, S_minus = _centered_solves(LA, rho, a)
    alpha, beta = _alpha_beta(S_plus, a, TOL.alpha_tol)

    diagnostics = {
        "spectral_gap": spectral_gap(LA),
        "condition_defect": condition_defect(alpha, beta),
    }
    if audit and system.fock_n is not None and system.rebuild is not None:
        diagnostics.update(truncation_audit(system, alpha, beta))

    coeffs = solve_channel_coefficients(alpha, beta)
    kraus = cascade_kraus(rho, coupling, system.epsilon, LA, solves=(S_plus, S_minus))
    c = np.trace(a @ rho)
    diagnostics["channel_residuals"] = channel_residuals(alpha, beta, coeffs)
    return CascadeModel(
        epsilon=system.epsilon,
        rho_barA=rho,
        first_order_coeffs=(complex(np.conj(c)), complex(c)),
        alpha=alpha,
        beta=beta,
        channel_coeffs=coeffs,
        b=coupling.b,
        slow_generator_LB=build_generator(system.B),
        kraus=kraus,
        diagnostics=diagnostics,
    )


def truncation_audit(system: BipartiteSystem, alpha: complex, beta: complex) -> dict:
    """Recompute alpha, beta at twice the Fock cutoff; raise if they moved."""
    n = system.fock_n
    big = system.rebuild(2 * n)
    a2 = big.coupling.a_eff
    LA2 = cascade_fast_generator(big.A, a2)
    rho2 = steady_state(LA2)
    S2, _ = _centered_solves(LA2, rho2, a2)
    alpha2, beta2 = _alpha_beta(S2, a2, TOL.alpha_tol)
    change = max(
        abs(alpha2 - alpha) / max(abs(alpha2), 1e-300) if alpha2 != 0 else abs(alpha),
        abs(beta2 - beta) / max(abs(beta2), 1e-300) if beta2 != 0 else abs(beta),
    )
    logger.info("Fock audit N=%d -> %d: relative change %.3e", n, 2 * n, change)
    if change >= TOL.truncation_rtol:
        raise TruncationError(
            f"alpha/beta change by {change:.2e} when the Fock cutoff goes from {n} to {2 * n}; "
            "increase fock_n",
            stage="truncation_audit",
        )
    return {"fock_n": n, "audit_fock_n": 2 * n, "audit_relative_change": change}
