"""Bipartite fast/slow systems and the two supported coupling structures."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np

from .errors import DimensionError, NotHermitianError
from .linalg import as_matrix, dag, is_hermitian, kron
from .lindblad import SubsystemSpec


@dataclass(frozen=True)
class HamiltonianCoupling:
    """``H_int = sum_k A_k (x) B_k^+`` with ``A_k`` on the fast and ``B_k`` on the slow factor.

    A dispersive Hermitian pair enters as the single term ``(A, B)``; a resonant
    exchange needs both ``(A, B)`` and ``(A^+, B^+)``. Hermiticity is only
    required of the assembled sum.
    """

    terms: tuple

    def __post_init__(self):
        if len(self.terms) == 0:
            raise ValueError("Hamiltonian coupling needs at least one term")
        terms = tuple((as_matrix(A), as_matrix(B)) for A, B in self.terms)
        dA, dB = terms[0][0].shape[0], terms[0][1].shape[0]
        for A, B in terms:
            if A.shape != (dA, dA) or B.shape != (dB, dB):
                raise DimensionError("coupling terms have inconsistent dimensions")
        object.__setattr__(self, "terms", terms)
        if not is_hermitian(self.hamiltonian()):
            raise NotHermitianError(
                "assembled interaction Hamiltonian sum_k A_k (x) B_k^+ is not Hermitian",
                stage="HamiltonianCoupling",
            )

    @property
    def dims(self) -> tuple[int, int]:
        A, B = self.terms[0]
        return A.shape[0], B.shape[0]

    @property
    def A(self) -> list[np.ndarray]:
        return [A for A, _ in self.terms]

    @property
    def B(self) -> list[np.ndarray]:
        return [B for _, B in self.terms]

    def hamiltonian(self) -> np.ndarray:
        return sum(kron(A, dag(B)) for A, B in self.terms)


@dataclass(frozen=True)
class CascadeCoupling:
    """Output ``sqrt(rate) * a`` of the fast system drives input ``b`` of the slow one."""

    a: np.ndarray
    b: np.ndarray
    rate: float = 1.0

    def __post_init__(self):
        a, b = as_matrix(self.a), as_matrix(self.b)
        if a.shape[0] != a.shape[1] or b.shape[0] != b.shape[1]:
            raise DimensionError("cascade operators must be square")
        if self.rate <= 0:
            raise ValueError("cascade rate must be positive")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def dims(self) -> tuple[int, int]:
        return self.a.shape[0], self.b.shape[0]

    @property
    def a_eff(self) -> np.ndarray:
        return np.sqrt(self.rate) * self.a


Coupling = Union[HamiltonianCoupling, CascadeCoupling]


@dataclass(frozen=True)
class BipartiteSystem:
    """Fast subsystem A, slow subsystem B, a coupling, and the time-scale ratio.

    Hamiltonian coupling::

        d rho/dt = L_A(rho) + eps * (-i[H_int, rho] + L_B(rho))

    Cascade coupling::

        d rho/dt = L_A(rho) + D[a](rho) + eps * (a[rho, b^+] + [b, rho]a^+)
                   + eps^2 * (D[b](rho) + L_B(rho))

    ``rebuild(n)`` optionally reconstructs the same system with the fast
    oscillator truncated at ``n`` Fock states; it drives the truncation audit.
    """

    A: SubsystemSpec
    B: SubsystemSpec
    coupling: Coupling
    epsilon: float
    fock_n: Optional[int] = None
    rebuild: Optional[Callable[[int], "BipartiteSystem"]] = field(default=None, compare=False, repr=False)
    label: str = ""

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        dA, dB = self.coupling.dims
        if (dA, dB) != (self.A.dim, self.B.dim):
            raise DimensionError(
                f"coupling dims {(dA, dB)} do not match subsystems {(self.A.dim, self.B.dim)}"
            )

    @property
    def is_cascade(self) -> bool:
        return isinstance(self.coupling, CascadeCoupling)

    @property
    def dims(self) -> tuple[int, int]:
        return self.A.dim, self.B.dim

    def with_epsilon(self, epsilon: float) -> "BipartiteSystem":
        rebuild = self.rebuild
        if rebuild is not None:
            rebuild = (lambda n, _r=rebuild, _e=epsilon: _r(n).with_epsilon(_e))
        return replace(self, epsilon=epsilon, rebuild=rebuild)
