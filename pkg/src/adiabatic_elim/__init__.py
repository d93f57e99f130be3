"""Adiabatic elimination of fast open quantum subsystems to second order."""

from .errors import (
    ConjectureViolation,
    DimensionError,
    EliminationError,
    KernelInclusionError,
    NonUniqueSteadyState,
    NotHermitianError,
    NumericalError,
    TruncationError,
)
from .lindblad import (
    GKSDecomposition,
    SubsystemSpec,
    SuperOperator,
    build_generator,
    dissipator_superop,
    gks_decompose,
    hamiltonian_superop,
    lindbladian,
    propagate,
    solve_traceless,
    steady_state,
)
from .system import BipartiteSystem, CascadeCoupling, HamiltonianCoupling
from .elim_hamiltonian import ReducedModel, build_reduced_model
from .elim_cascade import CascadeModel, cascade_reduced_model, solve_channel_coefficients

__version__ = "0.1.0"

__all__ = [
    "BipartiteSystem",
    "CascadeCoupling",
    "CascadeModel",
    "ConjectureViolation",
    "DimensionError",
    "EliminationError",
    "GKSDecomposition",
    "HamiltonianCoupling",
    "KernelInclusionError",
    "NonUniqueSteadyState",
    "NotHermitianError",
    "NumericalError",
    "ReducedModel",
    "SubsystemSpec",
    "SuperOperator",
    "TruncationError",
    "build_generator",
    "build_reduced_model",
    "cascade_reduced_model",
    "dissipator_superop",
    "gks_decompose",
    "hamiltonian_superop",
    "lindbladian",
    "propagate",
    "reduce",
    "solve_channel_coefficients",
    "solve_traceless",
    "steady_state",
]


def reduce(system: BipartiteSystem, **kwargs):
    """Dispatch to the elimination matching the coupling type."""
    if system.is_cascade:
        return cascade_reduced_model(system, **kwargs)
    return build_reduced_model(system, **kwargs)
