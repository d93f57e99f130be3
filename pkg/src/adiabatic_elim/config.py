"""Numerical tolerances shared by the elimination pipeline.

Modules read ``TOL`` at call time, so ``overrides`` can adjust them for a
block of code (the CLI uses this for ``--tol``).
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import asdict, dataclass, fields


@dataclass
class Tolerances:
    # singular values below this times the largest count toward the steady-state kernel
    nullity_rtol: float = 1e-8
    # eigenvalues above -psd_rtol*||X|| are clipped to zero rather than rejected
    psd_rtol: float = 1e-9
    # residual allowed in the traceless solve, relative to ||W||
    solve_rtol: float = 1e-9
    # pivot threshold of the semidefinite Cholesky factorization
    pivot_rtol: float = 1e-12
    # Lambda columns below channel_rtol*sqrt(||X||) are dropped
    channel_rtol: float = 1e-9
    # ||X v|| allowed on numerically-null eigenvectors of rho_bar when peeling rho_bar off
    peel_inclusion_rtol: float = 1e-6
    # Re(alpha) below -alpha_tol is an error
    alpha_tol: float = 1e-9
    # equality band of the cascade solvability inequality, relative
    condition_rtol: float = 1e-8
    # allowed relative change of alpha, beta when the Fock cutoff is doubled
    truncation_rtol: float = 1e-8

    def as_dict(self) -> dict:
        return asdict(self)


TOL = Tolerances()
NAMES = tuple(f.name for f in fields(Tolerances))


@contextmanager
def overrides(**values):
    """Temporarily replace entries of ``TOL``."""
    unknown = set(values) - set(NAMES)
    if unknown:
        raise KeyError(f"unknown tolerance(s): {sorted(unknown)}; known: {list(NAMES)}")
    saved = TOL.as_dict()
    try:
        for k, v in values.items():
            setattr(TOL, k, float(v))
        yield TOL
    finally:
        for k, v in saved.items():
            setattr(TOL, k, v)
