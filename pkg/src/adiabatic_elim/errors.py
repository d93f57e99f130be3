"""Exception types raised by the elimination pipeline."""


class EliminationError(Exception):
    """Base class. ``stage`` names the pipeline step that failed."""

    def __init__(self, message: str, stage: str | None = None):
        super().__init__(message)
        self.stage = stage

    def __str__(self) -> str:
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class DimensionError(EliminationError, ValueError):
    pass


class NotHermitianError(EliminationError, ValueError):
    pass


class NumericalError(EliminationError):
    """A numerical step produced a result outside its certified tolerance."""


class NonUniqueSteadyState(NumericalError):
    def __init__(self, message: str, nullity: int, stage: str | None = "steady_state"):
        super().__init__(message, stage)
        self.nullity = nullity


class KernelInclusionError(NumericalError):
    pass


class TruncationError(NumericalError):
    """Fock truncation failed its doubling audit."""


class ConjectureViolation(EliminationError):
    """(s + 1) s >= 4|beta|^2 failed for an instance, with s = 2 Re(alpha).

    The inequality is conjectured to hold for every cascade system, so a
    violation is reported with the offending data, never clamped.
    """

    def __init__(self, alpha: complex, beta: complex, defect: float):
        super().__init__(
            f"channel solvability condition violated: alpha={alpha!r}, "
            f"beta={beta!r}, defect={defect:.3e}",
            stage="solve_channel_coefficients",
        )
        self.alpha = alpha
        self.beta = beta
        self.defect = defect
