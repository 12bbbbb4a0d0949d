"""Exception types raised across the package."""


class FastSBLError(Exception):
    """Base class for all package errors."""


class DomainError(FastSBLError, ValueError):
    """An argument lies outside the domain of the operation (e.g. gamma <= 0)."""


class EvaluationError(FastSBLError, ArithmeticError):
    """A user-supplied function returned NaN or infinity."""

    def __init__(self, x, value):
        self.x = x
        self.value = value
        super().__init__(f"non-finite value {value!r} at x={x!r}")


class ConvergenceError(FastSBLError, RuntimeError):
    """Adaptive procedure ran out of budget before meeting its tolerance.

    The best available estimate and its error bound are kept on the
    exception so callers can decide whether they are good enough.
    """

    def __init__(self, message, estimate=None, error=None):
        self.estimate = estimate
        self.error = error
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")


class IllConditionedError(FastSBLError, ArithmeticError):
    """The active-set system is numerically singular."""

    def __init__(self, active, condition):
        self.active = tuple(int(i) for i in active)
        self.condition = condition
        super().__init__(
            f"active-set system has condition number {condition:.3g} "
            f"(limit 1e12); active set = {list(self.active)}"
        )


class AmbiguousMaximumError(FastSBLError, RuntimeError):
    """The section likelihood profile has more than one local maximum."""

    def __init__(self, gammas):
        self.gammas = [float(g) for g in gammas]
        super().__init__(f"section likelihood has several local maxima near gamma={self.gammas}")


class InputError(FastSBLError, ValueError):
    """Malformed input file or configuration."""
