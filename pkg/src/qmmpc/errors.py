"""Exception types shared across the package."""


class DimensionMismatch(ValueError):
    """Operands have incompatible shapes."""


class UnknownMode(ValueError):
    """Switching-mode index is outside 1..L_g."""


class NotPsd(ValueError):
    """Matrix expected to be positive semidefinite is not."""


class SingularBlock(ArithmeticError):
    """Sub-block is not invertible at working precision."""


class EmptySeries(ValueError):
    """Operation requires a non-empty series."""


class MismatchedRuns(ValueError):
    """Traces being compared do not share horizon/signal."""


class InvalidConfig(ValueError):
    """Experiment configuration failed validation."""


class InfeasibleProblem(RuntimeError):
    """A feasibility/synthesis problem admits no solution."""


class UnboundedProblem(RuntimeError):
    """Objective decreases without bound on the feasible set."""


class NumericalFailure(RuntimeError):
    """Iteration stalled without reaching a certified answer."""


class InvariantViolation(RuntimeError):
    """A runtime-checked closed-loop invariant failed."""
