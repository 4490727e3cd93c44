"""Exception types raised by the solver."""


class ConfigurationError(ValueError):
    """Invalid mesh, law or scenario parameters."""


class PreconditionError(ValueError):
    """An operation was called outside its admissible parameter range."""


class SolverBreakdown(RuntimeError):
    """A linear solve failed or returned a residual above tolerance."""

    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class PicardNonConvergence(RuntimeError):
    """Picard iteration hit ``max_iters`` without meeting the tolerance.

    The residual history is attached so that stagnation can be told
    apart from oscillation.
    """

    def __init__(self, message, history):
        super().__init__(message)
        self.history = history

    @property
    def residuals(self):
        return [state.residual for state in self.history]
