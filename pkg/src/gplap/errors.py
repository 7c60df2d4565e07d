"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class AdmissibilityError(ValueError):
    """A kernel profile fails the admissibility requirements."""


class SamplingFailureError(RuntimeError):
    """Rejection sampling exhausted its proposal budget."""


class DisconnectedGraphError(RuntimeError):
    """The graph is not connected to the labeled set."""


class UnsupportedDimensionError(ValueError):
    """The operation is only defined in a specific dimension."""
