"""Exception types shared across the package."""


class MomentDetError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(MomentDetError):
    def __init__(self, message, position=None, text=None):
        self.position = position
        self.text = text
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)


class ManifestError(MomentDetError):
    """Schema violation; ``field`` names the offending key path."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class UnsupportedOperation(MomentDetError):
    pass


class NonConvergedError(MomentDetError):
    """Quadrature did not reach the requested tolerance.

    ``estimate`` carries the best result obtained before giving up.
    """

    def __init__(self, message, estimate=None):
        self.estimate = estimate
        super().__init__(message)


class NegativeMassError(MomentDetError):
    pass


class SupportError(MomentDetError):
    """A measure is not supported where an operation needs it to be."""


class SingularGramError(MomentDetError):
    pass


class UnboundedError(MomentDetError):
    """A sup-norm exceeded the overflow guard."""


class CriterionError(MomentDetError):
    """Criterion parameters are invalid (non-monotone rho, wrong cone, ...)."""
