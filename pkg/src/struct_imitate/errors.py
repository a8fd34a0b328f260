"""Exception and warning types shared across the package."""


class StructImitateError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(StructImitateError, ValueError):
    """Inputs whose shapes are incompatible with each other or the model."""


class SchemaError(StructImitateError, ValueError):
    """A JSON record violates the documented file schema."""


class SingularSystemError(StructImitateError, ArithmeticError):
    """A linear system is singular beyond the recoverable tolerance."""


class DegenerateWeightsError(StructImitateError, ArithmeticError):
    """Combination weights sum to (numerically) zero."""


class OffManifoldError(StructImitateError, ValueError):
    """A point fails the manifold membership test."""


class NotTangentError(StructImitateError, ValueError):
    """A vector is not tangent at the given base point."""


class CutLocusError(StructImitateError, ValueError):
    """An operation was requested at or across the cut locus."""


class NotSPDError(StructImitateError, ValueError):
    """A matrix required to be symmetric positive definite is not."""


class ConditioningWarning(UserWarning):
    """The kernel system is ill-conditioned; diagonal jitter was added."""


class NegativeWeightsWarning(UserWarning):
    """Some surrogate weights are negative; covariances were clamped."""


class ConvergenceWarning(UserWarning):
    """Iterative optimization stopped before reaching its tolerance."""
