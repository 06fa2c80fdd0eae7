"""Exception hierarchy for singscope.

All errors derive from ``ValueError`` so the command line can report them the same way it
reports bad configuration values.
"""


class SingScopeError(ValueError):
    """Base class for every error raised by the toolkit."""

    module = "singscope"


class ExpressionSyntaxError(SingScopeError):
    """Raised when an expression cannot be parsed."""

    module = "poly-core"

    def __init__(self, message: str, offset: int) -> None:
        """
        Initialize the error.

        Args:
            message: Human readable description
            offset: Byte offset of the offending token in the input text
        """
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class SeriesOrderError(SingScopeError):
    """Raised when a coefficient beyond the certified order is requested."""

    module = "poly-core"

    def __init__(self, message: str, module: str = "poly-core") -> None:
        """
        Initialize the error.

        Args:
            message: Human readable description
            module: Tag of the stage whose truncation ran out
        """
        super().__init__(message)
        self.module = module


class PreconditionError(SingScopeError):
    """Raised when an operation is called outside its domain."""

    module = "poly-core"


class GeometryError(SingScopeError):
    """Raised for invalid Newton polyhedron input."""

    module = "newton-geometry"


class EdgeError(GeometryError):
    """Raised when an expected edge or vertex of a Newton polyhedron is missing."""


class KeyInequalityError(GeometryError):
    """Raised when the key inequality is asked for a polyhedron with A_1 < 1."""


class HessianPreconditionError(SingScopeError):
    """Raised when the Hessian at the origin is not of the form diag(0, c) with c != 0."""

    module = "classify"


class FiniteTypeError(SingScopeError):
    """Raised when b_0 vanishes to the full working order."""

    module = "classify"


class ClassificationConsistencyError(SingScopeError):
    """Raised when two independent class tests disagree."""

    module = "classify"


class LegendreInvarianceError(SingScopeError):
    """Raised when the Legendre transform changes an invariant it must preserve."""

    module = "legendre"


class PuiseuxError(SingScopeError):
    """Raised when a Puiseux expansion cannot be computed or certified."""

    module = "puiseux-resolve"


class ClusterSeparationError(PuiseuxError):
    """Raised when two leading coefficients are too close to be told apart."""


class ResolutionLimitError(PuiseuxError):
    """Raised when the resolution does not stabilise within the step limit."""


class BudgetError(SingScopeError):
    """Raised for malformed or inconsistent summability budgets."""

    module = "exponent-book"


class QuadratureError(SingScopeError):
    """Raised when adaptive oscillatory quadrature cannot reach its tolerance."""

    module = "geo-verify"


class EmptyDomainError(SingScopeError):
    """Raised when a sampling domain contains no admissible point."""

    module = "geo-verify"


class FitInconclusiveError(SingScopeError):
    """Raised when a log-log fit is too noisy to support a verdict."""

    module = "geo-verify"


class InputError(SingScopeError):
    """Raised for malformed command-line input such as an unknown model family."""

    module = "cli"
