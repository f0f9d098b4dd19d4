"""Exception types raised across vemlab."""


class VemlabError(Exception):
    """Base class for all library errors."""


class DegeneratePolygon(VemlabError, ValueError):
    pass


class TriangulationFailed(VemlabError, ValueError):
    pass


class InvalidSize(VemlabError, ValueError):
    pass


class ParseError(VemlabError, ValueError):
    pass


class ValidationError(VemlabError, ValueError):
    pass


class UnsupportedDegree(VemlabError, ValueError):
    pass


class SingularMass(VemlabError, ArithmeticError):
    pass


class UnsupportedLayout(VemlabError, ValueError):
    pass


class IllConditioned(VemlabError, ArithmeticError):
    pass


class SaddleSingular(VemlabError, ArithmeticError):
    pass


class MissingExact(VemlabError, ValueError):
    pass


class NotSPD(VemlabError, ArithmeticError):
    pass


class NoConvergence(VemlabError, ArithmeticError):
    pass


class MaxIterations(VemlabError, ArithmeticError):
    """CG did not reach the requested tolerance.

    The residual history is kept on the exception for diagnostics.
    """

    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = list(residuals)


class ElementError(VemlabError):
    """Wraps a failure inside one element of a global assembly."""

    def __init__(self, element, cause):
        super().__init__(f"element {element}: {cause}")
        self.element = element
        self.cause = cause
