"""Exception hierarchy.

``SpecError`` covers malformed input (CLI exit code 1); everything deriving
from ``NumericError`` is a numerical failure (CLI exit code 2).
"""


class SpecError(ValueError):
    """A distribution spec or representation violates one of its invariants."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class NumericError(ArithmeticError):
    """Base class for numerical failures."""


class TruncationError(NumericError):
    """The tail mass is still above tolerance at the hard index cap."""


class ExactCDFUnavailable(NumericError):
    """No closed or series form of the CDF exists for this spec."""


class MaierPositivityError(NumericError):
    """An expansion coefficient came out negative; a larger ``c`` is needed."""


class NoCertificateError(NumericError):
    """No a-priori error bound covers this distribution."""


class QuadratureError(NumericError):
    """Adaptive quadrature did not reach the requested tolerance."""
