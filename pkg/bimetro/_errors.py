"""
Exceptions raised by bimetro. Every error carries a stable ``code`` so that
reports and the command line can name the failure independently of the
message text.
"""

__all__ = [
    "BimetroError",
    "InconsistentResult",
    "InfeasibleGrid",
    "InvalidBudget",
    "InvalidState",
    "NonIntegerOccupation",
    "NonUnitaryError",
    "OutOfArc",
    "ParseError",
    "SingularCovariance",
    "TruncationExceeded",
    "VarianceTooSmall",
    "ZeroInformation",
]


class BimetroError(ValueError):
    """
    Base class for domain errors.
    """

    code = "BIMETRO_ERROR"

    def __str__(self):
        return f"{self.code}: {super().__str__()}"


class NonUnitaryError(BimetroError):
    code = "NON_UNITARY"


class TruncationExceeded(BimetroError):
    code = "TRUNCATION_EXCEEDED"


class NonIntegerOccupation(BimetroError):
    code = "NON_INTEGER_OCCUPATION"


class VarianceTooSmall(BimetroError):
    code = "VARIANCE_TOO_SMALL"


class OutOfArc(BimetroError):
    code = "OUT_OF_ARC"


class ZeroInformation(BimetroError):
    code = "ZERO_INFORMATION"


class SingularCovariance(BimetroError):
    code = "SINGULAR_COVARIANCE"


class InfeasibleGrid(BimetroError):
    code = "INFEASIBLE_GRID"


class InconsistentResult(BimetroError):
    """
    Two independent evaluation paths of the same quantity disagree.
    """

    code = "INCONSISTENT_RESULT"


class InvalidBudget(BimetroError):
    code = "INVALID_BUDGET"


class ParseError(BimetroError):
    code = "PARSE_ERROR"


class InvalidState(BimetroError):
    code = "INVALID_STATE"
