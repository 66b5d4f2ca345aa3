"""
Exception hierarchy for fuzzyheat.

Every error carries the exit code the command line maps it to, plus the
structured context needed to locate the fault.
"""


class FuzzyHeatError(Exception):
    """ base class for every error raised by the package """

    exit_code = 1


class UsageError(FuzzyHeatError):
    """ an operation was called with arguments that do not fit together """

    exit_code = 3


class FuzzyDomainError(FuzzyHeatError):
    """
    A value lies outside the domain of a fuzzy operation

    Parameters
    ----------
    message : str
        Human readable description
    offending : tuple, optional
        The values that violate the domain, e.g. the out-of-order pair of a
        triangular number
    """

    exit_code = 3

    def __init__(self, message, offending=None):
        super().__init__(message)
        self.offending = offending


class ExpressionSyntaxError(FuzzyHeatError):
    """
    Text could not be parsed as an expression

    Parameters
    ----------
    message : str
        Human readable description
    offset : int
        Byte offset into the source text where parsing stopped
    expected : frozenset of str
        Token kinds that would have been accepted at ``offset``
    """

    exit_code = 3

    def __init__(self, message, offset, expected=frozenset()):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.expected = frozenset(expected)


class EvaluationError(FuzzyHeatError):
    """
    An expression could not be evaluated

    Parameters
    ----------
    message : str
        Human readable description
    symbol : str, optional
        The unbound symbol, when that is the cause
    subexpression : str, optional
        Printed form of the subexpression that evaluated to a singular value
    node : dict, optional
        Grid node coordinates, attached when the failure happened on a grid
    """

    exit_code = 4

    def __init__(self, message, symbol=None, subexpression=None, node=None):
        super().__init__(message)
        self.symbol = symbol
        self.subexpression = subexpression
        self.node = node


class ProblemFileError(FuzzyHeatError):
    """
    A problem document failed validation

    Parameters
    ----------
    message : str
        Human readable description
    location : str
        Dotted section/key path of the faulty entry, e.g. ``"initial.expression"``
    """

    exit_code = 3

    def __init__(self, message, location=""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


class NumericalError(FuzzyHeatError):
    """ a numerical procedure failed or refused to run """

    exit_code = 4

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class AcceptanceError(FuzzyHeatError):
    """ a reproduced example disagrees with its registered oracle """

    exit_code = 5
