"""Exception hierarchy shared by the library and the command line."""
from typing import Optional


class HmmEntropyError(Exception):
    """
    Base class for every error raised by hmm_entropy.
    """

    pass


# --- configuration ----------------------------------------------------------

class ConfigError(HmmEntropyError, ValueError):
    """
    Raised when an HMM_ENTROPY_* environment variable cannot be read.
    """

    pass


# --- series -----------------------------------------------------------------

class SeriesError(HmmEntropyError):
    """
    Raised when truncated power-series arithmetic cannot proceed.
    """

    pass


class TruncationMismatchError(SeriesError):
    """
    Raised when two operands carry different truncation lengths.
    """

    pass


class SeriesDivisionError(SeriesError):
    """
    Raised when a quotient is not a power series (ord(f) < ord(g)).
    """

    pass


class SeriesZeroDivisionError(SeriesError, ZeroDivisionError):
    """
    Raised when dividing by a series that is zero to its truncation.
    """

    pass


class NonProbabilityError(SeriesError):
    """
    Raised when a probability series has a non-positive leading term.
    """

    pass


# --- models -----------------------------------------------------------------

class ModelError(HmmEntropyError):
    """
    Base class for hidden Markov model errors.
    """

    pass


class ModelValidationError(ModelError):
    """
    Raised when a model violates stochasticity or labelling invariants.
    """

    pass


class ModelFormatError(ModelError):
    """
    Raised when a model document cannot be parsed.

    Attributes:
        line (Optional[int]): 1-based line of the offending token, if known.
        column (Optional[int]): 1-based column of the offending token.
    """

    def __init__(self, message: str, line: Optional[int] = None,
                 column: Optional[int] = None):
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column


class UnknownSymbolError(ModelError):
    """
    Raised when a symbol outside the output alphabet is requested.
    """

    pass


class PrunedSequenceError(ModelError):
    """
    Raised when a sequence has zero probability to the computed order.
    """

    pass


class StationaryError(ModelError):
    """
    Raised when no stationary series can be read off the adjugate.
    """

    pass


# --- expansion --------------------------------------------------------------

class ExpansionError(HmmEntropyError):
    """
    Base class for asymptotic-expansion failures.
    """

    pass


class HorizonError(ExpansionError):
    """
    Raised when a Birch horizon is below 6k+6.
    """

    pass


class OrderGuardError(ExpansionError):
    """
    Raised when the requested order exceeds the configured guard.
    """

    pass


class TruncationStarvationError(ExpansionError):
    """
    Raised when the working truncation is too short for the requested order.
    """

    pass


class BoundAgreementError(ExpansionError):
    """
    Raised when upper and lower Birch expansions disagree.
    """

    pass


# --- channels / numeric / replay --------------------------------------------

class ChannelSpecError(HmmEntropyError):
    """
    Raised when a Markov input or channel description is invalid.
    """

    pass


class NumericError(HmmEntropyError):
    """
    Base class for numeric oracle failures.
    """

    pass


class BudgetExceededError(NumericError):
    """
    Raised when an exact enumeration would exceed the leaf budget.
    """

    pass


class UnderflowError(NumericError):
    """
    Raised when the normalized forward recursion still underflows.
    """

    pass


class McConfigError(NumericError):
    """
    Raised when a Monte Carlo configuration is out of range.
    """

    pass


class ReplayMismatchError(HmmEntropyError):
    """
    Raised when a replayed manifest does not reproduce its payload.
    """

    pass
