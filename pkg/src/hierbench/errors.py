"""Exception types raised across the package."""


class HierbenchError(Exception):
    """Base class for all package errors."""


class MalformedRow(HierbenchError):
    """A results or mask row could not be parsed.

    Carries the 1-based line number of the offending row when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateRecord(HierbenchError):
    """The same (dataset, method, fold) appears more than once."""


class ValueOutOfRange(HierbenchError):
    """A metric value lies outside [0, 1]."""


class InconsistentFoldSet(HierbenchError):
    """A method has a partial or non-contiguous fold set within a dataset."""


class UnknownMethod(HierbenchError):
    """A requested method does not appear in the result table."""


class NoCommonDatasets(HierbenchError):
    """Two methods share no dataset with complete folds on both sides."""


class NonFiniteInput(HierbenchError):
    """A numeric argument is NaN or infinite."""


class NonFiniteResult(HierbenchError):
    """A computation produced a non-finite value where one is required."""


class InitializationFailure(HierbenchError):
    """No finite sampler starting point found within the attempt budget."""


class AllChainsDiverged(HierbenchError):
    """Every post-warmup transition of every chain was divergent."""


class InsufficientDraws(HierbenchError):
    """Too few chains or draws to compute convergence diagnostics."""


class EmptyDraws(HierbenchError):
    """A decision-layer operation received no posterior draws."""


class InfeasibleSpec(HierbenchError):
    """Mask rate groups exceed the number of available samples."""


class IoFailure(HierbenchError):
    """A report or mask file could not be written."""
