"""Exception hierarchy shared across the package.

``DataError`` marks problems with input data (CLI exit code 2);
``PipelineFailure`` marks a batch run whose per-ticker failure rate
exceeded the budget (CLI exit code 3).
"""

from __future__ import annotations


class MultifractError(Exception):
    """Base class for all package errors."""


class DataError(MultifractError):
    """Input data violates a precondition or invariant."""


class MalformedRow(DataError):
    def __init__(self, path, line, reason):
        self.path = path
        self.line = line
        self.reason = reason
        super().__init__(f"{path}:{line}: {reason}")


class DuplicateDate(DataError):
    def __init__(self, path, day):
        self.path = path
        self.day = day
        super().__init__(f"{path}: duplicate date {day}")


class NonPositivePrice(DataError):
    def __init__(self, line=None, value=None, path=None):
        self.line = line
        self.value = value
        where = f"{path}:{line}: " if line is not None else ""
        super().__init__(f"{where}non-positive price {value}")


class MissingDays(DataError):
    def __init__(self, ticker, gaps):
        self.ticker = ticker
        self.gaps = list(gaps)
        shown = ", ".join(str(d) for d in self.gaps[:5])
        more = f" (+{len(self.gaps) - 5} more)" if len(self.gaps) > 5 else ""
        super().__init__(f"{ticker}: {len(self.gaps)} missing calendar days: {shown}{more}")


class EmptyUniverse(DataError):
    pass


class TooShort(DataError):
    pass


class DegenerateSeries(DataError):
    pass


class DegenerateStructure(DataError):
    pass


class ZeroVarianceSegment(DataError):
    pass


class InsufficientScales(DataError):
    pass


class SurrogateEnsembleError(DataError):
    def __init__(self, n_failed, n_total, examples):
        self.n_failed = n_failed
        self.n_total = n_total
        self.examples = list(examples)
        super().__init__(
            f"{n_failed}/{n_total} surrogate evaluations failed "
            f"(first errors: {self.examples[:3]})"
        )


class MissingAssignment(DataError):
    pass


class PipelineFailure(MultifractError):
    def __init__(self, failures, n_total):
        self.failures = dict(failures)
        self.n_total = n_total
        super().__init__(
            f"{len(self.failures)}/{n_total} tickers failed, over the failure budget: "
            + "; ".join(f"{t}: {msg}" for t, msg in list(self.failures.items())[:5])
        )
