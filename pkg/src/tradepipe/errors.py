"""Exception types shared across the pipeline.

Every error raised by this package derives from :class:`TradePipeError`,
so callers (and the CLI) can catch one type at the boundary.
"""

from __future__ import annotations


class TradePipeError(Exception):
    """Base class for all errors raised by tradepipe."""


# --- market data: CSV ingest ---

class MissingColumn(TradePipeError):
    """A required CSV column is absent from the header row."""

    def __init__(self, column: str) -> None:
        super().__init__(f"missing required column: {column!r}")
        self.column = column


class UnparseableRow(TradePipeError):
    """A CSV data row could not be parsed or violates bar invariants.

    ``row`` is the 1-based index of the offending data row (the header
    does not count).
    """

    def __init__(self, row: int, reason: str) -> None:
        super().__init__(f"row {row}: {reason}")
        self.row = row
        self.reason = reason


class EmptySeries(TradePipeError):
    """A price or indicator series contains no observations."""


class DuplicateTimestamp(TradePipeError):
    """Two bars in one series share the same timestamp."""


# --- market data: HTTP client ---

class RateLimitExceeded(TradePipeError):
    """The client-side request budget is exhausted."""


class ApiError(TradePipeError):
    """The API returned an error status or an error payload."""

    def __init__(self, status: int, detail: str) -> None:
        super().__init__(f"API error (HTTP {status}): {detail}")
        self.status = status
        self.detail = detail


class MalformedPayload(TradePipeError):
    """The API response could not be interpreted as the expected payload."""


class UnsupportedAsset(TradePipeError):
    """The requested operation is not available for this asset class."""


# --- indicators ---

class WindowZero(TradePipeError):
    """A moving-average window of zero (or negative) length was requested."""


class WindowTooLarge(TradePipeError):
    """A moving-average window exceeds the series length."""


# --- signals ---

class MisalignedSeries(TradePipeError):
    """Two series that must share timestamps do not."""


class WindowOrder(TradePipeError):
    """The short window is not strictly smaller than the long window."""


# --- engine ---

class SignalNotInSeries(TradePipeError):
    """A signal's timestamp does not occur in the backtest price series."""


# --- metrics ---

class TooFewPoints(TradePipeError):
    """Not enough snapshots to compute the requested statistic."""


class ZeroVolatility(TradePipeError):
    """Per-period returns have zero standard deviation."""


# --- reporting / CLI ---

class UnwritableOutput(TradePipeError):
    """The output directory cannot be created or written."""


class PipelineError(TradePipeError):
    """Wraps a module error with the pipeline stage where it occurred."""

    def __init__(self, stage: str, cause: Exception) -> None:
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
