"""OHLCV data model and canonical CSV serialization.

A :class:`PriceSeries` is the unit of data the whole pipeline operates on:
a validated, strictly time-ordered sequence of :class:`Bar` observations
for one symbol at one bar interval. All timestamps are timezone-aware UTC.

The canonical on-disk format is CSV with the exact header
``timestamp,open,high,low,close,volume``, RFC 3339 UTC timestamps and
shortest round-trip decimal numbers, so that save -> load reproduces a
bit-identical series.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DuplicateTimestamp, EmptySeries, MissingColumn, UnparseableRow

CSV_HEADER = ("timestamp", "open", "high", "low", "close", "volume")

#: Bar durations the pipeline understands, keyed by interval label.
INTERVALS: dict[str, timedelta] = {
    "1min": timedelta(minutes=1),
    "5min": timedelta(minutes=5),
    "15min": timedelta(minutes=15),
    "30min": timedelta(minutes=30),
    "60min": timedelta(minutes=60),
    "daily": timedelta(days=1),
}


class AssetClass(enum.Enum):
    """Asset category; drives unit divisibility and annualization defaults."""

    STOCK = "stock"
    CRYPTO = "crypto"


@dataclass(frozen=True)
class Bar:
    """One OHLCV observation.

    Prices are in quote currency (USD); volume is in asset units.
    """

    timestamp: datetime
    open: float
    high: float
    low: float
    close: float
    volume: float

    def __post_init__(self) -> None:
        if self.timestamp.tzinfo is None:
            raise ValueError("bar timestamp must be timezone-aware")
        for name in ("open", "high", "low", "close"):
            price = getattr(self, name)
            if not math.isfinite(price) or price <= 0:
                raise ValueError(f"{name} must be a finite positive price, got {price}")
        if not math.isfinite(self.volume) or self.volume < 0:
            raise ValueError(f"volume must be finite and >= 0, got {self.volume}")
        if self.low > min(self.open, self.close):
            raise ValueError("low exceeds min(open, close)")
        if self.high < max(self.open, self.close):
            raise ValueError("high is below max(open, close)")


@dataclass(frozen=True)
class PriceSeries:
    """Time-ordered bars for one symbol at one interval.

    Immutable after construction; safe to share between threads.
    Timestamps must be strictly increasing and aligned to the interval
    grid (gaps are fine -- markets close).
    """

    symbol: str
    asset_class: AssetClass
    interval: str
    bars: tuple[Bar, ...]

    def __post_init__(self) -> None:
        if self.interval not in INTERVALS:
            raise ValueError(
                f"unknown interval {self.interval!r}; expected one of {sorted(INTERVALS)}"
            )
        if not self.bars:
            raise EmptySeries(f"price series for {self.symbol!r} has no bars")
        for prev, cur in zip(self.bars, self.bars[1:]):
            if cur.timestamp == prev.timestamp:
                raise DuplicateTimestamp(
                    f"duplicate timestamp {cur.timestamp.isoformat()} in {self.symbol!r}"
                )
            if cur.timestamp < prev.timestamp:
                raise ValueError("bars must be ordered by ascending timestamp")
        for bar in self.bars:
            if not _on_interval_grid(bar.timestamp, self.interval):
                raise ValueError(
                    f"timestamp {bar.timestamp.isoformat()} is not aligned to "
                    f"the {self.interval} grid"
                )

    def __len__(self) -> int:
        return len(self.bars)

    @property
    def timestamps(self) -> tuple[datetime, ...]:
        return tuple(bar.timestamp for bar in self.bars)

    @property
    def closes(self) -> tuple[float, ...]:
        return tuple(bar.close for bar in self.bars)


def _on_interval_grid(ts: datetime, interval: str) -> bool:
    seconds = INTERVALS[interval].total_seconds()
    return ts.astimezone(timezone.utc).timestamp() % seconds == 0


def parse_timestamp(text: str) -> datetime:
    """Parse an RFC 3339 / ISO 8601 timestamp or bare date into UTC.

    Naive timestamps are taken to be UTC; aware ones are converted.
    """
    cleaned = text.strip()
    if cleaned.endswith(("Z", "z")):
        cleaned = cleaned[:-1] + "+00:00"
    parsed = datetime.fromisoformat(cleaned)
    if parsed.tzinfo is None:
        return parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    """Render a UTC timestamp in RFC 3339 with a trailing ``Z``."""
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def _format_number(value: float) -> str:
    # repr gives the shortest decimal string that round-trips exactly
    return repr(float(value))


def load_csv(
    path: str | Path,
    asset_class: AssetClass,
    interval: str,
    symbol: str | None = None,
) -> PriceSeries:
    """Load a validated price series from a CSV file.

    The header must name (case-insensitively) at least a ``timestamp`` or
    ``date`` column plus ``open``, ``high``, ``low``, ``close`` and
    ``volume``; extra columns are ignored. Rows may appear in any order
    and are sorted ascending.

    Raises:
        MissingColumn: a required column is absent.
        UnparseableRow: a data row fails to parse or violates bar
            invariants (row numbers are 1-based, excluding the header).
        DuplicateTimestamp: two rows share a timestamp.
        EmptySeries: the file has a header but no data rows.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptySeries(f"{path} is empty") from None
        columns = _resolve_columns(header)

        bars: list[Bar] = []
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            bars.append(_parse_row(row, row_no, columns, interval))

    if not bars:
        raise EmptySeries(f"{path} contains no data rows")
    bars.sort(key=lambda bar: bar.timestamp)
    return PriceSeries(
        symbol=symbol if symbol is not None else path.stem,
        asset_class=asset_class,
        interval=interval,
        bars=tuple(bars),
    )


def _resolve_columns(header: Sequence[str]) -> dict[str, int]:
    lowered = {name.strip().lower(): idx for idx, name in enumerate(header)}
    columns: dict[str, int] = {}
    if "timestamp" in lowered:
        columns["timestamp"] = lowered["timestamp"]
    elif "date" in lowered:
        columns["timestamp"] = lowered["date"]
    else:
        raise MissingColumn("timestamp")
    for name in ("open", "high", "low", "close", "volume"):
        if name not in lowered:
            raise MissingColumn(name)
        columns[name] = lowered[name]
    return columns


def _parse_row(
    row: Sequence[str], row_no: int, columns: dict[str, int], interval: str
) -> Bar:
    try:
        raw = {name: row[idx] for name, idx in columns.items()}
    except IndexError:
        raise UnparseableRow(row_no, f"expected {len(columns)} fields, got {len(row)}") from None
    try:
        ts = parse_timestamp(raw["timestamp"])
    except ValueError as exc:
        raise UnparseableRow(row_no, f"bad timestamp {raw['timestamp']!r}: {exc}") from None
    if not _on_interval_grid(ts, interval):
        raise UnparseableRow(
            row_no, f"timestamp {raw['timestamp']!r} is not aligned to the {interval} grid"
        )
    values: dict[str, float] = {}
    for name in ("open", "high", "low", "close", "volume"):
        try:
            values[name] = float(raw[name])
        except ValueError:
            raise UnparseableRow(row_no, f"bad {name} value {raw[name]!r}") from None
    try:
        return Bar(timestamp=ts, **values)
    except ValueError as exc:
        raise UnparseableRow(row_no, str(exc)) from None


def csv_text(series: PriceSeries) -> str:
    """Render a series in the canonical CSV format (see module docstring)."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for bar in series.bars:
        writer.writerow(
            [
                format_timestamp(bar.timestamp),
                _format_number(bar.open),
                _format_number(bar.high),
                _format_number(bar.low),
                _format_number(bar.close),
                _format_number(bar.volume),
            ]
        )
    return buffer.getvalue()


def save_csv(series: PriceSeries, path: str | Path) -> None:
    """Write the canonical CSV rendering of ``series`` to ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(series), encoding="utf-8", newline="")


def series_from_bars(
    symbol: str,
    asset_class: AssetClass,
    interval: str,
    bars: Iterable[Bar],
) -> PriceSeries:
    """Build a series from unordered bars, sorting by timestamp."""
    ordered = tuple(sorted(bars, key=lambda bar: bar.timestamp))
    return PriceSeries(symbol=symbol, asset_class=asset_class, interval=interval, bars=ordered)


def select_window(
    series: PriceSeries,
    start: datetime | None = None,
    end: datetime | None = None,
    fraction: float | None = None,
) -> PriceSeries:
    """Restrict a series to a time window and/or its trailing fraction.

    ``start``/``end`` are inclusive bounds applied first; ``fraction``
    (in (0, 1]) then keeps the most recent ``ceil(fraction * n)`` bars.
    Defaults leave the series untouched.
    """
    bars: Sequence[Bar] = series.bars
    if start is not None:
        bars = [bar for bar in bars if bar.timestamp >= start]
    if end is not None:
        bars = [bar for bar in bars if bar.timestamp <= end]
    if fraction is not None:
        if not 0 < fraction <= 1:
            raise ValueError(f"fraction must be in (0, 1], got {fraction}")
        keep = math.ceil(fraction * len(bars))
        bars = bars[len(bars) - keep :]
    if not bars:
        raise EmptySeries(f"window selection left no bars for {series.symbol!r}")
    return PriceSeries(
        symbol=series.symbol,
        asset_class=series.asset_class,
        interval=series.interval,
        bars=tuple(bars),
    )
