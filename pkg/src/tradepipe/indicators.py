"""Indicator series aligned to a price series: simple moving average and
volume-weighted average price.

Both indicators are pure functions of the bars seen so far (no lookahead)
and mark their warm-up region with ``None`` rather than zero-filling it,
so crossover detection never sees a fabricated value.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from datetime import datetime
from typing import Iterator

import numpy as np

from .data import PriceSeries
from .errors import WindowTooLarge, WindowZero

DEFAULT_SHORT_WINDOW = 50
DEFAULT_LONG_WINDOW = 200


@dataclass(frozen=True)
class IndicatorSeries:
    """Per-bar indicator values aligned one-to-one with a price series.

    ``values[i]`` is ``None`` inside the warm-up region (e.g. the first
    ``n - 1`` bars of an SMA, or a zero-volume session prefix for VWAP).
    """

    name: str
    timestamps: tuple[datetime, ...]
    values: tuple[float | None, ...]

    def __post_init__(self) -> None:
        if len(self.timestamps) != len(self.values):
            raise ValueError("timestamps and values must have equal length")

    def __len__(self) -> int:
        return len(self.values)

    def points(self) -> Iterator[tuple[datetime, float | None]]:
        return zip(self.timestamps, self.values)


class SessionMode(enum.Enum):
    """How VWAP accumulation treats session boundaries."""

    DAILY_RESET = "daily_reset"
    CUMULATIVE = "cumulative"


@dataclass(frozen=True)
class SessionRule:
    """Session partitioning for VWAP; daily resets occur at UTC midnight."""

    mode: SessionMode = SessionMode.DAILY_RESET


def sma(series: PriceSeries, n: int) -> IndicatorSeries:
    """Trailing simple moving average of close prices with window ``n``.

    Point ``t`` is the mean of closes ``t - n + 1 .. t``; the first
    ``n - 1`` points are ``None``.
    """
    if n < 1:
        raise WindowZero(f"window must be >= 1, got {n}")
    if n > len(series):
        raise WindowTooLarge(f"window {n} exceeds series length {len(series)}")
    closes = np.asarray(series.closes, dtype=np.float64)
    windows = np.lib.stride_tricks.sliding_window_view(closes, n)
    means = windows.mean(axis=-1)
    values: tuple[float | None, ...] = (None,) * (n - 1) + tuple(float(v) for v in means)
    return IndicatorSeries(name=f"SMA_{n}", timestamps=series.timestamps, values=values)


def vwap(series: PriceSeries, rule: SessionRule = SessionRule()) -> IndicatorSeries:
    """Session-cumulative volume-weighted average of close prices.

    Point ``t`` is ``sum(close_i * volume_i) / sum(volume_i)`` over bars
    from the session start through ``t``, and ``None`` while the session's
    cumulative volume is still zero. With ``DAILY_RESET`` the accumulation
    restarts at each UTC calendar-day boundary.
    """
    values: list[float | None] = []
    session_date = None
    pv_sum = 0.0
    vol_sum = 0.0
    for bar in series.bars:
        if rule.mode is SessionMode.DAILY_RESET:
            day = bar.timestamp.date()
            if day != session_date:
                session_date = day
                pv_sum = 0.0
                vol_sum = 0.0
        pv_sum += bar.close * bar.volume
        vol_sum += bar.volume
        values.append(pv_sum / vol_sum if vol_sum > 0 else None)
    return IndicatorSeries(name="VWAP", timestamps=series.timestamps, values=tuple(values))


def close_prices(series: PriceSeries) -> IndicatorSeries:
    """The close-price line itself, as an indicator aligned to the series."""
    return IndicatorSeries(
        name="CLOSE",
        timestamps=series.timestamps,
        values=tuple(float(bar.close) for bar in series.bars),
    )
