"""Crossing detection between two aligned series, and the two strategies
built on it: short/long moving-average crossover and price/VWAP crossing.

A crossing requires strict inequality at the current bar; equality at the
previous bar counts as "from below/at", so a touch followed by a break
fires exactly once and exact ties never fire. Signals are detection
events only -- whether a signal is executable (e.g. a Buy while already
invested) is the engine's concern, and consecutive same-side signals are
emitted faithfully.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from datetime import datetime
from typing import Sequence

from .data import PriceSeries
from .errors import MisalignedSeries, WindowOrder
from .indicators import (
    DEFAULT_LONG_WINDOW,
    DEFAULT_SHORT_WINDOW,
    IndicatorSeries,
    close_prices,
    sma,
    vwap as compute_vwap,
    SessionRule,
)


class Side(enum.Enum):
    BUY = "buy"
    SELL = "sell"


class Strategy(enum.Enum):
    MA_CROSSOVER = "ma_crossover"
    VWAP_CROSS = "vwap_cross"


@dataclass(frozen=True)
class Signal:
    """A timestamped buy or sell event at the close of the signal bar."""

    timestamp: datetime
    side: Side
    trigger_price: float
    strategy: Strategy


def crossings(
    fast: IndicatorSeries,
    slow: IndicatorSeries,
    strategy: Strategy,
    trigger_prices: Sequence[float] | None = None,
) -> list[Signal]:
    """Detect strict crossings of ``fast`` over ``slow``.

    Buy at index ``t`` iff ``fast[t-1] <= slow[t-1]`` and
    ``fast[t] > slow[t]``; Sell for the mirrored condition. Comparison
    happens only where both series have values at both ``t-1`` and ``t``,
    so nothing can fire at the first comparable index.

    ``trigger_prices``, when given, supplies the signal's trigger price
    per index (the source series' closes); otherwise the fast series'
    own value at ``t`` is used.
    """
    if fast.timestamps != slow.timestamps:
        raise MisalignedSeries(
            f"{fast.name} and {slow.name} are not aligned to the same timestamps"
        )
    if trigger_prices is not None and len(trigger_prices) != len(fast):
        raise MisalignedSeries("trigger prices are not aligned to the series")

    out: list[Signal] = []
    for t in range(1, len(fast)):
        f_prev, f_cur = fast.values[t - 1], fast.values[t]
        s_prev, s_cur = slow.values[t - 1], slow.values[t]
        if None in (f_prev, f_cur, s_prev, s_cur):
            continue
        if f_prev <= s_prev and f_cur > s_cur:
            side = Side.BUY
        elif f_prev >= s_prev and f_cur < s_cur:
            side = Side.SELL
        else:
            continue
        trigger = trigger_prices[t] if trigger_prices is not None else f_cur
        out.append(
            Signal(
                timestamp=fast.timestamps[t],
                side=side,
                trigger_price=float(trigger),
                strategy=strategy,
            )
        )
    return out


def ma_crossover_signals(
    series: PriceSeries,
    short_n: int = DEFAULT_SHORT_WINDOW,
    long_n: int = DEFAULT_LONG_WINDOW,
) -> list[Signal]:
    """Golden/death-cross signals from short vs. long moving averages."""
    if short_n >= long_n:
        raise WindowOrder(f"short window {short_n} must be smaller than long window {long_n}")
    fast = sma(series, short_n)
    slow = sma(series, long_n)
    return crossings(fast, slow, Strategy.MA_CROSSOVER, trigger_prices=series.closes)


def vwap_cross_signals(series: PriceSeries, vwap_series: IndicatorSeries) -> list[Signal]:
    """Signals where the close price crosses the VWAP line."""
    return crossings(close_prices(series), vwap_series, Strategy.VWAP_CROSS)


def vwap_strategy_signals(
    series: PriceSeries, rule: SessionRule = SessionRule()
) -> list[Signal]:
    """Convenience wrapper: compute VWAP locally and detect crossings."""
    return vwap_cross_signals(series, compute_vwap(series, rule))
