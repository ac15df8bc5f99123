"""All-in/all-out portfolio simulation over a price series and a signal
list, with proportional transaction fees.

The ledger is strictly sequential: at each bar the signals firing on that
bar are applied (a Buy converts all cash into units, a Sell converts all
units back into cash), then the portfolio is marked to market at the
bar's close. Signals that cannot execute (a Buy while invested, a Sell
while flat, or a Buy that cannot afford one whole share in integer mode)
are skipped and recorded with a reason, never raised.

A terminal open position is not force-liquidated; the final snapshot
values it at the last close.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime
from typing import NamedTuple, Sequence

from .data import PriceSeries
from .errors import SignalNotInSeries
from .signals import Side, Signal

logger = logging.getLogger(__name__)

SKIP_ALREADY_INVESTED = "already_invested"
SKIP_NO_POSITION = "no_position"
SKIP_INSUFFICIENT_CASH = "insufficient_cash_for_one_share"


@dataclass(frozen=True)
class BacktestConfig:
    """Execution parameters for one backtest run.

    ``fee_rate`` is the proportional fee charged per transaction (0.001
    means 0.1%); it is added on top of the notional when buying and
    deducted from proceeds when selling, so cash never goes negative.
    ``fractional_units`` should be True for divisible assets (crypto) and
    False for whole-share assets (stock).
    """

    initial_capital: float = 10_000.0
    fee_rate: float = 0.001
    fractional_units: bool = True

    def __post_init__(self) -> None:
        if not self.initial_capital > 0:
            raise ValueError(f"initial_capital must be > 0, got {self.initial_capital}")
        if not 0 <= self.fee_rate < 1:
            raise ValueError(f"fee_rate must be in [0, 1), got {self.fee_rate}")


@dataclass(frozen=True)
class PortfolioSnapshot:
    """Portfolio state at one bar, marked to market at that bar's close."""

    timestamp: datetime
    cash: float
    units: float
    holding_value: float
    total: float


@dataclass(frozen=True)
class Trade:
    """One executed transaction (the audit trail behind the snapshots)."""

    timestamp: datetime
    side: Side
    price: float
    units: float
    fee_paid: float


@dataclass(frozen=True)
class SkippedSignal:
    """A signal that did not execute, with the reason it was skipped."""

    signal: Signal
    reason: str


class BacktestResult(NamedTuple):
    snapshots: list[PortfolioSnapshot]
    trades: list[Trade]
    skipped: list[SkippedSignal]


def run_backtest(
    series: PriceSeries,
    signals: Sequence[Signal],
    config: BacktestConfig = BacktestConfig(),
) -> BacktestResult:
    """Simulate the all-in/all-out strategy and return one snapshot per bar.

    Execution price is the signal bar's close (no slippage, no next-bar
    delay). Every signal timestamp must occur in ``series``.
    """
    known = set(series.timestamps)
    for signal in signals:
        if signal.timestamp not in known:
            raise SignalNotInSeries(
                f"signal at {signal.timestamp.isoformat()} has no bar in {series.symbol!r}"
            )
    by_bar: dict[datetime, list[Signal]] = defaultdict(list)
    for signal in signals:
        by_bar[signal.timestamp].append(signal)

    cash = config.initial_capital
    units = 0.0
    snapshots: list[PortfolioSnapshot] = []
    trades: list[Trade] = []
    skipped: list[SkippedSignal] = []

    for bar in series.bars:
        for signal in by_bar.get(bar.timestamp, ()):
            if signal.side is Side.BUY:
                if units > 0:
                    skipped.append(SkippedSignal(signal, SKIP_ALREADY_INVESTED))
                    continue
                bought, cash, fee = _buy_all(cash, bar.close, config)
                if bought == 0:
                    logger.warning(
                        "skipping buy at %s: cannot afford one share at %s",
                        bar.timestamp.isoformat(),
                        bar.close,
                    )
                    skipped.append(SkippedSignal(signal, SKIP_INSUFFICIENT_CASH))
                    continue
                units = bought
                trades.append(Trade(bar.timestamp, Side.BUY, bar.close, bought, fee))
            else:
                if units == 0:
                    skipped.append(SkippedSignal(signal, SKIP_NO_POSITION))
                    continue
                notional = units * bar.close
                fee = notional * config.fee_rate
                cash += notional - fee
                trades.append(Trade(bar.timestamp, Side.SELL, bar.close, units, fee))
                units = 0.0
        holding = units * bar.close
        snapshots.append(
            PortfolioSnapshot(
                timestamp=bar.timestamp,
                cash=cash,
                units=units,
                holding_value=holding,
                total=cash + holding,
            )
        )
    return BacktestResult(snapshots, trades, skipped)


def _buy_all(cash: float, price: float, config: BacktestConfig) -> tuple[float, float, float]:
    """Convert all cash into units; returns (units, remaining cash, fee).

    In fractional mode the position is exactly all-in, so remaining cash
    is zero by definition. In integer mode the unit count is floored and
    nudged down if rounding would overdraw the cash balance.
    """
    max_units = cash / (price * (1.0 + config.fee_rate))
    if config.fractional_units:
        fee = max_units * price * config.fee_rate
        return max_units, 0.0, fee
    units = math.floor(max_units)
    while units > 0:
        notional = units * price
        fee = notional * config.fee_rate
        if notional + fee <= cash:
            return float(units), cash - (notional + fee), fee
        units -= 1
    return 0.0, cash, 0.0


def run_buy_and_hold(
    series: PriceSeries, config: BacktestConfig = BacktestConfig()
) -> list[PortfolioSnapshot]:
    """Baseline: one buy at the first bar's close, held to the end.

    The purchase follows the same fee and unit rules as the strategy
    engine; snapshots are emitted at every bar.
    """
    first = series.bars[0]
    units, cash, _fee = _buy_all(config.initial_capital, first.close, config)
    snapshots: list[PortfolioSnapshot] = []
    for bar in series.bars:
        holding = units * bar.close
        snapshots.append(
            PortfolioSnapshot(
                timestamp=bar.timestamp,
                cash=cash,
                units=units,
                holding_value=holding,
                total=cash + holding,
            )
        )
    return snapshots
