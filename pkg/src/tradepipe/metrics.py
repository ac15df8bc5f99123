"""Performance metrics over portfolio snapshot series: ROI and the
annualized Sharpe ratio, plus the paired strategy-vs-baseline summary the
dashboards are built from.

Sharpe convention: simple per-bar returns of total portfolio value,
sample standard deviation (ddof=1), excess over a per-period risk-free
rate, annualized by ``sqrt(periods_per_year)``. The parameters are
carried in the summary so reported numbers are self-describing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import AssetClass, INTERVALS
from .engine import PortfolioSnapshot
from .errors import MisalignedSeries, TooFewPoints, ZeroVolatility

#: Trading days per year used for annualization.
TRADING_DAYS = {AssetClass.STOCK: 252, AssetClass.CRYPTO: 365}

#: Minutes of trading per day (stocks trade a 6.5 h session; crypto runs 24/7).
TRADING_MINUTES_PER_DAY = {AssetClass.STOCK: 390, AssetClass.CRYPTO: 1440}


@dataclass(frozen=True)
class MetricsConfig:
    """Parameters shared by both sides of a strategy/baseline comparison."""

    initial_capital: float
    risk_free_rate: float = 0.0
    periods_per_year: int = 252


@dataclass(frozen=True)
class MetricsSummary:
    """ROI and Sharpe for one snapshot series.

    ``sharpe`` is None when undefined (fewer than three snapshots, or
    zero return volatility), so degenerate runs still produce a report.
    """

    gross_roi: float
    sharpe: float | None
    roi_series: tuple[float, ...]
    periods_per_year: int
    risk_free_rate: float


def default_periods_per_year(asset_class: AssetClass, interval: str) -> int:
    """Annualization count for a bar interval: 252 or 365 trading days
    times the bars per day (e.g. 252*78 for 5-min stock bars)."""
    if interval == "daily":
        return TRADING_DAYS[asset_class]
    minutes = INTERVALS[interval].total_seconds() / 60
    bars_per_day = int(TRADING_MINUTES_PER_DAY[asset_class] / minutes)
    return TRADING_DAYS[asset_class] * bars_per_day


def roi_series(snapshots: Sequence[PortfolioSnapshot], initial_capital: float) -> list[float]:
    """Per-bar return on investment: ``total_t / initial_capital - 1``."""
    if not initial_capital > 0:
        raise ValueError(f"initial_capital must be > 0, got {initial_capital}")
    return [snap.total / initial_capital - 1.0 for snap in snapshots]


def gross_roi(snapshots: Sequence[PortfolioSnapshot], initial_capital: float) -> float:
    """Final-bar ROI (fees are already inside the totals)."""
    return roi_series(snapshots, initial_capital)[-1]


def sharpe(
    snapshots: Sequence[PortfolioSnapshot],
    risk_free_rate: float = 0.0,
    periods_per_year: int = 252,
) -> float:
    """Annualized Sharpe ratio of per-bar simple returns of total value.

    Raises:
        TooFewPoints: fewer than three snapshots (two returns are needed
            for a sample standard deviation).
        ZeroVolatility: all per-bar returns are identical.
    """
    if len(snapshots) < 3:
        raise TooFewPoints(f"need at least 3 snapshots, got {len(snapshots)}")
    totals = np.asarray([snap.total for snap in snapshots], dtype=np.float64)
    returns = totals[1:] / totals[:-1] - 1.0
    std = float(returns.std(ddof=1))
    if std == 0.0:
        raise ZeroVolatility("per-bar returns have zero standard deviation")
    rf_per_period = risk_free_rate / periods_per_year
    excess_mean = float(returns.mean()) - rf_per_period
    return excess_mean / std * math.sqrt(periods_per_year)


def summarize(
    snapshots: Sequence[PortfolioSnapshot], config: MetricsConfig
) -> MetricsSummary:
    """Build a :class:`MetricsSummary`, mapping degenerate Sharpe to None."""
    series = roi_series(snapshots, config.initial_capital)
    try:
        ratio: float | None = sharpe(
            snapshots, config.risk_free_rate, config.periods_per_year
        )
    except (TooFewPoints, ZeroVolatility):
        ratio = None
    return MetricsSummary(
        gross_roi=series[-1],
        sharpe=ratio,
        roi_series=tuple(series),
        periods_per_year=config.periods_per_year,
        risk_free_rate=config.risk_free_rate,
    )


def compare(
    strategy_snapshots: Sequence[PortfolioSnapshot],
    baseline_snapshots: Sequence[PortfolioSnapshot],
    config: MetricsConfig,
) -> tuple[MetricsSummary, MetricsSummary]:
    """Summaries for strategy and buy-and-hold on identical parameters."""
    if [s.timestamp for s in strategy_snapshots] != [s.timestamp for s in baseline_snapshots]:
        raise MisalignedSeries("strategy and baseline snapshots do not share timestamps")
    return summarize(strategy_snapshots, config), summarize(baseline_snapshots, config)
