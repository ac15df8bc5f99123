"""Deterministic backtesting pipeline for MA-crossover and VWAP strategies."""

from .alphavantage import AlphaVantageClient, FetchPolicy, RequestBudget
from .data import (
    AssetClass,
    Bar,
    PriceSeries,
    load_csv,
    save_csv,
    select_window,
)
from .engine import (
    BacktestConfig,
    BacktestResult,
    PortfolioSnapshot,
    SkippedSignal,
    Trade,
    run_backtest,
    run_buy_and_hold,
)
from .errors import TradePipeError
from .indicators import IndicatorSeries, SessionMode, SessionRule, sma, vwap
from .metrics import (
    MetricsConfig,
    MetricsSummary,
    compare,
    gross_roi,
    roi_series,
    sharpe,
)
from .report import BacktestReport, RunConfig, StrategyName, load_report, run
from .signals import (
    Side,
    Signal,
    Strategy,
    crossings,
    ma_crossover_signals,
    vwap_cross_signals,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaVantageClient",
    "AssetClass",
    "BacktestConfig",
    "BacktestReport",
    "BacktestResult",
    "Bar",
    "FetchPolicy",
    "IndicatorSeries",
    "MetricsConfig",
    "MetricsSummary",
    "PortfolioSnapshot",
    "PriceSeries",
    "RequestBudget",
    "RunConfig",
    "SessionMode",
    "SessionRule",
    "Side",
    "Signal",
    "SkippedSignal",
    "Strategy",
    "StrategyName",
    "Trade",
    "TradePipeError",
    "compare",
    "crossings",
    "gross_roi",
    "load_csv",
    "load_report",
    "ma_crossover_signals",
    "roi_series",
    "run",
    "run_backtest",
    "run_buy_and_hold",
    "save_csv",
    "select_window",
    "sharpe",
    "sma",
    "vwap",
    "vwap_cross_signals",
]
