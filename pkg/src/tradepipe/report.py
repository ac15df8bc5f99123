"""End-to-end pipeline run and the self-contained backtest report.

``run(config)`` wires load -> indicators -> signals -> backtest (plus the
buy-and-hold baseline) -> metrics, writes ``report.json`` with four
sibling CSVs (bars, signals, snapshots, trades) into the output
directory, and returns the in-memory report. Any module error is
re-raised as :class:`PipelineError` tagged with the stage it occurred in.

The report embeds everything chart rendering needs (bars, indicator
lines, signals, snapshots, both metric summaries), so figures are always
drawn from reported numbers and an existing ``report.json`` can be
re-rendered without re-running the pipeline. Serialization is fully
deterministic: timestamps come from the data, never the wall clock, and
floats use shortest round-trip decimals.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import json
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterator

from .alphavantage import DEFAULT_BASE_URL, AlphaVantageClient, FetchPolicy
from .data import (
    AssetClass,
    Bar,
    PriceSeries,
    csv_text,
    format_timestamp,
    load_csv,
    parse_timestamp,
    save_csv,
    select_window,
)
from .engine import (
    BacktestConfig,
    BacktestResult,
    PortfolioSnapshot,
    Trade,
    run_backtest,
    run_buy_and_hold,
)
from .errors import PipelineError, TradePipeError, UnwritableOutput, WindowOrder
from .indicators import (
    DEFAULT_LONG_WINDOW,
    DEFAULT_SHORT_WINDOW,
    IndicatorSeries,
    SessionRule,
    sma,
    vwap,
)
from .metrics import MetricsConfig, MetricsSummary, compare, default_periods_per_year
from .signals import Side, Signal, Strategy, crossings, vwap_cross_signals

REPORT_FILENAME = "report.json"
CSV_FILENAMES = ("bars.csv", "signals.csv", "snapshots.csv", "trades.csv")


class StrategyName(enum.Enum):
    """Which pipeline to run; BUY_HOLD degenerates to the baseline only."""

    MA_CROSSOVER = "ma_crossover"
    VWAP_CROSS = "vwap_cross"
    BUY_HOLD = "buy_hold"


@dataclass(frozen=True)
class RunConfig:
    """Everything one CLI invocation needs; exactly one data source."""

    strategy: StrategyName
    out_dir: Path
    csv_path: Path | None = None
    api_symbol: str | None = None
    asset_class: AssetClass = AssetClass.CRYPTO
    interval: str = "daily"
    short_window: int = DEFAULT_SHORT_WINDOW
    long_window: int = DEFAULT_LONG_WINDOW
    session: SessionRule = SessionRule()
    backtest: BacktestConfig = BacktestConfig()
    risk_free_rate: float = 0.0
    periods_per_year: int | None = None
    start: datetime | None = None
    end: datetime | None = None
    fraction: float | None = None
    api_base: str = DEFAULT_BASE_URL
    cache_dir: Path | None = None

    def __post_init__(self) -> None:
        if (self.csv_path is None) == (self.api_symbol is None):
            raise ValueError("exactly one data source required: csv_path or api_symbol")

    def resolved_periods_per_year(self) -> int:
        if self.periods_per_year is not None:
            return self.periods_per_year
        return default_periods_per_year(self.asset_class, self.interval)


@dataclass(frozen=True)
class DataFingerprint:
    """Identity of the exact dataset a report was computed from."""

    symbol: str
    asset_class: AssetClass
    interval: str
    bar_count: int
    first_timestamp: datetime
    last_timestamp: datetime
    content_hash: str


@dataclass(frozen=True)
class BacktestReport:
    """Self-contained result of one pipeline run (see module docstring)."""

    fingerprint: DataFingerprint
    bars: tuple[Bar, ...]
    indicators: tuple[IndicatorSeries, ...]
    config: dict
    signals: tuple[Signal, ...]
    skip_reasons: tuple[str | None, ...]
    snapshots: tuple[PortfolioSnapshot, ...]
    trades: tuple[Trade, ...]
    strategy_metrics: MetricsSummary
    baseline_metrics: MetricsSummary

    def to_json_dict(self) -> dict:
        meta = {
            "symbol": self.fingerprint.symbol,
            "asset_class": self.fingerprint.asset_class.value,
            "interval": self.fingerprint.interval,
            "bar_count": self.fingerprint.bar_count,
            "first_timestamp": format_timestamp(self.fingerprint.first_timestamp),
            "last_timestamp": format_timestamp(self.fingerprint.last_timestamp),
            "content_hash": self.fingerprint.content_hash,
            "bars": [
                {
                    "timestamp": format_timestamp(bar.timestamp),
                    "open": bar.open,
                    "high": bar.high,
                    "low": bar.low,
                    "close": bar.close,
                    "volume": bar.volume,
                }
                for bar in self.bars
            ],
            "indicators": [
                {
                    "name": ind.name,
                    "points": [
                        [format_timestamp(ts), value] for ts, value in ind.points()
                    ],
                }
                for ind in self.indicators
            ],
        }
        return {
            "meta": meta,
            "config": self.config,
            "signals": [
                {
                    "timestamp": format_timestamp(sig.timestamp),
                    "side": sig.side.value,
                    "trigger_price": sig.trigger_price,
                    "strategy": sig.strategy.value,
                    "skip_reason": reason,
                }
                for sig, reason in zip(self.signals, self.skip_reasons)
            ],
            "snapshots": [
                {
                    "timestamp": format_timestamp(snap.timestamp),
                    "cash": snap.cash,
                    "units": snap.units,
                    "holding_value": snap.holding_value,
                    "total": snap.total,
                }
                for snap in self.snapshots
            ],
            "trades": [
                {
                    "timestamp": format_timestamp(trade.timestamp),
                    "side": trade.side.value,
                    "price": trade.price,
                    "units": trade.units,
                    "fee_paid": trade.fee_paid,
                }
                for trade in self.trades
            ],
            "strategy_metrics": _metrics_to_dict(self.strategy_metrics),
            "baseline_metrics": _metrics_to_dict(self.baseline_metrics),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "BacktestReport":
        meta = doc["meta"]
        bars = tuple(
            Bar(
                timestamp=parse_timestamp(entry["timestamp"]),
                open=entry["open"],
                high=entry["high"],
                low=entry["low"],
                close=entry["close"],
                volume=entry["volume"],
            )
            for entry in meta["bars"]
        )
        indicators = tuple(
            IndicatorSeries(
                name=entry["name"],
                timestamps=tuple(parse_timestamp(ts) for ts, _ in entry["points"]),
                values=tuple(value for _, value in entry["points"]),
            )
            for entry in meta["indicators"]
        )
        signals = tuple(
            Signal(
                timestamp=parse_timestamp(entry["timestamp"]),
                side=Side(entry["side"]),
                trigger_price=entry["trigger_price"],
                strategy=Strategy(entry["strategy"]),
            )
            for entry in doc["signals"]
        )
        skip_reasons = tuple(entry["skip_reason"] for entry in doc["signals"])
        snapshots = tuple(
            PortfolioSnapshot(
                timestamp=parse_timestamp(entry["timestamp"]),
                cash=entry["cash"],
                units=entry["units"],
                holding_value=entry["holding_value"],
                total=entry["total"],
            )
            for entry in doc["snapshots"]
        )
        trades = tuple(
            Trade(
                timestamp=parse_timestamp(entry["timestamp"]),
                side=Side(entry["side"]),
                price=entry["price"],
                units=entry["units"],
                fee_paid=entry["fee_paid"],
            )
            for entry in doc["trades"]
        )
        fingerprint = DataFingerprint(
            symbol=meta["symbol"],
            asset_class=AssetClass(meta["asset_class"]),
            interval=meta["interval"],
            bar_count=meta["bar_count"],
            first_timestamp=parse_timestamp(meta["first_timestamp"]),
            last_timestamp=parse_timestamp(meta["last_timestamp"]),
            content_hash=meta["content_hash"],
        )
        return cls(
            fingerprint=fingerprint,
            bars=bars,
            indicators=indicators,
            config=doc["config"],
            signals=signals,
            skip_reasons=skip_reasons,
            snapshots=snapshots,
            trades=trades,
            strategy_metrics=_metrics_from_dict(doc["strategy_metrics"]),
            baseline_metrics=_metrics_from_dict(doc["baseline_metrics"]),
        )


def _metrics_to_dict(summary: MetricsSummary) -> dict:
    return {
        "gross_roi": summary.gross_roi,
        "sharpe": summary.sharpe,
        "roi_series": list(summary.roi_series),
        "periods_per_year": summary.periods_per_year,
        "risk_free_rate": summary.risk_free_rate,
    }


def _metrics_from_dict(doc: dict) -> MetricsSummary:
    return MetricsSummary(
        gross_roi=doc["gross_roi"],
        sharpe=doc["sharpe"],
        roi_series=tuple(doc["roi_series"]),
        periods_per_year=doc["periods_per_year"],
        risk_free_rate=doc["risk_free_rate"],
    )


@contextmanager
def _stage(name: str) -> Iterator[None]:
    try:
        yield
    except PipelineError:
        raise
    except (TradePipeError, OSError, ValueError) as exc:
        raise PipelineError(name, exc) from exc


def run(config: RunConfig) -> BacktestReport:
    """Execute the pipeline and write the report artifacts to disk."""
    with _stage("load"):
        series = _load_series(config)
    with _stage("indicators"):
        indicators = _compute_indicators(config, series)
    with _stage("signals"):
        signals = _detect_signals(config, series, indicators)
    with _stage("backtest"):
        if config.strategy is StrategyName.BUY_HOLD:
            baseline = run_buy_and_hold(series, config.backtest)
            result = BacktestResult(snapshots=baseline, trades=[], skipped=[])
        else:
            result = run_backtest(series, signals, config.backtest)
            baseline = run_buy_and_hold(series, config.backtest)
    with _stage("metrics"):
        metrics_config = MetricsConfig(
            initial_capital=config.backtest.initial_capital,
            risk_free_rate=config.risk_free_rate,
            periods_per_year=config.resolved_periods_per_year(),
        )
        strategy_metrics, baseline_metrics = compare(
            result.snapshots, baseline, metrics_config
        )

    skip_by_key = {
        (skip.signal.timestamp, skip.signal.side): skip.reason for skip in result.skipped
    }
    report = BacktestReport(
        fingerprint=_fingerprint(series),
        bars=series.bars,
        indicators=tuple(indicators),
        config=_config_echo(config, metrics_config),
        signals=tuple(signals),
        skip_reasons=tuple(
            skip_by_key.get((sig.timestamp, sig.side)) for sig in signals
        ),
        snapshots=tuple(result.snapshots),
        trades=tuple(result.trades),
        strategy_metrics=strategy_metrics,
        baseline_metrics=baseline_metrics,
    )
    with _stage("report"):
        write_artifacts(report, series, config.out_dir)
    return report


def _load_series(config: RunConfig) -> PriceSeries:
    if config.csv_path is not None:
        series = load_csv(config.csv_path, config.asset_class, config.interval)
    else:
        cache_dir = config.cache_dir or Path.home() / ".cache" / "tradepipe"
        client = AlphaVantageClient(
            FetchPolicy(cache_dir=cache_dir), base_url=config.api_base
        )
        if config.interval == "daily":
            series = client.fetch_daily(config.api_symbol, config.asset_class)
        else:
            series = client.fetch_intraday(
                config.api_symbol, config.asset_class, config.interval
            )
    if config.start or config.end or config.fraction:
        series = select_window(
            series, start=config.start, end=config.end, fraction=config.fraction
        )
    return series


def _compute_indicators(config: RunConfig, series: PriceSeries) -> list[IndicatorSeries]:
    if config.strategy is StrategyName.MA_CROSSOVER:
        if config.short_window >= config.long_window:
            raise WindowOrder(
                f"short window {config.short_window} must be smaller than "
                f"long window {config.long_window}"
            )
        return [sma(series, config.short_window), sma(series, config.long_window)]
    if config.strategy is StrategyName.VWAP_CROSS:
        return [vwap(series, config.session)]
    return []


def _detect_signals(
    config: RunConfig, series: PriceSeries, indicators: list[IndicatorSeries]
) -> list[Signal]:
    # reuse the indicator series computed for the report, so chart lines and
    # signals can never disagree
    if config.strategy is StrategyName.MA_CROSSOVER:
        return crossings(
            indicators[0], indicators[1], Strategy.MA_CROSSOVER,
            trigger_prices=series.closes,
        )
    if config.strategy is StrategyName.VWAP_CROSS:
        return vwap_cross_signals(series, indicators[0])
    return []


def _fingerprint(series: PriceSeries) -> DataFingerprint:
    digest = hashlib.sha256(csv_text(series).encode("utf-8")).hexdigest()
    return DataFingerprint(
        symbol=series.symbol,
        asset_class=series.asset_class,
        interval=series.interval,
        bar_count=len(series),
        first_timestamp=series.bars[0].timestamp,
        last_timestamp=series.bars[-1].timestamp,
        content_hash="sha256:" + digest,
    )


def _config_echo(config: RunConfig, metrics_config: MetricsConfig) -> dict:
    if config.csv_path is not None:
        source: dict = {"type": "csv", "path": str(config.csv_path)}
    else:
        source = {"type": "api", "symbol": config.api_symbol, "base_url": config.api_base}
    return {
        "strategy": config.strategy.value,
        "source": source,
        "asset_class": config.asset_class.value,
        "interval": config.interval,
        "short_window": config.short_window,
        "long_window": config.long_window,
        "session": config.session.mode.value,
        "initial_capital": config.backtest.initial_capital,
        "fee_rate": config.backtest.fee_rate,
        "fractional_units": config.backtest.fractional_units,
        "risk_free_rate": metrics_config.risk_free_rate,
        "periods_per_year": metrics_config.periods_per_year,
        "window": {
            "start": format_timestamp(config.start) if config.start else None,
            "end": format_timestamp(config.end) if config.end else None,
            "fraction": config.fraction,
        },
    }


def write_artifacts(report: BacktestReport, series: PriceSeries, out_dir: Path) -> None:
    """Write report.json plus the bars/signals/snapshots/trades CSVs."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UnwritableOutput(f"cannot create output directory {out_dir}: {exc}") from exc

    (out_dir / REPORT_FILENAME).write_text(
        json.dumps(report.to_json_dict(), indent=2) + "\n", encoding="utf-8"
    )
    save_csv(series, out_dir / "bars.csv")
    _write_csv(
        out_dir / "signals.csv",
        ("timestamp", "side", "trigger_price", "strategy"),
        [
            (
                format_timestamp(sig.timestamp),
                sig.side.value,
                repr(sig.trigger_price),
                sig.strategy.value,
            )
            for sig in report.signals
        ],
    )
    _write_csv(
        out_dir / "snapshots.csv",
        ("timestamp", "cash", "units", "holding_value", "total"),
        [
            (
                format_timestamp(snap.timestamp),
                repr(snap.cash),
                repr(snap.units),
                repr(snap.holding_value),
                repr(snap.total),
            )
            for snap in report.snapshots
        ],
    )
    _write_csv(
        out_dir / "trades.csv",
        ("timestamp", "side", "price", "units", "fee_paid"),
        [
            (
                format_timestamp(trade.timestamp),
                trade.side.value,
                repr(trade.price),
                repr(trade.units),
                repr(trade.fee_paid),
            )
            for trade in report.trades
        ],
    )


def _write_csv(path: Path, header: tuple[str, ...], rows: list[tuple]) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def load_report(path: str | Path) -> BacktestReport:
    """Read a previously written ``report.json``."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return BacktestReport.from_json_dict(doc)
