"""Command-line interface.

Three subcommands cover the pipeline end to end:

* ``fetch``    -- pull bars (or stock VWAP) from the API into canonical CSV
* ``backtest`` -- run a strategy over a CSV file or API symbol, writing
  ``report.json``, four CSVs and four charts into the output directory
* ``report``   -- re-render the charts from an existing ``report.json``

Exit status is 0 on success, 1 on a pipeline error (the message names the
failing stage), and 2 for usage errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from datetime import datetime, timedelta
from pathlib import Path

from .alphavantage import AlphaVantageClient, DEFAULT_BASE_URL, FetchPolicy
from .charts import render
from .data import INTERVALS, AssetClass, format_timestamp, parse_timestamp, save_csv
from .engine import BacktestConfig
from .errors import TradePipeError
from .indicators import (
    DEFAULT_LONG_WINDOW,
    DEFAULT_SHORT_WINDOW,
    SessionMode,
    SessionRule,
)
from .report import BacktestReport, RunConfig, StrategyName, load_report, run

logger = logging.getLogger(__name__)

_STRATEGIES = {
    "ma": StrategyName.MA_CROSSOVER,
    "vwap": StrategyName.VWAP_CROSS,
    "buyhold": StrategyName.BUY_HOLD,
}
_SESSIONS = {
    "daily": SessionMode.DAILY_RESET,
    "cumulative": SessionMode.CUMULATIVE,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tradepipe",
        description="Deterministic backtesting pipeline for MA-crossover and "
        "VWAP trading strategies.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    fetch = sub.add_parser("fetch", help="fetch market data into a canonical CSV")
    fetch.add_argument("--symbol", required=True, help="ticker, e.g. AAPL or ETH")
    _add_data_args(fetch)
    fetch.add_argument("--out", required=True, type=Path, help="CSV file to write")
    fetch.add_argument(
        "--vwap",
        action="store_true",
        help="fetch the API-computed VWAP indicator (stocks only) instead of bars",
    )
    _add_api_args(fetch)

    backtest = sub.add_parser("backtest", help="run a strategy and write the report")
    source = backtest.add_mutually_exclusive_group(required=True)
    source.add_argument("--csv", type=Path, help="price series CSV to backtest")
    source.add_argument("--symbol", help="ticker to fetch from the API")
    _add_data_args(backtest)
    backtest.add_argument(
        "--strategy", choices=sorted(_STRATEGIES), default="ma", help="strategy to run"
    )
    backtest.add_argument(
        "--short", type=int, default=DEFAULT_SHORT_WINDOW,
        help="short moving-average window in bars (ma strategy)",
    )
    backtest.add_argument(
        "--long", type=int, default=DEFAULT_LONG_WINDOW,
        help="long moving-average window in bars (ma strategy)",
    )
    backtest.add_argument(
        "--session", choices=sorted(_SESSIONS), default="daily",
        help="VWAP session mode (vwap strategy)",
    )
    backtest.add_argument(
        "--capital", type=float, default=10_000.0, help="initial capital in USD"
    )
    backtest.add_argument(
        "--fee", type=float, default=0.001,
        help="proportional fee per transaction (0.001 = 0.1%%)",
    )
    units = backtest.add_mutually_exclusive_group()
    units.add_argument(
        "--fractional-units", dest="fractional", action="store_true", default=None,
        help="allow fractional units (default for crypto)",
    )
    units.add_argument(
        "--integer-units", dest="fractional", action="store_false",
        help="whole shares only (default for stock)",
    )
    backtest.add_argument(
        "--rf", type=float, default=0.0, help="annual risk-free rate for Sharpe"
    )
    backtest.add_argument(
        "--periods-per-year", type=int, default=None,
        help="annualization count (default derives from asset class and interval)",
    )
    backtest.add_argument(
        "--window", metavar="START/END",
        help="inclusive time window, e.g. 2021-01-04/2021-06-30 (either side optional)",
    )
    backtest.add_argument(
        "--fraction", type=float, default=None,
        help="keep only the most recent fraction of bars, e.g. 0.4",
    )
    backtest.add_argument("--out", required=True, type=Path, help="output directory")
    _add_api_args(backtest)

    rerender = sub.add_parser("report", help="re-render charts from a report.json")
    rerender.add_argument(
        "--in", dest="report_path", required=True, type=Path, help="existing report.json"
    )
    rerender.add_argument("--out", required=True, type=Path, help="output directory")

    return parser


def _add_data_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--asset-class", choices=[a.value for a in AssetClass], default="crypto",
        help="asset class of the symbol/CSV (default: crypto)",
    )
    parser.add_argument(
        "--interval", choices=sorted(INTERVALS), default="daily",
        help="bar interval (default: daily)",
    )


def _add_api_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--api-base", default=DEFAULT_BASE_URL,
        help="base URL of the Alpha-Vantage-compatible API",
    )
    parser.add_argument(
        "--cache-dir", type=Path, default=None,
        help="directory for the response cache and request budget "
        "(default: ~/.cache/tradepipe)",
    )
    parser.add_argument(
        "--per-minute", type=int, default=5, help="client-side request limit per minute"
    )
    parser.add_argument(
        "--per-day", type=int, default=500, help="client-side request limit per UTC day"
    )
    parser.add_argument(
        "--cache-ttl-hours", type=float, default=24.0, help="cache freshness window"
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "fetch":
            return _cmd_fetch(args)
        if args.command == "backtest":
            return _cmd_backtest(args)
        return _cmd_report(args)
    except TradePipeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _policy(args: argparse.Namespace) -> FetchPolicy:
    cache_dir = args.cache_dir or Path.home() / ".cache" / "tradepipe"
    return FetchPolicy(
        cache_dir=cache_dir,
        max_requests_per_minute=args.per_minute,
        max_requests_per_day=args.per_day,
        cache_ttl=timedelta(hours=args.cache_ttl_hours),
    )


def _cmd_fetch(args: argparse.Namespace) -> int:
    client = AlphaVantageClient(_policy(args), base_url=args.api_base)
    asset_class = AssetClass(args.asset_class)
    if args.vwap:
        indicator = client.fetch_vwap_stock(args.symbol, interval=args.interval)
        args.out.parent.mkdir(parents=True, exist_ok=True)
        lines = ["timestamp,vwap"]
        lines += [
            f"{format_timestamp(ts)},{value!r}" for ts, value in indicator.points()
        ]
        args.out.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {len(indicator)} VWAP points to {args.out}")
        return 0
    if args.interval == "daily":
        series = client.fetch_daily(args.symbol, asset_class)
    else:
        series = client.fetch_intraday(args.symbol, asset_class, args.interval)
    save_csv(series, args.out)
    print(f"wrote {len(series)} bars for {series.symbol} to {args.out}")
    return 0


def _parse_window(text: str | None) -> tuple[datetime | None, datetime | None]:
    if not text:
        return None, None
    if "/" not in text:
        raise TradePipeError(
            f"bad --window {text!r}: expected START/END with either side optional"
        )
    start_text, end_text = text.split("/", 1)
    start = parse_timestamp(start_text) if start_text else None
    end = parse_timestamp(end_text) if end_text else None
    return start, end


def _cmd_backtest(args: argparse.Namespace) -> int:
    asset_class = AssetClass(args.asset_class)
    fractional = args.fractional
    if fractional is None:
        fractional = asset_class is AssetClass.CRYPTO
    start, end = _parse_window(args.window)
    config = RunConfig(
        strategy=_STRATEGIES[args.strategy],
        out_dir=args.out,
        csv_path=args.csv,
        api_symbol=args.symbol,
        asset_class=asset_class,
        interval=args.interval,
        short_window=args.short,
        long_window=args.long,
        session=SessionRule(mode=_SESSIONS[args.session]),
        backtest=BacktestConfig(
            initial_capital=args.capital,
            fee_rate=args.fee,
            fractional_units=fractional,
        ),
        risk_free_rate=args.rf,
        periods_per_year=args.periods_per_year,
        start=start,
        end=end,
        fraction=args.fraction,
        api_base=args.api_base,
        cache_dir=args.cache_dir,
    )
    report = run(config)
    render(report, args.out)
    _print_summary(report)
    print(f"report and charts written to {args.out}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    report = load_report(args.report_path)
    render(report, args.out)
    print(f"charts re-rendered to {args.out}")
    return 0


def _print_summary(report: BacktestReport) -> None:
    def fmt(value: float | None) -> str:
        return f"{value:.4f}" if value is not None else "n/a"

    strat = report.strategy_metrics
    base = report.baseline_metrics
    executed = sum(1 for reason in report.skip_reasons if reason is None)
    print(
        f"{report.fingerprint.symbol}: {len(report.signals)} signals "
        f"({executed} executed), {len(report.trades)} trades"
    )
    print(f"strategy    gross ROI {100 * strat.gross_roi:+9.4f}%  Sharpe {fmt(strat.sharpe)}")
    print(f"buy & hold  gross ROI {100 * base.gross_roi:+9.4f}%  Sharpe {fmt(base.sharpe)}")


if __name__ == "__main__":
    sys.exit(main())
