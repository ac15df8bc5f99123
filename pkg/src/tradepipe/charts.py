"""Static dashboard charts rendered from a backtest report.

Four SVG files are produced with deterministic names and deterministic
bytes (fixed ``svg.hashsalt``, no embedded dates), so re-rendering the
same report is byte-identical:

* ``signals.svg``   -- close price, indicator lines, buy/sell markers
* ``portfolio.svg`` -- cash, holdings and total value per bar
* ``roi.svg``       -- ROI of the strategy vs. buy-and-hold
* ``sharpe.svg``    -- Sharpe ratio of the strategy vs. buy-and-hold
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import UnwritableOutput
from .report import BacktestReport
from .signals import Side

CHART_FILENAMES = ("signals.svg", "portfolio.svg", "roi.svg", "sharpe.svg")

_STRATEGY_LABELS = {
    "ma_crossover": "MA crossover",
    "vwap_cross": "VWAP cross",
    "buy_hold": "buy & hold",
}

_SVG_OPTIONS = {"format": "svg", "metadata": {"Date": None}}


def render(report: BacktestReport, out_dir: str | Path) -> list[Path]:
    """Render the four dashboard charts; returns the written paths."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_probe"
        probe.touch()
        probe.unlink()
    except OSError as exc:
        raise UnwritableOutput(f"cannot write to {out_dir}: {exc}") from exc

    label = _STRATEGY_LABELS.get(report.config["strategy"], report.config["strategy"])
    with plt.rc_context({"svg.hashsalt": "tradepipe"}):
        paths = [
            _signals_chart(report, label, out_dir / "signals.svg"),
            _portfolio_chart(report, out_dir / "portfolio.svg"),
            _roi_chart(report, label, out_dir / "roi.svg"),
            _sharpe_chart(report, label, out_dir / "sharpe.svg"),
        ]
    return paths


def _save(fig: plt.Figure, path: Path) -> Path:
    try:
        fig.savefig(path, **_SVG_OPTIONS)
    except OSError as exc:
        raise UnwritableOutput(f"cannot write chart {path}: {exc}") from exc
    finally:
        plt.close(fig)
    return path


def _signals_chart(report: BacktestReport, label: str, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(10, 5))
    times = [bar.timestamp for bar in report.bars]
    ax.plot(times, [bar.close for bar in report.bars], color="black", lw=1.2, label="close")
    for indicator in report.indicators:
        pts = [(ts, v) for ts, v in indicator.points() if v is not None]
        if pts:
            ax.plot(*zip(*pts), lw=1.0, label=indicator.name)
    buys = [s for s in report.signals if s.side is Side.BUY]
    sells = [s for s in report.signals if s.side is Side.SELL]
    if buys:
        ax.scatter(
            [s.timestamp for s in buys],
            [s.trigger_price for s in buys],
            marker="^", color="green", s=60, zorder=3, label="buy",
        )
    if sells:
        ax.scatter(
            [s.timestamp for s in sells],
            [s.trigger_price for s in sells],
            marker="v", color="red", s=60, zorder=3, label="sell",
        )
    ax.set_title(f"Buy-and-sell signals: {report.fingerprint.symbol} ({label})")
    ax.set_ylabel("price (USD)")
    ax.legend(loc="best")
    fig.autofmt_xdate()
    return _save(fig, path)


def _portfolio_chart(report: BacktestReport, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(10, 5))
    times = [snap.timestamp for snap in report.snapshots]
    ax.plot(times, [snap.cash for snap in report.snapshots], label="cash")
    ax.plot(times, [snap.holding_value for snap in report.snapshots], label="holdings")
    ax.plot(times, [snap.total for snap in report.snapshots], lw=1.6, label="total")
    ax.set_title(f"Portfolio time series: {report.fingerprint.symbol}")
    ax.set_ylabel("value (USD)")
    ax.legend(loc="best")
    fig.autofmt_xdate()
    return _save(fig, path)


def _roi_chart(report: BacktestReport, label: str, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(10, 5))
    times = [snap.timestamp for snap in report.snapshots]
    strat = report.strategy_metrics
    base = report.baseline_metrics
    ax.plot(
        times,
        [100 * r for r in strat.roi_series],
        label=f"{label} ({100 * strat.gross_roi:+.2f}%)",
    )
    ax.plot(
        times,
        [100 * r for r in base.roi_series],
        color="black",
        label=f"buy & hold ({100 * base.gross_roi:+.2f}%)",
    )
    ax.axhline(0.0, color="gray", lw=0.8, ls=":")
    ax.set_title(f"Gross ROI: {label} vs. buy-and-hold")
    ax.set_ylabel("ROI (%)")
    ax.legend(loc="best")
    fig.autofmt_xdate()
    return _save(fig, path)


def _sharpe_chart(report: BacktestReport, label: str, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 5))
    pairs = [(label, report.strategy_metrics.sharpe), ("buy & hold", report.baseline_metrics.sharpe)]
    for x, (name, value) in enumerate(pairs):
        height = value if value is not None else 0.0
        ax.bar(x, height, width=0.55, color="tab:blue" if x == 0 else "black")
        note = f"{value:.2f}" if value is not None else "n/a"
        ax.annotate(note, (x, height), ha="center", va="bottom", xytext=(0, 3),
                    textcoords="offset points")
    ax.set_xticks(range(len(pairs)), [name for name, _ in pairs])
    ax.axhline(0.0, color="gray", lw=0.8)
    ax.set_title("Sharpe ratio: strategy vs. buy-and-hold")
    ax.set_ylabel("annualized Sharpe")
    return _save(fig, path)
