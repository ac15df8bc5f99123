from __future__ import annotations

import json
from pathlib import Path

import pytest

from tradepipe.charts import CHART_FILENAMES, render
from tradepipe.cli import main
from tradepipe.data import AssetClass
from tradepipe.engine import BacktestConfig
from tradepipe.errors import PipelineError, UnwritableOutput
from tradepipe.report import (
    BacktestReport,
    RunConfig,
    StrategyName,
    load_report,
    run,
)
from tradepipe.signals import Side

F1 = Path(__file__).parent / "fixtures" / "f1.csv"
F2 = Path(__file__).parent / "fixtures" / "f2.csv"

TOP_LEVEL_KEYS = [
    "meta",
    "config",
    "signals",
    "snapshots",
    "trades",
    "strategy_metrics",
    "baseline_metrics",
]


def f1_config(out_dir: Path, **overrides) -> RunConfig:
    defaults = dict(
        strategy=StrategyName.MA_CROSSOVER,
        out_dir=out_dir,
        csv_path=F1,
        asset_class=AssetClass.CRYPTO,
        interval="daily",
        short_window=3,
        long_window=5,
        backtest=BacktestConfig(initial_capital=10_000.0, fee_rate=0.0),
    )
    defaults.update(overrides)
    return RunConfig(**defaults)


class TestRun:
    def test_f1_pipeline(self, tmp_path):
        report = run(f1_config(tmp_path / "out"))
        assert [s.side for s in report.signals] == [Side.BUY, Side.SELL]
        assert len(report.trades) == 2
        assert report.skip_reasons == (None, None)
        assert report.fingerprint.bar_count == 60
        assert report.fingerprint.symbol == "f1"
        assert report.strategy_metrics.gross_roi > 0
        assert report.baseline_metrics.gross_roi == pytest.approx(0.1, rel=1e-9)
        assert [ind.name for ind in report.indicators] == ["SMA_3", "SMA_5"]

    def test_artifacts_written(self, tmp_path):
        out = tmp_path / "out"
        run(f1_config(out))
        assert (out / "report.json").exists()
        for name in ("bars.csv", "signals.csv", "snapshots.csv", "trades.csv"):
            assert (out / name).exists(), name

    def test_report_json_top_level_keys(self, tmp_path):
        out = tmp_path / "out"
        run(f1_config(out))
        doc = json.loads((out / "report.json").read_text())
        assert list(doc.keys()) == TOP_LEVEL_KEYS

    def test_csv_headers_bit_exact(self, tmp_path):
        out = tmp_path / "out"
        run(f1_config(out))
        headers = {
            "bars.csv": "timestamp,open,high,low,close,volume",
            "signals.csv": "timestamp,side,trigger_price,strategy",
            "snapshots.csv": "timestamp,cash,units,holding_value,total",
            "trades.csv": "timestamp,side,price,units,fee_paid",
        }
        for name, header in headers.items():
            first_line = (out / name).read_text().splitlines()[0]
            assert first_line == header, name

    def test_buy_hold_strategy_equals_baseline(self, tmp_path):
        report = run(f1_config(tmp_path / "out", strategy=StrategyName.BUY_HOLD))
        assert report.signals == ()
        assert report.trades == ()
        assert report.strategy_metrics == report.baseline_metrics

    def test_missing_csv_names_load_stage(self, tmp_path):
        config = f1_config(tmp_path / "out", csv_path=tmp_path / "nope.csv")
        with pytest.raises(PipelineError) as exc:
            run(config)
        assert exc.value.stage == "load"

    def test_window_order_checked_before_window_size(self, tmp_path):
        config = f1_config(tmp_path / "out", short_window=200, long_window=50)
        with pytest.raises(PipelineError) as exc:
            run(config)
        assert exc.value.stage == "indicators"
        assert "WindowOrder" in str(exc.value)

    def test_config_echo_self_describing(self, tmp_path):
        report = run(f1_config(tmp_path / "out"))
        echo = report.config
        assert echo["strategy"] == "ma_crossover"
        assert echo["source"] == {"type": "csv", "path": str(F1)}
        assert echo["short_window"] == 3 and echo["long_window"] == 5
        assert echo["fee_rate"] == 0.0
        assert echo["periods_per_year"] == 365  # crypto daily default

    def test_vwap_strategy_on_f2(self, tmp_path):
        config = f1_config(
            tmp_path / "out",
            strategy=StrategyName.VWAP_CROSS,
            csv_path=F2,
            interval="5min",
            backtest=BacktestConfig(initial_capital=100_000.0),
        )
        report = run(config)
        assert len(report.signals) >= 4
        assert [ind.name for ind in report.indicators] == ["VWAP"]
        # detection emits duplicates faithfully; execution pairs them with
        # at most one trade each and records why the rest were skipped
        executed = sum(1 for r in report.skip_reasons if r is None)
        assert executed == len(report.trades)

    def test_first_sell_skipped_with_reason(self, tmp_path):
        csv_path = tmp_path / "dip.csv"
        closes = [100.0, 95.0, 106.0, 104.0]
        lines = ["timestamp,open,high,low,close,volume"]
        for i, c in enumerate(closes):
            lines.append(f"2021-07-21T00:{5 * i:02d}:00Z,{c},{c + 1},{c - 1},{c},1000")
        csv_path.write_text("\n".join(lines) + "\n")
        config = f1_config(
            tmp_path / "out", strategy=StrategyName.VWAP_CROSS,
            csv_path=csv_path, interval="5min",
        )
        report = run(config)
        assert report.signals[0].side is Side.SELL
        assert report.skip_reasons[0] == "no_position"
        doc = json.loads((tmp_path / "out" / "report.json").read_text())
        assert doc["signals"][0]["skip_reason"] == "no_position"

    def test_api_source(self, tmp_path, api_server):
        config = RunConfig(
            strategy=StrategyName.BUY_HOLD,
            out_dir=tmp_path / "out",
            api_symbol="AAPL",
            asset_class=AssetClass.STOCK,
            interval="daily",
            backtest=BacktestConfig(fractional_units=False),
            api_base=api_server.base_url,
            cache_dir=tmp_path / "cache",
        )
        report = run(config)
        assert report.fingerprint.symbol == "AAPL"
        assert report.fingerprint.bar_count == 3

    def test_exactly_one_source_required(self, tmp_path):
        with pytest.raises(ValueError):
            RunConfig(strategy=StrategyName.BUY_HOLD, out_dir=tmp_path)
        with pytest.raises(ValueError):
            RunConfig(
                strategy=StrategyName.BUY_HOLD,
                out_dir=tmp_path,
                csv_path=F1,
                api_symbol="ETH",
            )

    def test_fraction_window(self, tmp_path):
        report = run(f1_config(tmp_path / "out", fraction=0.5))
        assert report.fingerprint.bar_count == 30


class TestSerializationRoundTrip:
    def test_json_round_trip_is_lossless(self, tmp_path):
        report = run(f1_config(tmp_path / "out"))
        doc = json.loads(json.dumps(report.to_json_dict()))
        assert BacktestReport.from_json_dict(doc) == report

    def test_load_report(self, tmp_path):
        out = tmp_path / "out"
        report = run(f1_config(out))
        assert load_report(out / "report.json") == report

    def test_two_runs_identical_bytes(self, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        run(f1_config(out_a))
        run(f1_config(out_b))
        assert (out_a / "report.json").read_bytes() == (out_b / "report.json").read_bytes()


class TestRender:
    def test_four_charts_written(self, tmp_path):
        out = tmp_path / "out"
        report = run(f1_config(out))
        paths = render(report, out)
        assert [p.name for p in paths] == list(CHART_FILENAMES)
        for path in paths:
            assert path.stat().st_size > 0

    def test_rerender_byte_identical(self, tmp_path):
        report = run(f1_config(tmp_path / "out"))
        dir_a, dir_b = tmp_path / "charts_a", tmp_path / "charts_b"
        render(report, dir_a)
        render(report, dir_b)
        for name in CHART_FILENAMES:
            assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes(), name

    def test_zero_signals_renders(self, tmp_path):
        report = run(f1_config(tmp_path / "out", strategy=StrategyName.BUY_HOLD))
        paths = render(report, tmp_path / "charts")
        assert all(p.exists() for p in paths)

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("file, not a directory")
        report = run(f1_config(tmp_path / "out"))
        with pytest.raises(UnwritableOutput):
            render(report, blocker / "sub")


class TestCli:
    def test_backtest_exit_zero_and_artifacts(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(
            ["backtest", "--csv", str(F1), "--strategy", "ma", "--short", "3",
             "--long", "5", "--fee", "0", "--capital", "10000", "--out", str(out)]
        )
        assert code == 0
        assert (out / "report.json").exists()
        for name in CHART_FILENAMES:
            assert (out / name).exists()
        stdout = capsys.readouterr().out
        assert "gross ROI" in stdout

    def test_window_order_nonzero_exit(self, tmp_path, capsys):
        code = main(
            ["backtest", "--csv", str(F1), "--strategy", "ma", "--short", "200",
             "--long", "50", "--out", str(tmp_path / "out")]
        )
        assert code == 1
        err = capsys.readouterr().err
        assert "WindowOrder" in err and "[indicators]" in err

    def test_missing_csv_nonzero_exit(self, tmp_path, capsys):
        code = main(
            ["backtest", "--csv", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "out")]
        )
        assert code == 1
        assert "[load]" in capsys.readouterr().err

    def test_report_rerender_identical(self, tmp_path):
        out, out2 = tmp_path / "out", tmp_path / "out2"
        assert main(
            ["backtest", "--csv", str(F1), "--strategy", "ma", "--short", "3",
             "--long", "5", "--fee", "0", "--out", str(out)]
        ) == 0
        assert main(["report", "--in", str(out / "report.json"), "--out", str(out2)]) == 0
        for name in CHART_FILENAMES:
            assert (out / name).read_bytes() == (out2 / name).read_bytes(), name

    def test_fetch_writes_csv(self, tmp_path, api_server):
        target = tmp_path / "aapl.csv"
        code = main(
            ["fetch", "--symbol", "AAPL", "--asset-class", "stock", "--out", str(target),
             "--api-base", api_server.base_url, "--cache-dir", str(tmp_path / "cache")]
        )
        assert code == 0
        assert target.read_text().splitlines()[0] == "timestamp,open,high,low,close,volume"
        assert len(target.read_text().splitlines()) == 4

    def test_fetch_vwap_writes_csv(self, tmp_path, api_server):
        target = tmp_path / "tsla_vwap.csv"
        code = main(
            ["fetch", "--symbol", "TSLA", "--asset-class", "stock", "--interval", "5min",
             "--vwap", "--out", str(target),
             "--api-base", api_server.base_url, "--cache-dir", str(tmp_path / "cache")]
        )
        assert code == 0
        lines = target.read_text().splitlines()
        assert lines[0] == "timestamp,vwap"
        assert len(lines) == 4

    def test_fetch_rate_limit_exit_code(self, tmp_path, api_server, capsys):
        args = ["fetch", "--symbol", "AAPL", "--asset-class", "stock",
                "--api-base", api_server.base_url, "--cache-dir", str(tmp_path / "cache"),
                "--per-minute", "1", "--cache-ttl-hours", "0"]
        assert main(args + ["--out", str(tmp_path / "a.csv")]) == 0
        assert main(args + ["--out", str(tmp_path / "b.csv")]) == 1
        assert "requests in the last 60 s" in capsys.readouterr().err

    def test_stock_defaults_to_integer_units(self, tmp_path):
        out = tmp_path / "out"
        csv_path = tmp_path / "stock.csv"
        csv_path.write_text(
            "timestamp,open,high,low,close,volume\n"
            "2021-01-04T00:00:00Z,3.0,4.0,2.5,3.0,100\n"
            "2021-01-05T00:00:00Z,3.0,4.0,2.5,3.5,100\n"
        )
        code = main(
            ["backtest", "--csv", str(csv_path), "--asset-class", "stock",
             "--strategy", "buyhold", "--fee", "0", "--out", str(out)]
        )
        assert code == 0
        doc = json.loads((out / "report.json").read_text())
        assert doc["config"]["fractional_units"] is False
        assert doc["snapshots"][0]["units"] == 3333.0

    def test_window_flag(self, tmp_path):
        out = tmp_path / "out"
        code = main(
            ["backtest", "--csv", str(F1), "--strategy", "buyhold",
             "--window", "2021-01-10/2021-01-20", "--out", str(out)]
        )
        assert code == 0
        doc = json.loads((out / "report.json").read_text())
        assert doc["meta"]["bar_count"] == 11
        assert doc["config"]["window"]["start"] == "2021-01-10T00:00:00Z"

    def test_bad_window_flag(self, tmp_path, capsys):
        code = main(
            ["backtest", "--csv", str(F1), "--strategy", "buyhold",
             "--window", "2021-01-10", "--out", str(tmp_path / "out")]
        )
        assert code == 1
        assert "--window" in capsys.readouterr().err

    def test_usage_error_exit_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["backtest"])  # no data source
        assert exc.value.code == 2
