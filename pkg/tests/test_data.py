from __future__ import annotations

import math
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, strategies as st

from tradepipe.data import (
    AssetClass,
    Bar,
    PriceSeries,
    csv_text,
    load_csv,
    parse_timestamp,
    save_csv,
    select_window,
)
from tradepipe.errors import (
    DuplicateTimestamp,
    EmptySeries,
    MissingColumn,
    UnparseableRow,
)

from conftest import make_series

UTC = timezone.utc


def write(tmp_path, text, name="series.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


WELL_FORMED = """timestamp,open,high,low,close,volume
2021-01-04T00:00:00Z,100.0,101.0,99.0,100.5,1000
2021-01-05T00:00:00Z,100.5,102.0,100.0,101.5,1100
2021-01-06T00:00:00Z,101.5,103.0,101.0,102.0,900
"""


class TestLoadCsv:
    def test_well_formed_three_rows(self, tmp_path):
        series = load_csv(write(tmp_path, WELL_FORMED), AssetClass.CRYPTO, "daily")
        assert len(series) == 3
        assert series.symbol == "series"
        assert [b.close for b in series.bars] == [100.5, 101.5, 102.0]
        assert series.timestamps[0] == datetime(2021, 1, 4, tzinfo=UTC)
        assert all(a < b for a, b in zip(series.timestamps, series.timestamps[1:]))

    def test_rows_out_of_order_are_sorted(self, tmp_path):
        shuffled = "\n".join(
            WELL_FORMED.splitlines()[i] for i in (0, 3, 1, 2)
        ) + "\n"
        series = load_csv(write(tmp_path, shuffled), AssetClass.CRYPTO, "daily")
        ordered = load_csv(write(tmp_path, WELL_FORMED, "b.csv"), AssetClass.CRYPTO, "daily")
        assert series.bars == ordered.bars

    def test_high_below_low_on_row_two(self, tmp_path):
        bad = WELL_FORMED.replace(
            "2021-01-05T00:00:00Z,100.5,102.0,100.0,101.5,1100",
            "2021-01-05T00:00:00Z,100.5,99.0,102.0,101.5,1100",
        )
        with pytest.raises(UnparseableRow) as exc:
            load_csv(write(tmp_path, bad), AssetClass.CRYPTO, "daily")
        assert exc.value.row == 2

    def test_missing_column(self, tmp_path):
        text = "timestamp,open,high,low,close\n2021-01-04T00:00:00Z,1,2,0.5,1\n"
        with pytest.raises(MissingColumn) as exc:
            load_csv(write(tmp_path, text), AssetClass.CRYPTO, "daily")
        assert exc.value.column == "volume"

    def test_missing_timestamp_column(self, tmp_path):
        text = "open,high,low,close,volume\n1,2,0.5,1,10\n"
        with pytest.raises(MissingColumn):
            load_csv(write(tmp_path, text), AssetClass.CRYPTO, "daily")

    def test_date_header_and_bare_dates(self, tmp_path):
        text = "Date,Open,High,Low,Close,Volume\n2021-01-04,1.0,2.0,0.5,1.5,10\n"
        series = load_csv(write(tmp_path, text), AssetClass.STOCK, "daily")
        assert series.bars[0].timestamp == datetime(2021, 1, 4, tzinfo=UTC)

    def test_header_only_is_empty(self, tmp_path):
        with pytest.raises(EmptySeries):
            load_csv(
                write(tmp_path, "timestamp,open,high,low,close,volume\n"),
                AssetClass.CRYPTO,
                "daily",
            )

    def test_duplicate_timestamps_rejected(self, tmp_path):
        dup = WELL_FORMED + "2021-01-06T00:00:00Z,101.5,103.0,101.0,102.0,900\n"
        with pytest.raises(DuplicateTimestamp):
            load_csv(write(tmp_path, dup), AssetClass.CRYPTO, "daily")

    def test_unparseable_number(self, tmp_path):
        bad = WELL_FORMED.replace("1100", "oops")
        with pytest.raises(UnparseableRow) as exc:
            load_csv(write(tmp_path, bad), AssetClass.CRYPTO, "daily")
        assert exc.value.row == 2

    def test_unaligned_timestamp_reports_row(self, tmp_path):
        bad = WELL_FORMED.replace("2021-01-05T00:00:00Z", "2021-01-05T12:30:00Z")
        with pytest.raises(UnparseableRow) as exc:
            load_csv(write(tmp_path, bad), AssetClass.CRYPTO, "daily")
        assert exc.value.row == 2

    def test_symbol_override(self, tmp_path):
        series = load_csv(
            write(tmp_path, WELL_FORMED), AssetClass.CRYPTO, "daily", symbol="ETH"
        )
        assert series.symbol == "ETH"


class TestRoundTrip:
    def test_save_load_is_identical(self, tmp_path):
        series = make_series([100.0, 101.5, 99.9000999000999, 102.25])
        path = tmp_path / "round.csv"
        save_csv(series, path)
        loaded = load_csv(path, series.asset_class, series.interval, symbol=series.symbol)
        assert loaded == series

    def test_canonical_header(self):
        series = make_series([1.0, 2.0])
        assert csv_text(series).splitlines()[0] == "timestamp,open,high,low,close,volume"

    def test_intraday_round_trip(self, tmp_path):
        series = make_series([10.0, 10.5, 11.0], interval="5min")
        path = tmp_path / "intra.csv"
        save_csv(series, path)
        assert load_csv(path, series.asset_class, "5min", symbol="TEST") == series


class TestBarInvariants:
    def test_low_above_body_rejected(self):
        with pytest.raises(ValueError):
            Bar(datetime(2021, 1, 4, tzinfo=UTC), 100.0, 101.0, 100.5, 100.0, 1.0)

    def test_high_below_body_rejected(self):
        with pytest.raises(ValueError):
            Bar(datetime(2021, 1, 4, tzinfo=UTC), 100.0, 99.5, 99.0, 100.0, 1.0)

    def test_negative_volume_rejected(self):
        with pytest.raises(ValueError):
            Bar(datetime(2021, 1, 4, tzinfo=UTC), 100.0, 101.0, 99.0, 100.0, -1.0)

    def test_zero_price_rejected(self):
        with pytest.raises(ValueError):
            Bar(datetime(2021, 1, 4, tzinfo=UTC), 0.0, 1.0, 0.0, 1.0, 1.0)

    def test_naive_timestamp_rejected(self):
        with pytest.raises(ValueError):
            Bar(datetime(2021, 1, 4), 100.0, 101.0, 99.0, 100.0, 1.0)


class TestPriceSeries:
    def test_empty_rejected(self):
        with pytest.raises(EmptySeries):
            PriceSeries("X", AssetClass.CRYPTO, "daily", ())

    def test_unknown_interval_rejected(self):
        bar = Bar(datetime(2021, 1, 4, tzinfo=UTC), 1.0, 2.0, 0.5, 1.0, 1.0)
        with pytest.raises(ValueError):
            PriceSeries("X", AssetClass.CRYPTO, "7min", (bar,))

    def test_descending_rejected(self):
        series = make_series([1.0, 2.0])
        with pytest.raises(ValueError):
            PriceSeries("X", AssetClass.CRYPTO, "daily", tuple(reversed(series.bars)))

    def test_off_grid_timestamp_rejected(self):
        bar = Bar(datetime(2021, 1, 4, 7, 13, tzinfo=UTC), 1.0, 2.0, 0.5, 1.0, 1.0)
        with pytest.raises(ValueError):
            PriceSeries("X", AssetClass.CRYPTO, "daily", (bar,))


class TestSelectWindow:
    def test_default_is_identity(self):
        series = make_series([1.0, 2.0, 3.0])
        assert select_window(series) == series

    def test_fraction_keeps_most_recent(self):
        series = make_series(list(map(float, range(1, 11))))
        trimmed = select_window(series, fraction=0.4)
        assert [b.close for b in trimmed.bars] == [7.0, 8.0, 9.0, 10.0]

    def test_fraction_rounds_up(self):
        series = make_series([1.0, 2.0, 3.0])
        assert len(select_window(series, fraction=0.5)) == 2

    def test_start_end_inclusive(self):
        series = make_series([1.0, 2.0, 3.0, 4.0])
        t1, t2 = series.timestamps[1], series.timestamps[2]
        trimmed = select_window(series, start=t1, end=t2)
        assert trimmed.timestamps == (t1, t2)

    def test_empty_result_raises(self):
        series = make_series([1.0, 2.0])
        with pytest.raises(EmptySeries):
            select_window(series, start=series.timestamps[-1] + timedelta(days=1))

    def test_bad_fraction(self):
        series = make_series([1.0, 2.0])
        with pytest.raises(ValueError):
            select_window(series, fraction=0.0)
        with pytest.raises(ValueError):
            select_window(series, fraction=1.5)


class TestParseTimestamp:
    @pytest.mark.parametrize(
        "text",
        ["2021-01-04T00:00:00Z", "2021-01-04T00:00:00+00:00", "2021-01-04 00:00:00", "2021-01-04"],
    )
    def test_equivalent_forms(self, text):
        assert parse_timestamp(text) == datetime(2021, 1, 4, tzinfo=UTC)

    def test_offset_converted_to_utc(self):
        assert parse_timestamp("2021-01-04T05:30:00+05:30") == datetime(2021, 1, 4, tzinfo=UTC)


price = st.floats(min_value=0.01, max_value=1e6, allow_nan=False, allow_infinity=False)
volume = st.floats(min_value=-10.0, max_value=1e6, allow_nan=False, allow_infinity=False)


@given(
    rows=st.lists(st.tuples(price, price, price, price, volume), min_size=1, max_size=20)
)
def test_fuzzed_rows_never_silently_coerced(tmp_path_factory, rows):
    """Arbitrary numeric rows either load as invariant-satisfying bars or
    are rejected with a row-level error -- never silently fixed up."""
    lines = ["timestamp,open,high,low,close,volume"]
    start = datetime(2021, 1, 4, tzinfo=UTC)
    for i, (o, h, l, c, v) in enumerate(rows):
        ts = (start + timedelta(days=i)).strftime("%Y-%m-%dT%H:%M:%SZ")
        lines.append(f"{ts},{o!r},{h!r},{l!r},{c!r},{v!r}")
    path = tmp_path_factory.mktemp("fuzz") / "fuzz.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    try:
        series = load_csv(path, AssetClass.CRYPTO, "daily")
    except UnparseableRow:
        return
    for bar in series.bars:
        assert bar.low <= min(bar.open, bar.close)
        assert bar.high >= max(bar.open, bar.close)
        assert bar.volume >= 0
        assert min(bar.open, bar.high, bar.low, bar.close) > 0
        assert all(map(math.isfinite, (bar.open, bar.high, bar.low, bar.close, bar.volume)))
