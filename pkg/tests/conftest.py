from __future__ import annotations

from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest
from hypothesis import settings

from tradepipe.data import AssetClass, Bar, PriceSeries

from stub_api import StubApiServer

settings.register_profile("ci", derandomize=True, max_examples=60)
settings.load_profile("ci")

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN


@pytest.fixture(scope="session")
def api_server():
    server = StubApiServer().start()
    yield server
    server.stop()


@pytest.fixture(autouse=True)
def _api_key(monkeypatch):
    monkeypatch.setenv("ALPHAVANTAGE_API_KEY", "test-key")


def make_series(
    closes,
    *,
    volumes=None,
    interval: str = "daily",
    asset_class: AssetClass = AssetClass.CRYPTO,
    symbol: str = "TEST",
    start: datetime | None = None,
) -> PriceSeries:
    """Quick series builder: flat bars around the given closes."""
    if start is None:
        start = datetime(2021, 1, 4, tzinfo=timezone.utc)
    if interval == "daily":
        step = timedelta(days=1)
    else:
        step = timedelta(minutes=int(interval.removesuffix("min")))
    bars = []
    for i, close in enumerate(closes):
        volume = 1000.0 if volumes is None else float(volumes[i])
        bars.append(
            Bar(
                timestamp=start + i * step,
                open=float(close),
                high=float(close) + 1.0,
                low=max(float(close) - 1.0, 1e-9),
                close=float(close),
                volume=volume,
            )
        )
    return PriceSeries(
        symbol=symbol, asset_class=asset_class, interval=interval, bars=tuple(bars)
    )
