"""HTTP client for an Alpha-Vantage-compatible market data API.

Covers the four query functions the pipeline needs (TIME_SERIES_DAILY,
TIME_SERIES_INTRADAY, CRYPTO_INTRADAY, VWAP) with two guarantees the free
tier forces on us:

* client-side request budgeting (default 5 requests/minute and 500/day),
  enforced before a request is issued and persisted next to the cache so
  the budget survives restarts -- the server's own limits are hard, so we
  never rely on HTTP 429s;
* on-disk response caching keyed by (function, symbol, UTC date), so
  repeated calls within the cache TTL cost no budget and no network.

Timestamps are normalized to UTC on ingest using the payload's declared
time zone; daily bars are stamped at 00:00:00 UTC. Every price series
fetched over the network is also persisted as canonical CSV beside its
cache entry, so downstream runs can work fully offline.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Callable
from zoneinfo import ZoneInfo

import requests

from .data import AssetClass, Bar, PriceSeries, save_csv, series_from_bars
from .errors import (
    ApiError,
    EmptySeries,
    MalformedPayload,
    RateLimitExceeded,
    TradePipeError,
    UnsupportedAsset,
)
from .indicators import IndicatorSeries

DEFAULT_BASE_URL = "https://www.alphavantage.co/query"
API_KEY_ENV_VAR = "ALPHAVANTAGE_API_KEY"

#: Tickers the VWAP endpoint cannot serve; their VWAP must be computed
#: locally from bars instead (see the indicators module).
CRYPTO_TICKERS = frozenset(
    {"BTC", "ETH", "LTC", "XRP", "DOGE", "ADA", "SOL", "BNB", "DOT", "USDT", "USDC"}
)

Clock = Callable[[], datetime]


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class FetchPolicy:
    """Request budget and cache behaviour for one API client."""

    cache_dir: Path
    max_requests_per_minute: int = 5
    max_requests_per_day: int = 500
    cache_ttl: timedelta = timedelta(days=1)

    def __post_init__(self) -> None:
        if self.max_requests_per_minute <= 0 or self.max_requests_per_day <= 0:
            raise ValueError("request limits must be positive")


class RequestBudget:
    """Sliding-window request accounting, persisted as JSON in the cache dir.

    ``acquire`` must be called once per outgoing HTTP request; it raises
    :class:`RateLimitExceeded` when another request would exceed either
    the per-minute window or the per-UTC-day budget. Safe for concurrent
    use from multiple threads sharing one instance.
    """

    def __init__(self, policy: FetchPolicy, clock: Clock = _utc_now) -> None:
        self._policy = policy
        self._clock = clock
        self._lock = threading.Lock()
        self._path = Path(policy.cache_dir) / "request_log.json"

    def acquire(self) -> None:
        with self._lock:
            now = self._clock()
            stamps = self._load(now)
            minute_ago = now - timedelta(seconds=60)
            day_start = now.replace(hour=0, minute=0, second=0, microsecond=0)
            in_minute = sum(1 for ts in stamps if ts > minute_ago)
            if in_minute >= self._policy.max_requests_per_minute:
                raise RateLimitExceeded(
                    f"{in_minute} requests in the last 60 s "
                    f"(limit {self._policy.max_requests_per_minute}/min)"
                )
            in_day = sum(1 for ts in stamps if ts >= day_start)
            if in_day >= self._policy.max_requests_per_day:
                raise RateLimitExceeded(
                    f"{in_day} requests today (limit {self._policy.max_requests_per_day}/day)"
                )
            stamps.append(now)
            self._save(stamps)

    def _load(self, now: datetime) -> list[datetime]:
        if not self._path.exists():
            return []
        try:
            raw = json.loads(self._path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            return []
        stamps = []
        for text in raw.get("requests", []):
            try:
                stamps.append(datetime.fromisoformat(text))
            except ValueError:
                continue
        # anything older than both accounting windows can be dropped
        day_start = now.replace(hour=0, minute=0, second=0, microsecond=0)
        cutoff = min(day_start, now - timedelta(seconds=60))
        return [ts for ts in stamps if ts >= cutoff]

    def _save(self, stamps: list[datetime]) -> None:
        self._path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self._path.with_suffix(".json.tmp")
        tmp.write_text(
            json.dumps({"requests": [ts.isoformat() for ts in stamps]}),
            encoding="utf-8",
        )
        tmp.replace(self._path)


class AlphaVantageClient:
    """Fetches price and VWAP series, honouring cache and request budget.

    Concurrent fetches through one client share a single request budget;
    the returned series are immutable and safe to share between threads.
    """

    def __init__(
        self,
        policy: FetchPolicy,
        base_url: str = DEFAULT_BASE_URL,
        api_key: str | None = None,
        clock: Clock = _utc_now,
        session: requests.Session | None = None,
    ) -> None:
        self.policy = policy
        self.base_url = base_url
        self._api_key = api_key
        self._clock = clock
        self._session = session or requests.Session()
        self.budget = RequestBudget(policy, clock)

    # -- public fetch operations ------------------------------------

    def fetch_daily(self, symbol: str, asset_class: AssetClass) -> PriceSeries:
        """Daily OHLCV bars via TIME_SERIES_DAILY."""
        payload = self._get_payload(
            {"function": "TIME_SERIES_DAILY", "symbol": symbol, "outputsize": "full"},
            cache_key=("TIME_SERIES_DAILY", symbol),
        )
        bars = self._parse_bars(payload, "Time Series (Daily)", daily=True)
        series = series_from_bars(symbol, asset_class, "daily", bars)
        self._persist_csv(series, ("TIME_SERIES_DAILY", symbol))
        return series

    def fetch_intraday(
        self, symbol: str, asset_class: AssetClass, interval: str = "5min"
    ) -> PriceSeries:
        """Intraday OHLCV bars; crypto symbols go through CRYPTO_INTRADAY."""
        if asset_class is AssetClass.CRYPTO:
            params = {
                "function": "CRYPTO_INTRADAY",
                "symbol": symbol,
                "market": "USD",
                "interval": interval,
            }
            series_key = f"Time Series Crypto ({interval})"
        else:
            params = {
                "function": "TIME_SERIES_INTRADAY",
                "symbol": symbol,
                "interval": interval,
                "outputsize": "full",
            }
            series_key = f"Time Series ({interval})"
        cache_key = (params["function"], symbol, interval)
        payload = self._get_payload(params, cache_key=cache_key)
        bars = self._parse_bars(payload, series_key, daily=False)
        series = series_from_bars(symbol, asset_class, interval, bars)
        self._persist_csv(series, cache_key)
        return series

    def fetch_vwap_stock(self, symbol: str, interval: str = "5min") -> IndicatorSeries:
        """API-computed VWAP, available for traditional stocks only.

        Crypto tickers raise :class:`UnsupportedAsset`; compute their VWAP
        locally with :func:`tradepipe.indicators.vwap` instead.
        """
        if symbol.upper() in CRYPTO_TICKERS:
            raise UnsupportedAsset(
                f"the VWAP endpoint does not cover crypto symbol {symbol!r}; "
                "compute it locally from bars instead"
            )
        payload = self._get_payload(
            {"function": "VWAP", "symbol": symbol, "interval": interval},
            cache_key=("VWAP", symbol, interval),
        )
        section = _require_key(payload, "Technical Analysis: VWAP")
        tz = _payload_timezone(payload)
        points: list[tuple[datetime, float]] = []
        for stamp, fields in section.items():
            try:
                ts = _parse_payload_timestamp(stamp, tz, daily=False)
                points.append((ts, float(fields["VWAP"])))
            except (KeyError, ValueError, TypeError) as exc:
                raise MalformedPayload(f"bad VWAP entry at {stamp!r}: {exc}") from exc
        if not points:
            raise EmptySeries(f"VWAP response for {symbol!r} contains no points")
        points.sort(key=lambda item: item[0])
        return IndicatorSeries(
            name="VWAP",
            timestamps=tuple(ts for ts, _ in points),
            values=tuple(value for _, value in points),
        )

    # -- transport, cache and budget ---------------------------------

    def _get_payload(self, params: dict[str, str], cache_key: tuple[str, ...]) -> dict:
        cache_path = self._cache_path(cache_key)
        cached = self._read_cache(cache_path)
        if cached is not None:
            return cached
        self.budget.acquire()
        query = dict(params)
        query["apikey"] = self._resolve_api_key()
        try:
            response = self._session.get(self.base_url, params=query, timeout=30)
        except requests.RequestException as exc:
            raise ApiError(0, f"request failed: {exc}") from exc
        if response.status_code >= 400:
            raise ApiError(response.status_code, response.text[:300])
        try:
            payload = response.json()
        except ValueError as exc:
            raise MalformedPayload(f"response is not JSON: {response.text[:300]}") from exc
        if not isinstance(payload, dict):
            raise MalformedPayload(f"expected a JSON object, got {type(payload).__name__}")
        # the real API reports errors inside a 200 response
        for key in ("Error Message", "Note", "Information"):
            if key in payload:
                raise ApiError(response.status_code, str(payload[key]))
        self._write_cache(cache_path, payload)
        return payload

    def _resolve_api_key(self) -> str:
        key = self._api_key or os.environ.get(API_KEY_ENV_VAR)
        if not key:
            raise TradePipeError(
                f"no API key: set the {API_KEY_ENV_VAR} environment variable"
            )
        return key

    def _cache_path(self, cache_key: tuple[str, ...]) -> Path:
        day = self._clock().date().isoformat()
        slug = "_".join(re.sub(r"[^A-Za-z0-9]+", "-", part) for part in cache_key)
        return Path(self.policy.cache_dir) / f"{slug}_{day}.json"

    def _read_cache(self, path: Path) -> dict | None:
        try:
            entry = json.loads(path.read_text(encoding="utf-8"))
            fetched_at = datetime.fromisoformat(entry["fetched_at"])
            payload = entry["payload"]
        except (OSError, json.JSONDecodeError, KeyError, ValueError):
            return None
        if self._clock() - fetched_at > self.policy.cache_ttl:
            return None
        return payload if isinstance(payload, dict) else None

    def _write_cache(self, path: Path, payload: dict) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        entry = {"fetched_at": self._clock().isoformat(), "payload": payload}
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(entry), encoding="utf-8")
        tmp.replace(path)

    def _persist_csv(self, series: PriceSeries, cache_key: tuple[str, ...]) -> None:
        save_csv(series, self._cache_path(cache_key).with_suffix(".csv"))

    # -- payload parsing ----------------------------------------------

    def _parse_bars(self, payload: dict, series_key: str, daily: bool) -> list[Bar]:
        section = _require_key(payload, series_key)
        tz = _payload_timezone(payload)
        bars: list[Bar] = []
        for stamp, fields in section.items():
            try:
                ts = _parse_payload_timestamp(stamp, tz, daily=daily)
                bars.append(
                    Bar(
                        timestamp=ts,
                        open=float(fields["1. open"]),
                        high=float(fields["2. high"]),
                        low=float(fields["3. low"]),
                        close=float(fields["4. close"]),
                        volume=float(fields["5. volume"]),
                    )
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise MalformedPayload(f"bad bar at {stamp!r}: {exc}") from exc
        if not bars:
            raise EmptySeries(f"time series {series_key!r} is empty")
        return bars


def _require_key(payload: dict, key: str) -> dict:
    section = payload.get(key)
    if not isinstance(section, dict):
        raise MalformedPayload(f"payload is missing the {key!r} object")
    return section


def _payload_timezone(payload: dict) -> timezone | ZoneInfo:
    meta = payload.get("Meta Data")
    name = None
    if isinstance(meta, dict):
        for key, value in meta.items():
            if "Time Zone" in key:
                name = str(value)
                break
    if name is None or name in ("UTC", "Coordinated Universal Time"):
        return timezone.utc
    try:
        return ZoneInfo(name)
    except KeyError as exc:
        raise MalformedPayload(f"unknown payload time zone {name!r}") from exc


def _parse_payload_timestamp(
    stamp: str, tz: timezone | ZoneInfo, daily: bool
) -> datetime:
    parsed = datetime.fromisoformat(stamp)
    if daily:
        # daily bars are calendar dates; stamp them at UTC midnight
        return datetime(parsed.year, parsed.month, parsed.day, tzinfo=timezone.utc)
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=tz)
    return parsed.astimezone(timezone.utc)
