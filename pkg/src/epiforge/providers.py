"""Clients for the three external data providers: geocoding, timezone, weather.

Every implementation speaks the same raw-body interface (parsed JSON dicts),
so the enrichment stage is indifferent to where bytes come from:

* HttpProvider      - live HTTP calls (requires API keys, one retry)
* FixtureProvider   - reads canned response bodies from disk; no network
                      capability at all, which is what makes --offline safe
* MemoryProvider    - dict-backed double that counts calls, for tests

CachingProvider persists raw bodies to disk in the fixture layout and makes
re-runs free; BudgetedProvider enforces per-provider daily call limits.
"""

from __future__ import annotations

import json
import os
import re
import threading
import urllib.parse
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path


class ProviderError(Exception):
    """A provider call failed or returned an unusable body."""


class BudgetExhausted(Exception):
    """The daily call budget for a provider is spent; the pipeline pauses."""

    def __init__(self, provider: str, daily_limit: int):
        super().__init__(f"daily budget of {daily_limit} calls exhausted for {provider}")
        self.provider = provider
        self.daily_limit = daily_limit


GEOCODE = "geocode"
TIMEZONE = "timezone"
WEATHER = "weather"
PROVIDER_NAMES = (GEOCODE, TIMEZONE, WEATHER)

DEFAULT_DAILY_LIMIT = 1000

SECONDS_PER_DAY = 86_400


def slugify(name: str) -> str:
    """Filesystem-safe key for a country name ("Dominican Republic" ->
    "dominican-republic")."""
    slug = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    return slug or "unnamed"


def coord_key(lat: float, lon: float) -> str:
    """Coordinates rounded to 4 decimals (~11 m), formatted stably."""
    return f"{round(lat, 4):.4f}_{round(lon, 4):.4f}"


def day_floor(timestamp: int) -> int:
    """Timestamp floored to its UTC day; timezone lookups are cached per day."""
    return timestamp - timestamp % SECONDS_PER_DAY


def geocode_path(country: str) -> str:
    return f"{GEOCODE}/{slugify(country)}.json"


def timezone_path(lat: float, lon: float, timestamp: int) -> str:
    return f"{TIMEZONE}/{coord_key(lat, lon)}_{day_floor(timestamp)}.json"


def weather_path(lat: float, lon: float, timestamp: int) -> str:
    return f"{WEATHER}/{coord_key(lat, lon)}_{timestamp}.json"


@dataclass
class CallBudget:
    """Daily call allowance for one provider, with atomic check-and-increment."""

    provider: str
    daily_limit: int = DEFAULT_DAILY_LIMIT
    used_today: int = 0
    day: date = field(default_factory=date.today)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def spend(self) -> None:
        """Consume one call or raise BudgetExhausted; resets on day rollover."""
        with self._lock:
            today = date.today()
            if today != self.day:
                self.day = today
                self.used_today = 0
            if self.used_today >= self.daily_limit:
                raise BudgetExhausted(self.provider, self.daily_limit)
            self.used_today += 1


def default_budgets(
    geocode: int = DEFAULT_DAILY_LIMIT,
    timezone: int = DEFAULT_DAILY_LIMIT,
    weather: int = DEFAULT_DAILY_LIMIT,
) -> dict[str, CallBudget]:
    return {
        GEOCODE: CallBudget(GEOCODE, geocode),
        TIMEZONE: CallBudget(TIMEZONE, timezone),
        WEATHER: CallBudget(WEATHER, weather),
    }


class HttpProvider:
    """Live HTTP client. Retries each request once, then raises ProviderError."""

    GEO_BASE = "https://maps.googleapis.com/maps/api"
    WEATHER_BASE = "https://api.darksky.net"

    def __init__(
        self,
        geocode_api_key: str,
        timezone_api_key: str,
        weather_api_key: str,
        *,
        geo_base: str | None = None,
        weather_base: str | None = None,
        timeout: float = 30.0,
    ):
        self._geocode_key = geocode_api_key
        self._timezone_key = timezone_api_key
        self._weather_key = weather_api_key
        self._geo_base = (geo_base or self.GEO_BASE).rstrip("/")
        self._weather_base = (weather_base or self.WEATHER_BASE).rstrip("/")
        self._timeout = timeout

    def _get_json(self, url: str) -> dict:
        import requests

        last_error: Exception | None = None
        for _ in range(2):  # one retry, nothing fancier
            try:
                response = requests.get(url, timeout=self._timeout)
                response.raise_for_status()
                return response.json()
            except Exception as exc:  # noqa: BLE001 - normalized below
                last_error = exc
        raise ProviderError(f"request failed after retry: {url}: {last_error}")

    def geocode_raw(self, country: str) -> dict:
        address = urllib.parse.quote_plus(country)
        return self._get_json(
            f"{self._geo_base}/geocode/json?address={address}&key={self._geocode_key}"
        )

    def timezone_raw(self, lat: float, lon: float, timestamp: int) -> dict:
        return self._get_json(
            f"{self._geo_base}/timezone/json?location={lat},{lon}"
            f"&timestamp={timestamp}&key={self._timezone_key}"
        )

    def weather_raw(self, lat: float, lon: float, timestamp: int) -> dict:
        return self._get_json(
            f"{self._weather_base}/forecast/{self._weather_key}/{lat},{lon},{timestamp}"
        )


class FixtureProvider:
    """Reads raw provider bodies from an on-disk fixture tree; fully offline.

    The tree is the provider's entire knowledge, so a missing file is not a
    transport error but a definitive "no data" answer: it comes back as an
    error body (cacheable, so re-runs stay call-free) rather than an
    exception. The body names the fixture path relative to the tree so it
    stays byte-identical wherever the tree lives.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def _read(self, relative: str) -> dict:
        path = self.root / relative
        if not path.is_file():
            return {"error": f"no fixture {relative}"}
        with path.open(encoding="utf-8") as fh:
            return json.load(fh)

    def geocode_raw(self, country: str) -> dict:
        return self._read(geocode_path(country))

    def timezone_raw(self, lat: float, lon: float, timestamp: int) -> dict:
        return self._read(timezone_path(lat, lon, timestamp))

    def weather_raw(self, lat: float, lon: float, timestamp: int) -> dict:
        return self._read(weather_path(lat, lon, timestamp))


class MemoryProvider:
    """Dict-backed provider double that records every call it serves."""

    def __init__(
        self,
        geocode: dict[str, dict] | None = None,
        timezone: dict[str, dict] | None = None,
        weather: dict[str, dict] | None = None,
    ):
        self.geocode = dict(geocode or {})
        self.timezone = dict(timezone or {})
        self.weather = dict(weather or {})
        self.calls: list[tuple[str, str]] = []
        self._lock = threading.Lock()

    def _record(self, provider: str, key: str) -> None:
        with self._lock:
            self.calls.append((provider, key))

    def call_count(self, provider: str) -> int:
        return sum(1 for name, _ in self.calls if name == provider)

    def geocode_raw(self, country: str) -> dict:
        key = slugify(country)
        self._record(GEOCODE, key)
        if key not in self.geocode:
            raise ProviderError(f"no stubbed geocode body for {country!r}")
        return self.geocode[key]

    def timezone_raw(self, lat: float, lon: float, timestamp: int) -> dict:
        key = f"{coord_key(lat, lon)}_{day_floor(timestamp)}"
        self._record(TIMEZONE, key)
        if key not in self.timezone:
            raise ProviderError(f"no stubbed timezone body for {key}")
        return self.timezone[key]

    def weather_raw(self, lat: float, lon: float, timestamp: int) -> dict:
        key = f"{coord_key(lat, lon)}_{timestamp}"
        self._record(WEATHER, key)
        if key not in self.weather:
            raise ProviderError(f"no stubbed weather body for {key}")
        return self.weather[key]


class BudgetedProvider:
    """Spends one budget unit per underlying call; cache hits never get here."""

    def __init__(self, inner, budgets: dict[str, CallBudget] | None = None):
        self.inner = inner
        self.budgets = budgets if budgets is not None else default_budgets()

    def _spend(self, provider: str) -> None:
        budget = self.budgets.get(provider)
        if budget is not None:
            budget.spend()

    def geocode_raw(self, country: str) -> dict:
        self._spend(GEOCODE)
        return self.inner.geocode_raw(country)

    def timezone_raw(self, lat: float, lon: float, timestamp: int) -> dict:
        self._spend(TIMEZONE)
        return self.inner.timezone_raw(lat, lon, timestamp)

    def weather_raw(self, lat: float, lon: float, timestamp: int) -> dict:
        self._spend(WEATHER)
        return self.inner.weather_raw(lat, lon, timestamp)


class CachingProvider:
    """Persists every raw body under `cache_dir` using the fixture layout.

    Response bodies are cached whatever they contain - a "no results" body is
    still a response - but transport-level failures (ProviderError) are not,
    so a flaky call can be retried on the next run. Writes are atomic
    (temp file + rename) and a warm cache satisfies re-runs with zero
    underlying calls.
    """

    def __init__(self, inner, cache_dir: str | Path):
        self.inner = inner
        self.cache_dir = Path(cache_dir)

    def _get(self, relative: str, fetch) -> dict:
        path = self.cache_dir / relative
        if path.is_file():
            with path.open(encoding="utf-8") as fh:
                return json.load(fh)
        body = fetch()
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        with tmp.open("w", encoding="utf-8") as fh:
            json.dump(body, fh, separators=(",", ":"), ensure_ascii=False)
        os.replace(tmp, path)
        return body

    def geocode_raw(self, country: str) -> dict:
        return self._get(geocode_path(country), lambda: self.inner.geocode_raw(country))

    def timezone_raw(self, lat: float, lon: float, timestamp: int) -> dict:
        return self._get(
            timezone_path(lat, lon, timestamp),
            lambda: self.inner.timezone_raw(lat, lon, timestamp),
        )

    def weather_raw(self, lat: float, lon: float, timestamp: int) -> dict:
        return self._get(
            weather_path(lat, lon, timestamp),
            lambda: self.inner.weather_raw(lat, lon, timestamp),
        )
