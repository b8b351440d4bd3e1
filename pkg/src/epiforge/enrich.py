"""Enrich clean records with coordinates, timezone, local timestamp, weather.

The per-record chain is geocode -> timezone -> local midnight -> weather.
A record whose weather (or any earlier step) cannot be resolved is excluded
from the dataset with the provider's raw answer kept for audit, mirroring
how rows for some countries simply never got weather data. An exhausted
call budget is different: it pauses the whole run so it can resume later,
it never drops records.
"""

from __future__ import annotations

import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .epiweek import EpiWeekDate, ZoneResolutionError, local_midnight_timestamp
from .providers import BudgetExhausted, ProviderError
from .records import CleanRecord, EnrichedRecord, GeoPoint, WeatherObservation

logger = logging.getLogger(__name__)

_WEATHER_FIELDS = ("temperature", "summary", "dewPoint", "humidity", "pressure", "windSpeed")


class GeocodeFailure(ProviderError):
    """Geocoding returned no usable coordinates for a country."""


class TimezoneFailure(ProviderError):
    """Timezone resolution failed for a coordinate/timestamp pair."""


class WeatherUnavailable(ProviderError):
    """The weather provider had no observation for this place and time."""


@dataclass(frozen=True)
class Excluded:
    """A clean record dropped from the enriched dataset, and why."""

    country: str
    year: int
    week: int
    code: str
    detail: str

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.country, self.year, self.week)


def distinct_countries(records: list[CleanRecord]) -> list[str]:
    """Sorted unique country names, one geocode lookup each."""
    return sorted({record.country for record in records})


def _compact(body: dict) -> str:
    text = json.dumps(body, separators=(",", ":"), ensure_ascii=False, sort_keys=True)
    return text if len(text) <= 500 else text[:497] + "..."


class Enricher:
    """Runs the enrichment chain against any raw-body provider.

    Geocode results are memoized per country for the run (the provider's
    own cache handles persistence across runs). `workers` bounds optional
    record-level parallelism; results merge deterministically by key.
    """

    def __init__(self, provider, workers: int = 1):
        self.provider = provider
        self.workers = max(1, workers)
        self._geo_memo: dict[str, GeoPoint | GeocodeFailure] = {}
        self._memo_lock = threading.Lock()

    def geocode(self, country: str) -> GeoPoint:
        """Resolve a country to coordinates via `results[0].geometry.location`."""
        if not country:
            raise GeocodeFailure("empty country name")
        with self._memo_lock:
            memoized = self._geo_memo.get(country)
        if memoized is not None:
            if isinstance(memoized, GeocodeFailure):
                raise memoized
            return memoized
        try:
            point = self._geocode_uncached(country)
        except GeocodeFailure as failure:
            with self._memo_lock:
                self._geo_memo[country] = failure
            raise
        with self._memo_lock:
            self._geo_memo[country] = point
        return point

    def _geocode_uncached(self, country: str) -> GeoPoint:
        try:
            body = self.provider.geocode_raw(country)
        except BudgetExhausted:
            raise
        except ProviderError as exc:
            raise GeocodeFailure(f"{country}: {exc}") from exc
        try:
            location = body["results"][0]["geometry"]["location"]
            return GeoPoint(lat=float(location["lat"]), lon=float(location["lng"]))
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise GeocodeFailure(f"{country}: no coordinates in {_compact(body)}") from exc

    def resolve_timezone(self, geo: GeoPoint, timestamp: int) -> str:
        """Resolve the IANA zone id for a coordinate at a point in time."""
        try:
            body = self.provider.timezone_raw(geo.lat, geo.lon, timestamp)
        except BudgetExhausted:
            raise
        except ProviderError as exc:
            raise TimezoneFailure(f"({geo.lat}, {geo.lon}): {exc}") from exc
        zone = body.get("timeZoneId")
        if not zone or not isinstance(zone, str):
            raise TimezoneFailure(f"({geo.lat}, {geo.lon}): no timeZoneId in {_compact(body)}")
        return zone

    def fetch_weather(self, geo: GeoPoint, timestamp: int) -> WeatherObservation:
        """Fetch the `currently` block for a coordinate and unix timestamp.

        All six fields must be present; out-of-range values (humidity above
        1, non-positive pressure) raise ValueError rather than being stored.
        """
        if timestamp <= 0:
            raise ValueError(f"timestamp must be > 0, got {timestamp}")
        try:
            body = self.provider.weather_raw(geo.lat, geo.lon, timestamp)
        except BudgetExhausted:
            raise
        except ProviderError as exc:
            raise WeatherUnavailable(f"({geo.lat}, {geo.lon}, {timestamp}): {exc}") from exc
        currently = body.get("currently")
        if not isinstance(currently, dict) or any(
            name not in currently for name in _WEATHER_FIELDS
        ):
            raise WeatherUnavailable(
                f"({geo.lat}, {geo.lon}, {timestamp}): incomplete body {_compact(body)}"
            )
        return WeatherObservation(
            temperature=float(currently["temperature"]),
            summary=str(currently["summary"]),
            dew_point=float(currently["dewPoint"]),
            humidity=float(currently["humidity"]),
            pressure=float(currently["pressure"]),
            wind_speed=float(currently["windSpeed"]),
        )

    def enrich_record(self, record: CleanRecord) -> EnrichedRecord | Excluded:
        """Run the full chain for one record; lookup failures exclude it."""
        try:
            geo = self.geocode(record.country)
            week = EpiWeekDate.for_week(record.year, record.week)
            zone = self.resolve_timezone(geo, week.utc_timestamp)
            local_ts = local_midnight_timestamp(week.date, zone)
            weather = self.fetch_weather(geo, local_ts)
        except (GeocodeFailure, TimezoneFailure, WeatherUnavailable, ZoneResolutionError) as exc:
            excluded = Excluded(
                country=record.country,
                year=record.year,
                week=record.week,
                code=type(exc).__name__,
                detail=str(exc),
            )
            logger.info("excluded %s: %s", excluded.key, excluded.code)
            return excluded
        return EnrichedRecord(
            base=record, geo=geo, timezone_id=zone, timestamp=local_ts, weather=weather
        )

    def enrich_all(
        self, records: list[CleanRecord]
    ) -> tuple[list[EnrichedRecord], list[Excluded], bool]:
        """Enrich every record, geocoding the distinct countries first.

        Returns (enriched, excluded, paused). `paused` is True when a call
        budget ran out; records not reached are simply absent from both
        lists and a later run picks them up from the cache.
        """
        paused = False
        for country in distinct_countries(records):
            try:
                self.geocode(country)
            except GeocodeFailure:
                pass  # recorded in the memo; affected records excluded below
            except BudgetExhausted as exc:
                logger.warning("pausing: %s", exc)
                return [], [], True

        enriched: list[EnrichedRecord] = []
        excluded: list[Excluded] = []

        def collect(result: EnrichedRecord | Excluded) -> None:
            if isinstance(result, EnrichedRecord):
                enriched.append(result)
            else:
                excluded.append(result)

        if self.workers == 1:
            for record in records:
                try:
                    collect(self.enrich_record(record))
                except BudgetExhausted as exc:
                    logger.warning("pausing: %s", exc)
                    paused = True
                    break
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                futures = [pool.submit(self.enrich_record, record) for record in records]
                for future in futures:
                    try:
                        collect(future.result())
                    except BudgetExhausted as exc:
                        if not paused:
                            logger.warning("pausing: %s", exc)
                        paused = True

        enriched.sort(key=lambda r: r.key)
        excluded.sort(key=lambda e: e.key)
        return enriched, excluded, paused
