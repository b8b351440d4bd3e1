"""Domain records passed between pipeline stages.

Construction is validation: a record object that exists satisfies its
invariants, so downstream stages never re-check field bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .epiweek import iso_weeks_in_year


class RejectCode(str, Enum):
    """Why an input row was dropped during ingestion."""

    MISSING_WEEK = "MissingWeek"
    MISSING_SUSPECTED = "MissingSuspected"
    MISSING_CONFIRMED = "MissingConfirmed"
    UNPARSEABLE_NUMBER = "UnparseableNumber"
    EMPTY_COUNTRY = "EmptyCountry"
    WEEK_OUT_OF_RANGE = "WeekOutOfRange"


@dataclass(frozen=True)
class RawReportRow:
    """One uncleaned table row, exactly as read from a report file."""

    country_raw: str
    epi_week_raw: str
    suspected_raw: str
    confirmed_raw: str
    imported_raw: str
    deaths_raw: str
    incidence_raw: str
    population_k_raw: str
    year: int
    source_file: str
    source_line: int

    def __post_init__(self) -> None:
        if not self.source_file:
            raise ValueError("source_file must be populated")
        if self.source_line < 1:
            raise ValueError(f"source_line must be >= 1, got {self.source_line}")


@dataclass(frozen=True)
class RejectReason:
    """Audit entry produced for every input row that is dropped."""

    source_file: str
    source_line: int
    code: RejectCode
    detail: str


@dataclass(frozen=True)
class CleanRecord:
    """Validated, normalized surveillance record keyed by (country, year, week).

    ``suspected`` and ``confirmed`` are mandatory; the remaining counts and
    rates are optional and stay ``None`` when the source row had no usable
    value. ``incidence_rate`` is cases per 100,000, ``population_k`` is
    population in thousands.
    """

    country: str
    year: int
    week: int
    suspected: int
    confirmed: int
    imported: int | None = None
    deaths: int | None = None
    incidence_rate: float | None = None
    population_k: int | None = None

    def __post_init__(self) -> None:
        if not self.country or self.country != self.country.strip():
            raise ValueError(f"country must be nonempty and trimmed: {self.country!r}")
        weeks = iso_weeks_in_year(self.year)
        if not 1 <= self.week <= weeks:
            raise ValueError(f"week {self.week} outside 1..{weeks} for year {self.year}")
        if self.suspected < 0:
            raise ValueError(f"suspected must be >= 0, got {self.suspected}")
        if self.confirmed < 0:
            raise ValueError(f"confirmed must be >= 0, got {self.confirmed}")
        if self.imported is not None and self.imported < 0:
            raise ValueError(f"imported must be >= 0, got {self.imported}")
        if self.deaths is not None and self.deaths < 0:
            raise ValueError(f"deaths must be >= 0, got {self.deaths}")
        if self.incidence_rate is not None and not (
            math.isfinite(self.incidence_rate) and self.incidence_rate >= 0
        ):
            raise ValueError(f"incidence_rate must be finite and >= 0, got {self.incidence_rate}")
        if self.population_k is not None and self.population_k <= 0:
            raise ValueError(f"population_k must be > 0, got {self.population_k}")

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.country, self.year, self.week)


@dataclass(frozen=True)
class GeoPoint:
    """Latitude/longitude in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and -90.0 <= self.lat <= 90.0):
            raise ValueError(f"lat out of range [-90, 90]: {self.lat!r}")
        if not (math.isfinite(self.lon) and -180.0 <= self.lon <= 180.0):
            raise ValueError(f"lon out of range [-180, 180]: {self.lon!r}")


@dataclass(frozen=True)
class WeatherObservation:
    """Historical weather at one place and instant, in provider units.

    Units follow the provider defaults and are recorded in dataset metadata:
    temperature and dew_point in degF, humidity as a 0..1 fraction, pressure
    in hPa, wind_speed in miles/hour.
    """

    temperature: float
    summary: str
    dew_point: float
    humidity: float
    pressure: float
    wind_speed: float

    def __post_init__(self) -> None:
        for name in ("temperature", "dew_point", "humidity", "pressure", "wind_speed"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValueError(f"{name} must be a finite number, got {value!r}")
        if not 0.0 <= self.humidity <= 1.0:
            raise ValueError(f"humidity outside [0, 1]: {self.humidity!r}")
        if self.pressure <= 0:
            raise ValueError(f"pressure must be > 0, got {self.pressure!r}")


@dataclass(frozen=True)
class EnrichedRecord:
    """CleanRecord plus geolocation, timezone, local timestamp and weather.

    All components are mandatory: a record that failed any lookup is excluded
    from the dataset rather than stored with holes. ``timestamp`` is the local
    midnight of the epidemiological week's Monday, in seconds since epoch.
    """

    base: CleanRecord
    geo: GeoPoint
    timezone_id: str
    timestamp: int
    weather: WeatherObservation

    def __post_init__(self) -> None:
        if not self.timezone_id:
            raise ValueError("timezone_id must be nonempty")

    @property
    def key(self) -> tuple[str, int, int]:
        return self.base.key
