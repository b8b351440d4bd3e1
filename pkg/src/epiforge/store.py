"""Line-delimited JSON persistence for clean and enriched datasets.

A `.ejsonl` file is a header line `{"schema_version":1,"units":{...}}`
followed by one record per line with keys in a fixed order, so files are
diffable and byte-stable across runs. Loading re-validates every record
invariant and reports the first violation with its line number.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .records import CleanRecord, EnrichedRecord, GeoPoint, WeatherObservation

SCHEMA_VERSION = 1

CLEAN_UNITS = {
    "incidence_rate": "cases_per_100k",
    "population_k": "thousands",
}

ENRICHED_UNITS = {
    **CLEAN_UNITS,
    "timestamp": "unix_seconds",
    "weather_temperature": "degF",
    "weather_dewPoint": "degF",
    "weather_humidity": "fraction",
    "weather_pressure": "hPa",
    "weather_windSpeed": "mph",
}

_CLEAN_KEYS = (
    "country",
    "year",
    "week",
    "suspected",
    "confirmed",
    "imported",
    "deaths",
    "incidence_rate",
    "population_k",
)

_ENRICHED_KEYS = _CLEAN_KEYS + (
    "lat",
    "lon",
    "timezone_id",
    "timestamp",
    "weather_temperature",
    "weather_summary",
    "weather_dewPoint",
    "weather_humidity",
    "weather_pressure",
    "weather_windSpeed",
)

Record = CleanRecord | EnrichedRecord


class StoreError(Exception):
    """Dataset file violates its contract (format, version, or invariants)."""


@dataclass
class DatasetFile:
    """In-memory dataset: records sorted by key, plus run-local exclusions.

    `exclusions` carries (key, code, detail) tuples between pipeline stages;
    they are reported in excluded.csv by the CLI and are not serialized into
    the .ejsonl file itself.
    """

    schema_version: int = SCHEMA_VERSION
    units: dict[str, str] = field(default_factory=dict)
    records: list[Record] = field(default_factory=list)
    exclusions: list[tuple[tuple[str, int, int], str, str]] = field(default_factory=list)


def record_to_dict(record: Record) -> dict:
    """Fixed-key-order dict for one record; absent optionals become null."""
    base = record.base if isinstance(record, EnrichedRecord) else record
    out: dict = {
        "country": base.country,
        "year": base.year,
        "week": base.week,
        "suspected": base.suspected,
        "confirmed": base.confirmed,
        "imported": base.imported,
        "deaths": base.deaths,
        "incidence_rate": base.incidence_rate,
        "population_k": base.population_k,
    }
    if isinstance(record, EnrichedRecord):
        out.update(
            {
                "lat": record.geo.lat,
                "lon": record.geo.lon,
                "timezone_id": record.timezone_id,
                "timestamp": record.timestamp,
                "weather_temperature": record.weather.temperature,
                "weather_summary": record.weather.summary,
                "weather_dewPoint": record.weather.dew_point,
                "weather_humidity": record.weather.humidity,
                "weather_pressure": record.weather.pressure,
                "weather_windSpeed": record.weather.wind_speed,
            }
        )
    return out


def record_from_dict(data: dict) -> Record:
    """Rebuild a record, re-running every construction-time invariant."""
    keys = tuple(data)
    if keys == _ENRICHED_KEYS:
        enriched = True
    elif keys == _CLEAN_KEYS:
        enriched = False
    else:
        raise StoreError(f"unexpected record keys: {list(keys)}")
    base = CleanRecord(
        country=data["country"],
        year=data["year"],
        week=data["week"],
        suspected=data["suspected"],
        confirmed=data["confirmed"],
        imported=data["imported"],
        deaths=data["deaths"],
        incidence_rate=data["incidence_rate"],
        population_k=data["population_k"],
    )
    if not enriched:
        return base
    return EnrichedRecord(
        base=base,
        geo=GeoPoint(lat=data["lat"], lon=data["lon"]),
        timezone_id=data["timezone_id"],
        timestamp=data["timestamp"],
        weather=WeatherObservation(
            temperature=data["weather_temperature"],
            summary=data["weather_summary"],
            dew_point=data["weather_dewPoint"],
            humidity=data["weather_humidity"],
            pressure=data["weather_pressure"],
            wind_speed=data["weather_windSpeed"],
        ),
    )


def _check_invariants(dataset: DatasetFile) -> None:
    previous_key = None
    for record in dataset.records:
        if previous_key is not None:
            if record.key == previous_key:
                raise StoreError(f"duplicate record key {record.key}")
            if record.key < previous_key:
                raise StoreError(f"records not sorted by key at {record.key}")
        previous_key = record.key


def _dumps(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def save(dataset: DatasetFile, path: str | Path) -> None:
    """Write a dataset atomically; refuses to write invariant-breaking data."""
    _check_invariants(dataset)
    path = Path(path)
    header = {"schema_version": dataset.schema_version, "units": dataset.units}
    lines = [_dumps(header)]
    lines.extend(_dumps(record_to_dict(record)) for record in dataset.records)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def load(path: str | Path) -> DatasetFile:
    """Read and fully validate a dataset file.

    Fails with the offending line number on malformed JSON, unexpected keys,
    invariant-breaking values, duplicate or out-of-order keys; fails with
    both version numbers when the schema version is unsupported.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise StoreError(f"{path}: cannot read dataset: {exc}") from exc
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise StoreError(f"{path}: missing header line")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise StoreError(f"{path}:1: malformed header: {exc}") from exc
    if not isinstance(header, dict) or "schema_version" not in header or "units" not in header:
        raise StoreError(f"{path}:1: header must carry schema_version and units")
    version = header["schema_version"]
    if version != SCHEMA_VERSION:
        raise StoreError(
            f"{path}: schema_version {version} unsupported (reader supports {SCHEMA_VERSION})"
        )

    records: list[Record] = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            raise StoreError(f"{path}:{line_no}: blank line inside dataset")
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise StoreError(f"{path}:{line_no}: malformed record: {exc}") from exc
        try:
            records.append(record_from_dict(data))
        except (StoreError, ValueError, TypeError) as exc:
            raise StoreError(f"{path}:{line_no}: invalid record: {exc}") from exc
    if records:
        kinds = {isinstance(record, EnrichedRecord) for record in records}
        if len(kinds) > 1:
            raise StoreError(f"{path}: mixes clean and enriched records")

    dataset = DatasetFile(schema_version=version, units=dict(header["units"]), records=records)
    try:
        _check_invariants(dataset)
    except StoreError as exc:
        raise StoreError(f"{path}: {exc}") from exc
    return dataset


def merge(base: DatasetFile, delta: DatasetFile) -> DatasetFile:
    """Union by record key with delta winning; restores sort and uniqueness.

    Exclusions merge the same way, except that a key with a record in the
    merged dataset cannot stay excluded (a later run enriched it).
    """
    if base.schema_version != delta.schema_version:
        raise StoreError(
            f"schema_version mismatch: base {base.schema_version}, delta {delta.schema_version}"
        )
    if base.units != delta.units:
        raise StoreError(f"unit-label mismatch: base {base.units}, delta {delta.units}")
    by_key: dict[tuple[str, int, int], Record] = {r.key: r for r in base.records}
    by_key.update({r.key: r for r in delta.records})
    exclusions: dict[tuple[str, int, int], tuple[str, str]] = {
        key: (code, detail) for key, code, detail in base.exclusions
    }
    exclusions.update({key: (code, detail) for key, code, detail in delta.exclusions})
    merged_exclusions = [
        (key, code, detail)
        for key, (code, detail) in sorted(exclusions.items())
        if key not in by_key
    ]
    return DatasetFile(
        schema_version=base.schema_version,
        units=dict(base.units),
        records=[by_key[key] for key in sorted(by_key)],
        exclusions=merged_exclusions,
    )
