"""Shared fixtures: the bundled offline corpus and synthetic record factories."""

from __future__ import annotations

import socket
from pathlib import Path

import pytest

from epiforge.enrich import Enricher
from epiforge.epiweek import epiweek_to_date, utc_midnight_timestamp
from epiforge.ingest import dedupe, parse_report_file, validate_rows
from epiforge.providers import FixtureProvider
from epiforge.records import CleanRecord, EnrichedRecord, GeoPoint, WeatherObservation

CORPUS_DIR = Path(__file__).parent / "data" / "corpus"
REPORTS_DIR = CORPUS_DIR / "reports"
FIXTURES_DIR = CORPUS_DIR / "fixtures"

CORPUS_YEAR = 2014  # applies to the one report file without a Year column


@pytest.fixture(scope="session")
def corpus_reports() -> Path:
    return REPORTS_DIR


@pytest.fixture(scope="session")
def corpus_fixtures() -> Path:
    return FIXTURES_DIR


def ingest_corpus() -> tuple[list[CleanRecord], list]:
    """Parse + validate + dedupe the bundled corpus, as the CLI would."""
    records = []
    rejects = []
    for path in sorted(REPORTS_DIR.glob("*.csv")):
        rows, parse_rejects = parse_report_file(
            path.read_bytes(), CORPUS_YEAR, source_name=path.name
        )
        clean, row_rejects = validate_rows(rows)
        records.extend(clean)
        rejects.extend(parse_rejects)
        rejects.extend(row_rejects)
    return dedupe(records), rejects


@pytest.fixture(scope="session")
def corpus_clean() -> list[CleanRecord]:
    records, _ = ingest_corpus()
    return records


@pytest.fixture(scope="session")
def corpus_enriched(corpus_clean):
    enricher = Enricher(FixtureProvider(FIXTURES_DIR))
    enriched, excluded, paused = enricher.enrich_all(corpus_clean)
    assert not paused
    return enriched, excluded


def make_clean(
    country: str = "Cuba",
    year: int = 2015,
    week: int = 20,
    suspected: int = 100,
    confirmed: int = 10,
    **kwargs,
) -> CleanRecord:
    return CleanRecord(
        country=country,
        year=year,
        week=week,
        suspected=suspected,
        confirmed=confirmed,
        **kwargs,
    )


def make_enriched(
    country: str = "Cuba",
    year: int = 2015,
    week: int = 20,
    *,
    incidence_rate: float | None = 1.0,
    summary: str = "Clear",
    lat: float = 21.5218,
    lon: float = -77.7812,
    temperature: float = 80.0,
    dew_point: float = 70.0,
    humidity: float = 0.8,
    pressure: float = 1013.0,
    wind_speed: float = 5.0,
    **clean_kwargs,
) -> EnrichedRecord:
    base = make_clean(country, year, week, incidence_rate=incidence_rate, **clean_kwargs)
    return EnrichedRecord(
        base=base,
        geo=GeoPoint(lat=lat, lon=lon),
        timezone_id="America/Havana",
        timestamp=utc_midnight_timestamp(epiweek_to_date(year, week)),
        weather=WeatherObservation(
            temperature=temperature,
            summary=summary,
            dew_point=dew_point,
            humidity=humidity,
            pressure=pressure,
            wind_speed=wind_speed,
        ),
    )


@pytest.fixture
def block_network(monkeypatch):
    """Make any socket connection attempt fail loudly."""

    def explode(*args, **kwargs):
        raise AssertionError("network access attempted in offline mode")

    monkeypatch.setattr(socket.socket, "connect", explode)
    monkeypatch.setattr(socket, "create_connection", explode)
