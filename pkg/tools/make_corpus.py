#!/usr/bin/env python3
"""Regenerate the bundled offline corpus under tests/data/corpus/.

Produces three weekly report CSVs (with realistic conversion dirt: garbage
tokens on country names, "Week"-wrapped week numbers, comma-separated
populations, and a handful of rows that must be rejected) plus the provider
fixture tree (geocode, timezone, weather) that enriches exactly 48 of the 50
clean records. Two designated rows (Peru and Venezuela, 2016 week 5) have no
weather fixture on purpose.

Everything is derived from fixed tables and per-row seeded RNGs, so the
output is byte-stable: re-running this script must produce no diff.
"""

from __future__ import annotations

import csv
import json
import random
from pathlib import Path

from epiforge.epiweek import epiweek_to_date, local_midnight_timestamp, utc_midnight_timestamp
from epiforge.providers import geocode_path, timezone_path, weather_path

CORPUS = Path(__file__).resolve().parents[1] / "tests" / "data" / "corpus"
REPORTS = CORPUS / "reports"
FIXTURES = CORPUS / "fixtures"

# Authored fixture truth: coordinates and zones the offline corpus resolves to.
COUNTRIES: dict[str, tuple[float, float, str]] = {
    "Brazil": (-14.2350, -51.9253, "America/Sao_Paulo"),
    "Colombia": (4.5709, -74.2973, "America/Bogota"),
    "Cuba": (21.5218, -77.7812, "America/Havana"),
    "Dominican Republic": (18.7357, -70.1627, "America/Santo_Domingo"),
    "Haiti": (18.9712, -72.2852, "America/Port-au-Prince"),
    "Jamaica": (18.1096, -77.2975, "America/Jamaica"),
    "Mexico": (23.6345, -102.5528, "America/Mexico_City"),
    "Nicaragua": (12.8654, -85.2072, "America/Managua"),
    "Peru": (-9.1900, -75.0152, "America/Lima"),
    "Venezuela": (6.4238, -66.5897, "America/Caracas"),
}

ALL = list(COUNTRIES)
HALF = ["Brazil", "Cuba", "Haiti", "Mexico", "Peru"]
OTHER_HALF = ["Colombia", "Dominican Republic", "Jamaica", "Nicaragua", "Venezuela"]

# (country, year, week) triples that make up the 50 clean records.
CLEAN_KEYS: list[tuple[str, int, int]] = (
    [(c, 2014, 35) for c in ALL]
    + [(c, 2014, 36) for c in HALF]
    + [(c, 2015, 20) for c in ALL]
    + [(c, 2015, 21) for c in OTHER_HALF]
    + [(c, 2016, 5) for c in ALL]
    + [(c, 2017, 15) for c in ALL]
)

# Rows whose weather fixture is deliberately missing (excluded at enrich time).
WEATHER_GAPS = {("Peru", 2016, 5), ("Venezuela", 2016, 5)}

SUMMARIES = (
    "Clear",
    "Partly Cloudy",
    "Mostly Cloudy",
    "Humid and Mostly Cloudy",
    "Humid and Overcast",
    "Light Rain",
    "Overcast",
)

DIRTY_COUNTRY = {
    ("Cuba", 2014, 35): "Cuba>",
    ("Dominican Republic", 2014, 35): "Dominican Republicg",
    ("Haiti", 2014, 35): " Haiti#^ ",
    ("Jamaica", 2014, 35): "Jamaica*",
    ("Mexico", 2014, 35): "Mexico(1)",
    ("Cuba", 2015, 20): "Cubag",
    ("Venezuela", 2015, 21): "Venezuela&",
}

WEEK_STYLES = ("{w}", "WEEK {w}", "Week {w}", "Week{w}")

# Key gets population "n/a" in the CSV cell (field becomes absent).
NA_POPULATION = ("Jamaica", 2015, 21)


def row_values(country: str, year: int, week: int) -> dict:
    rng = random.Random(f"{country}|{year}|{week}")
    suspected = rng.randint(50, 5000)
    confirmed = rng.randint(0, suspected // 3)
    imported = None if rng.random() < 0.15 else rng.randint(0, 20)
    deaths = None if rng.random() < 0.20 else rng.randint(0, 15)
    population_k = rng.randint(500, 50000)
    incidence = max(0.0, 100.0 * suspected / population_k + rng.uniform(-0.5, 0.5))
    weather_rng = random.Random(f"wx|{country}|{year}|{week}")
    return {
        "suspected": suspected,
        "confirmed": confirmed,
        "imported": imported,
        "deaths": deaths,
        "population_k": population_k,
        "incidence": round(incidence, 2),
        "summary": weather_rng.choice(SUMMARIES),
        "temperature": round(weather_rng.uniform(68.0, 95.0), 2),
        "dew_point": round(weather_rng.uniform(55.0, 78.0), 2),
        "humidity": round(weather_rng.uniform(0.45, 0.97), 2),
        "pressure": round(weather_rng.uniform(1004.0, 1022.0), 1),
        "wind_speed": round(weather_rng.uniform(1.0, 16.0), 2),
    }


def csv_cells(country: str, year: int, week: int, index: int, with_year: bool) -> dict[str, str]:
    values = row_values(country, year, week)
    population = values["population_k"]
    if (country, year, week) == NA_POPULATION:
        population_cell = "n/a"
    elif population >= 1000 and index % 2 == 0:
        population_cell = f"{population:,}"
    else:
        population_cell = str(population)
    cells = {
        "Country": DIRTY_COUNTRY.get((country, year, week), country),
        "Epidemiological Weeks": WEEK_STYLES[index % len(WEEK_STYLES)].format(w=week),
        "Suspected Cases": str(values["suspected"]),
        "Confirmed Cases": str(values["confirmed"]),
        "Imported Cases": "" if values["imported"] is None else str(values["imported"]),
        "Deaths": "" if values["deaths"] is None else str(values["deaths"]),
        "Incidence Rate": f"{values['incidence']:.2f}",
        "Population X 1000": population_cell,
    }
    if with_year:
        cells["Year"] = str(year)
    return cells


def write_report(name: str, header: list[str], canonical: dict[str, str], rows: list[dict]) -> None:
    """`header` lists display names; `canonical` maps them to contract names."""
    path = REPORTS / name
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["Pan American Health Organization"])
        writer.writerow(["Chikungunya weekly report"])
        writer.writerow(header)
        for row in rows:
            writer.writerow([row.get(canonical[name_], "") for name_ in header])
        writer.writerow([])
        writer.writerow(["Note: cumulative totals since epidemiological week 1"])


def build_reports() -> None:
    REPORTS.mkdir(parents=True, exist_ok=True)

    # File 1: 2014, canonical header order, year supplied via --year.
    header1 = [
        "Country",
        "Epidemiological Weeks",
        "Suspected Cases",
        "Confirmed Cases",
        "Imported Cases",
        "Deaths",
        "Incidence Rate",
        "Population X 1000",
    ]
    rows1 = []
    keys1 = [(c, 2014, 35) for c in ALL] + [(c, 2014, 36) for c in HALF]
    for i, (country, year, week) in enumerate(keys1):
        rows1.append(csv_cells(country, year, week, i, with_year=False))
    # Rejected rows: out-of-range week, missing suspected, empty country.
    rows1.insert(
        4,
        {
            "Country": "Bolivia",
            "Epidemiological Weeks": "WEEK 60",
            "Suspected Cases": "120",
            "Confirmed Cases": "8",
            "Incidence Rate": "1.10",
            "Population X 1000": "11000",
        },
    )
    rows1.insert(
        9,
        {
            "Country": "Ecuador",
            "Epidemiological Weeks": "Week 35",
            "Suspected Cases": "",
            "Confirmed Cases": "31",
            "Incidence Rate": "0.44",
            "Population X 1000": "16000",
        },
    )
    rows1.append(
        {
            "Country": "#^",
            "Epidemiological Weeks": "35",
            "Suspected Cases": "77",
            "Confirmed Cases": "5",
            "Incidence Rate": "0.20",
            "Population X 1000": "900",
        }
    )
    write_report("paho_2014_w35.csv", header1, {h: h for h in header1}, rows1)

    # File 2: 2015, Year column first, lowercase header cells.
    header2 = [
        "year",
        "country",
        "epidemiological weeks",
        "suspected cases",
        "confirmed cases",
        "imported cases",
        "deaths",
        "incidence rate",
        "population x 1000",
    ]
    canonical2 = {
        "year": "Year",
        "country": "Country",
        "epidemiological weeks": "Epidemiological Weeks",
        "suspected cases": "Suspected Cases",
        "confirmed cases": "Confirmed Cases",
        "imported cases": "Imported Cases",
        "deaths": "Deaths",
        "incidence rate": "Incidence Rate",
        "population x 1000": "Population X 1000",
    }
    rows2 = []
    keys2 = [(c, 2015, 20) for c in ALL] + [(c, 2015, 21) for c in OTHER_HALF]
    for i, (country, year, week) in enumerate(keys2):
        rows2.append(csv_cells(country, year, week, i, with_year=True))
    rows2.insert(
        6,
        {
            "Year": "2015",
            "Country": "Guatemala",
            "Epidemiological Weeks": "Week 20",
            "Suspected Cases": "430",
            "Confirmed Cases": "",
            "Incidence Rate": "2.60",
            "Population X 1000": "16300",
        },
    )
    rows2.insert(
        12,
        {
            "Year": "2015",
            "Country": "Honduras",
            "Epidemiological Weeks": "",
            "Suspected Cases": "210",
            "Confirmed Cases": "12",
            "Incidence Rate": "2.30",
            "Population X 1000": "9100",
        },
    )
    write_report("paho_2015.csv", header2, canonical2, rows2)

    # File 3: 2016/2017 via Year column, shouting header, plus one 2015
    # correction row that must win dedupe over paho_2015.csv.
    header3 = [
        "Country",
        "Year",
        "EPIDEMIOLOGICAL WEEKS",
        "SUSPECTED CASES",
        "CONFIRMED CASES",
        "IMPORTED CASES",
        "DEATHS",
        "INCIDENCE RATE",
        "POPULATION X 1000",
    ]
    canonical3 = {
        "Country": "Country",
        "Year": "Year",
        "EPIDEMIOLOGICAL WEEKS": "Epidemiological Weeks",
        "SUSPECTED CASES": "Suspected Cases",
        "CONFIRMED CASES": "Confirmed Cases",
        "IMPORTED CASES": "Imported Cases",
        "DEATHS": "Deaths",
        "INCIDENCE RATE": "Incidence Rate",
        "POPULATION X 1000": "Population X 1000",
    }
    rows3 = []
    keys3 = [(c, 2016, 5) for c in ALL] + [(c, 2017, 15) for c in ALL]
    for i, (country, year, week) in enumerate(keys3):
        rows3.append(csv_cells(country, year, week, i, with_year=True))
    correction = csv_cells("Cuba", 2015, 20, 1, with_year=True)
    correction["Country"] = "Cuba"
    correction["Suspected Cases"] = str(corrected_cuba_suspected())
    rows3.insert(3, correction)
    rows3.insert(
        15,
        {
            "Year": "2017",
            "Country": "Paraguay",
            "Epidemiological Weeks": "Week 15",
            "Suspected Cases": "12a4",
            "Confirmed Cases": "9",
            "Incidence Rate": "0.90",
            "Population X 1000": "6900",
        },
    )
    write_report("paho_2016_2017.csv", header3, canonical3, rows3)


def corrected_cuba_suspected() -> int:
    # The correction report revises Cuba's 2015-w20 suspected count upward.
    return row_values("Cuba", 2015, 20)["suspected"] + 111


def dump(path: Path, body: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(body, separators=(",", ":"), sort_keys=True) + "\n", "utf-8")


def build_fixtures() -> None:
    for country, (lat, lon, _zone) in COUNTRIES.items():
        dump(
            FIXTURES / geocode_path(country),
            {
                "results": [{"geometry": {"location": {"lat": lat, "lng": lon}}}],
                "status": "OK",
            },
        )

    for country, year, week in CLEAN_KEYS:
        lat, lon, zone = COUNTRIES[country]
        monday = epiweek_to_date(year, week)
        utc_ts = utc_midnight_timestamp(monday)
        local_ts = local_midnight_timestamp(monday, zone)
        dump(
            FIXTURES / timezone_path(lat, lon, utc_ts),
            {"dstOffset": 0, "rawOffset": utc_ts - local_ts, "status": "OK",
             "timeZoneId": zone},
        )
        if (country, year, week) in WEATHER_GAPS:
            continue
        values = row_values(country, year, week)
        dump(
            FIXTURES / weather_path(lat, lon, local_ts),
            {
                "latitude": lat,
                "longitude": lon,
                "timezone": zone,
                "currently": {
                    "time": local_ts,
                    "summary": values["summary"],
                    "temperature": values["temperature"],
                    "dewPoint": values["dew_point"],
                    "humidity": values["humidity"],
                    "pressure": values["pressure"],
                    "windSpeed": values["wind_speed"],
                },
            },
        )


def main() -> None:
    build_reports()
    build_fixtures()
    n_weather = len(CLEAN_KEYS) - len(WEATHER_GAPS)
    print(f"corpus written to {CORPUS}")
    print(f"  reports: 3 files, {len(CLEAN_KEYS)} clean keys expected after dedupe")
    print(f"  fixtures: {len(COUNTRIES)} geocode, {len(CLEAN_KEYS)} timezone, {n_weather} weather")


if __name__ == "__main__":
    main()
