"""Report-table ingestion: parse CSV report files, clean strings, validate rows.

The cleaning rules mirror the quirks of machine-converted weekly report
tables: garbage tokens glued to country names, week numbers wrapped in
"Week"/"WEEK" text in assorted casings, and thousands separators inside
numeric cells. Rows missing week, suspected or confirmed counts are
rejected with an auditable reason instead of being silently dropped.
"""

from __future__ import annotations

import csv
import io
import re

from .epiweek import iso_weeks_in_year
from .records import CleanRecord, RawReportRow, RejectCode, RejectReason

# Removed everywhere in a country cell, in this order, until a fixed point
# is reached (removal can expose new tokens, e.g. "((1)1)" -> "(1)").
_GARBAGE_TOKENS = (">", "*", "(1)", "(2)", "(^)", "()", "#", "^", "?", "$", "/", "&")

_INT_RE = re.compile(r"^\d+$")
_RATE_RE = re.compile(r"^\d+(\.\d+)?$")
_ALPHA_RE = re.compile(r"[A-Za-z]")

REQUIRED_COLUMNS = (
    "Country",
    "Epidemiological Weeks",
    "Suspected Cases",
    "Confirmed Cases",
    "Imported Cases",
    "Deaths",
    "Incidence Rate",
    "Population X 1000",
)
YEAR_COLUMN = "Year"

DEFAULT_YEAR_RANGE = (2013, 2017)


class IngestError(Exception):
    """Fatal, file-level ingestion failure (unreadable file, bad header)."""


def clean_country_name(raw: str) -> str:
    """Strip conversion garbage from a country cell.

    Repeats (token removal, whitespace trim, trailing-"g" strip) until the
    string stops changing, which makes the function idempotent. Returns ""
    when nothing survives; the caller turns that into an EmptyCountry reject.
    """
    name = raw
    while True:
        previous = name
        for token in _GARBAGE_TOKENS:
            name = name.replace(token, "")
        name = name.strip().rstrip("g")
        if name == previous:
            return name


def normalize_week(raw: str) -> int:
    """Parse a week cell like "WEEK 23", "Week52" or "7" to its number.

    Removes the literal "WEEK"/"Week" markers, then any remaining alphabetic
    characters regardless of case, trims, and requires a plain base-10
    integer. Raises ValueError when no such integer remains.
    """
    text = raw.replace("WEEK", "").replace("Week", "")
    text = _ALPHA_RE.sub("", text).strip()
    if not _INT_RE.match(text):
        raise ValueError(f"not a week number: {raw!r}")
    return int(text)


def normalize_count(raw: str) -> int:
    """Parse a non-negative integer cell, tolerating surrounding whitespace
    and comma thousands separators only."""
    text = raw.strip().replace(",", "")
    if not _INT_RE.match(text):
        raise ValueError(f"not a non-negative integer: {raw!r}")
    return int(text)


def normalize_rate(raw: str) -> float:
    """Parse a non-negative decimal cell (same tolerance as normalize_count)."""
    text = raw.strip().replace(",", "")
    if not _RATE_RE.match(text):
        raise ValueError(f"not a non-negative decimal: {raw!r}")
    return float(text)


def normalize_population(raw: str) -> int | None:
    """Parse a "Population X 1000" cell; unparseable or non-positive values
    mean the optional field is absent."""
    try:
        value = normalize_count(raw)
    except ValueError:
        return None
    return value if value > 0 else None


def _optional_count(raw: str) -> int | None:
    if not raw.strip():
        return None
    try:
        return normalize_count(raw)
    except ValueError:
        return None


def _optional_rate(raw: str) -> float | None:
    if not raw.strip():
        return None
    try:
        return normalize_rate(raw)
    except ValueError:
        return None


def validate_row(row: RawReportRow) -> CleanRecord | RejectReason:
    """Turn a raw row into a CleanRecord, or explain why it cannot be one.

    Required fields are checked in order (week, suspected, confirmed,
    country); the first failure wins so every rejected row carries exactly
    one reason. Optional fields that fail to parse become absent, never
    rejections.
    """

    def reject(code: RejectCode, detail: str) -> RejectReason:
        return RejectReason(row.source_file, row.source_line, code, detail)

    if not row.epi_week_raw.strip():
        return reject(RejectCode.MISSING_WEEK, "Epidemiological Weeks is empty")
    try:
        week = normalize_week(row.epi_week_raw)
    except ValueError:
        return reject(
            RejectCode.UNPARSEABLE_NUMBER,
            f"Epidemiological Weeks: {row.epi_week_raw!r}",
        )
    weeks_in_year = iso_weeks_in_year(row.year)
    if not 1 <= week <= weeks_in_year:
        return reject(
            RejectCode.WEEK_OUT_OF_RANGE,
            f"week {week} outside 1..{weeks_in_year} for year {row.year}",
        )

    if not row.suspected_raw.strip():
        return reject(RejectCode.MISSING_SUSPECTED, "Suspected Cases is empty")
    try:
        suspected = normalize_count(row.suspected_raw)
    except ValueError:
        return reject(RejectCode.UNPARSEABLE_NUMBER, f"Suspected Cases: {row.suspected_raw!r}")

    if not row.confirmed_raw.strip():
        return reject(RejectCode.MISSING_CONFIRMED, "Confirmed Cases is empty")
    try:
        confirmed = normalize_count(row.confirmed_raw)
    except ValueError:
        return reject(RejectCode.UNPARSEABLE_NUMBER, f"Confirmed Cases: {row.confirmed_raw!r}")

    country = clean_country_name(row.country_raw)
    if not country:
        return reject(RejectCode.EMPTY_COUNTRY, f"Country: {row.country_raw!r}")

    return CleanRecord(
        country=country,
        year=row.year,
        week=week,
        suspected=suspected,
        confirmed=confirmed,
        imported=_optional_count(row.imported_raw),
        deaths=_optional_count(row.deaths_raw),
        incidence_rate=_optional_rate(row.incidence_raw),
        population_k=normalize_population(row.population_k_raw),
    )


def validate_rows(
    rows: list[RawReportRow],
) -> tuple[list[CleanRecord], list[RejectReason]]:
    """Validate rows in order, splitting them into records and rejections."""
    records: list[CleanRecord] = []
    rejects: list[RejectReason] = []
    for row in rows:
        result = validate_row(row)
        if isinstance(result, CleanRecord):
            records.append(result)
        else:
            rejects.append(result)
    return records, rejects


def dedupe(records: list[CleanRecord]) -> list[CleanRecord]:
    """Keep one record per (country, year, week), the last occurrence winning.

    The ingest driver feeds files in lexicographic filename order, so a later
    (more recent) report's correction replaces the earlier figure. Output is
    sorted by key and the function is idempotent.
    """
    by_key: dict[tuple[str, int, int], CleanRecord] = {}
    for record in records:
        by_key[record.key] = record
    return [by_key[key] for key in sorted(by_key)]


def _normalize_header_cell(cell: str) -> str:
    return re.sub(r"\s+", " ", cell.strip()).lower()


_CANONICAL = {_normalize_header_cell(name): name for name in REQUIRED_COLUMNS + (YEAR_COLUMN,)}


def _is_note_row(cells: list[str]) -> bool:
    # Organization names, notes and footers show up as rows with at most one
    # non-empty cell; real data rows always populate several columns.
    return sum(1 for cell in cells if cell.strip()) <= 1


def _match_header(cells: list[str], source_name: str) -> dict[str, int]:
    columns: dict[str, int] = {}
    for index, cell in enumerate(cells):
        if not cell.strip():
            continue
        canonical = _CANONICAL.get(_normalize_header_cell(cell))
        if canonical is None or canonical in columns:
            raise IngestError(
                f"{source_name}: unrecognized header column {cell!r}; expected exactly "
                f"{', '.join(REQUIRED_COLUMNS)} (plus optional {YEAR_COLUMN}), "
                "order- and case-insensitive"
            )
        columns[canonical] = index
    missing = [name for name in REQUIRED_COLUMNS if name not in columns]
    if missing:
        raise IngestError(f"{source_name}: header is missing columns: {', '.join(missing)}")
    return columns


def parse_report_file(
    data: bytes,
    year: int | None,
    *,
    source_name: str,
    year_range: tuple[int, int] = DEFAULT_YEAR_RANGE,
) -> tuple[list[RawReportRow], list[RejectReason]]:
    """Parse one report CSV into raw rows plus parse-level rejections.

    `year` applies to every row unless the file carries a Year column, whose
    per-row value then takes precedence. Note and footer lines (at most one
    non-empty cell) are skipped; every retained data line becomes either a
    RawReportRow or a RejectReason, never both, never neither.
    """
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise IngestError(f"{source_name}: not valid UTF-8: {exc}") from exc
    if year is not None and not year_range[0] <= year <= year_range[1]:
        raise IngestError(
            f"{source_name}: year {year} outside configured range "
            f"{year_range[0]}..{year_range[1]}"
        )

    reader = csv.reader(io.StringIO(text, newline=""))
    columns: dict[str, int] | None = None
    rows: list[RawReportRow] = []
    rejects: list[RejectReason] = []

    for cells in reader:
        line_num = reader.line_num
        if _is_note_row(cells):
            continue
        if columns is None:
            columns = _match_header(cells, source_name)
            if YEAR_COLUMN not in columns and year is None:
                raise IngestError(
                    f"{source_name}: no Year column and no per-file year was supplied"
                )
            continue

        def cell(name: str) -> str:
            index = columns[name]
            return cells[index] if index < len(cells) else ""

        row_year = year
        if YEAR_COLUMN in columns and cell(YEAR_COLUMN).strip():
            raw_year = cell(YEAR_COLUMN)
            try:
                row_year = normalize_count(raw_year)
            except ValueError:
                rejects.append(
                    RejectReason(
                        source_name,
                        line_num,
                        RejectCode.UNPARSEABLE_NUMBER,
                        f"Year: {raw_year!r}",
                    )
                )
                continue
        if row_year is None:
            rejects.append(
                RejectReason(
                    source_name, line_num, RejectCode.UNPARSEABLE_NUMBER, "Year: empty"
                )
            )
            continue
        if not year_range[0] <= row_year <= year_range[1]:
            rejects.append(
                RejectReason(
                    source_name,
                    line_num,
                    RejectCode.UNPARSEABLE_NUMBER,
                    f"year {row_year} outside configured range "
                    f"{year_range[0]}..{year_range[1]}",
                )
            )
            continue

        rows.append(
            RawReportRow(
                country_raw=cell("Country"),
                epi_week_raw=cell("Epidemiological Weeks"),
                suspected_raw=cell("Suspected Cases"),
                confirmed_raw=cell("Confirmed Cases"),
                imported_raw=cell("Imported Cases"),
                deaths_raw=cell("Deaths"),
                incidence_raw=cell("Incidence Rate"),
                population_k_raw=cell("Population X 1000"),
                year=row_year,
                source_file=source_name,
                source_line=line_num,
            )
        )

    if columns is None:
        raise IngestError(
            f"{source_name}: no header row found; expected columns "
            f"{', '.join(REQUIRED_COLUMNS)}"
        )
    return rows, rejects
