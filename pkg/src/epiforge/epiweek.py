"""Epidemiological-week calendar arithmetic (ISO-8601 weeks, Monday-anchored)."""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta, timezone
from zoneinfo import ZoneInfo, ZoneInfoNotFoundError

_FIXED_OFFSET_RE = re.compile(r"^(?:UTC)?([+-])(\d{2}):(\d{2})$")


class WeekOutOfRangeError(ValueError):
    """Week number outside 1..iso_weeks_in_year(year)."""


class ZoneResolutionError(ValueError):
    """Timezone identifier is neither a known IANA zone nor a fixed offset."""


def iso_weeks_in_year(year: int) -> int:
    """Number of ISO-8601 weeks in `year`: 53 iff the year starts on a
    Thursday, or is a leap year starting on a Wednesday; 52 otherwise."""
    jan1 = date(year, 1, 1).isoweekday()
    leap = year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)
    if jan1 == 4 or (leap and jan1 == 3):
        return 53
    return 52


def epiweek_to_date(year: int, week: int) -> date:
    """Monday of ISO week `week` of ISO year `year` (week 1 contains Jan 4)."""
    if not 1 <= week <= iso_weeks_in_year(year):
        raise WeekOutOfRangeError(
            f"week {week} outside 1..{iso_weeks_in_year(year)} for year {year}"
        )
    return date.fromisocalendar(year, week, 1)


def utc_midnight_timestamp(day: date) -> int:
    """Seconds since epoch of 00:00:00 UTC on `day`."""
    return int(datetime.combine(day, time(0, 0), tzinfo=timezone.utc).timestamp())


def resolve_zone(zone: str) -> timezone | ZoneInfo:
    """Turn a zone identifier into a tzinfo.

    Accepts IANA names ("America/Havana") and fixed offsets written as
    "UTC+HH:MM", "UTC-HH:MM", "+HH:MM" or "-HH:MM".
    """
    match = _FIXED_OFFSET_RE.match(zone)
    if match:
        sign = 1 if match.group(1) == "+" else -1
        delta = timedelta(hours=int(match.group(2)), minutes=int(match.group(3)))
        return timezone(sign * delta)
    try:
        return ZoneInfo(zone)
    except (ZoneInfoNotFoundError, ValueError) as exc:
        raise ZoneResolutionError(f"unknown timezone identifier: {zone!r}") from exc


def local_midnight_timestamp(day: date, zone: str) -> int:
    """Seconds since epoch of 00:00:00 on `day` in `zone`.

    If a DST transition makes local midnight skipped or ambiguous, the
    earliest valid instant of that date is used (PEP 495 fold=0).
    """
    tz = resolve_zone(zone)
    local = datetime.combine(day, time(0, 0), tzinfo=tz)
    return int(local.timestamp())


@dataclass(frozen=True)
class EpiWeekDate:
    """A (year, week) pair resolved to its Monday and midnight timestamps.

    `local_timestamp` stays None until enrichment resolves the timezone.
    """

    year: int
    week: int
    date: date
    utc_timestamp: int
    local_timestamp: int | None = None

    @classmethod
    def for_week(cls, year: int, week: int) -> "EpiWeekDate":
        day = epiweek_to_date(year, week)
        return cls(year=year, week=week, date=day, utc_timestamp=utc_midnight_timestamp(day))
