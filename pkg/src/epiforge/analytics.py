"""Aggregate series and actual-vs-scored comparison tables, as plot-ready CSV."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .model import IncidenceRegressor
from .records import CleanRecord, EnrichedRecord


def _base(record: CleanRecord | EnrichedRecord) -> CleanRecord:
    return record.base if isinstance(record, EnrichedRecord) else record


@dataclass(frozen=True)
class YearAggregate:
    year: int
    suspected_total: int
    confirmed_total: int
    incidence_sum: float
    record_count: int


@dataclass(frozen=True)
class SummaryAggregate:
    weather_summary: str
    record_count: int
    incidence_sum: float


@dataclass(frozen=True)
class ComparisonRow:
    country: str
    year: int
    week: int
    actual: float
    scored: float

    @property
    def residual(self) -> float:
        return self.actual - self.scored


def aggregate_by_year(
    records: Sequence[CleanRecord | EnrichedRecord],
) -> list[YearAggregate]:
    """One aggregate per year present, sorted by year.

    Absent optional incidence rates contribute zero to the sum but the
    record still counts.
    """
    years: dict[int, list[CleanRecord]] = {}
    for record in records:
        base = _base(record)
        years.setdefault(base.year, []).append(base)
    return [
        YearAggregate(
            year=year,
            suspected_total=sum(r.suspected for r in group),
            confirmed_total=sum(r.confirmed for r in group),
            incidence_sum=sum(r.incidence_rate or 0.0 for r in group),
            record_count=len(group),
        )
        for year, group in sorted(years.items())
    ]


def aggregate_by_summary(records: Sequence[EnrichedRecord]) -> list[SummaryAggregate]:
    """One aggregate per distinct weather summary, most frequent first."""
    groups: dict[str, list[EnrichedRecord]] = {}
    for record in records:
        groups.setdefault(record.weather.summary, []).append(record)
    aggregates = [
        SummaryAggregate(
            weather_summary=summary,
            record_count=len(group),
            incidence_sum=sum(r.base.incidence_rate or 0.0 for r in group),
        )
        for summary, group in groups.items()
    ]
    aggregates.sort(key=lambda a: (-a.record_count, a.weather_summary))
    return aggregates


def comparison_series(
    records: Sequence[EnrichedRecord], model: IncidenceRegressor
) -> list[ComparisonRow]:
    """Actual vs scored incidence rate per record, sorted by key.

    Callers pass records that carry a target; the scored value is exactly
    the model's prediction for that record.
    """
    ordered = sorted(records, key=lambda r: r.key)
    missing = [r.key for r in ordered if r.base.incidence_rate is None]
    if missing:
        raise ValueError(f"records without a target cannot be compared: {missing[:3]}")
    scores = model.predict(ordered)
    return [
        ComparisonRow(
            country=record.base.country,
            year=record.base.year,
            week=record.base.week,
            actual=float(record.base.incidence_rate),
            scored=float(score),
        )
        for record, score in zip(ordered, scores)
    ]


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_year_csv(aggregates: list[YearAggregate], path: str | Path) -> None:
    _write_csv(
        Path(path),
        ["year", "suspected_total", "confirmed_total", "incidence_sum", "record_count"],
        [
            [a.year, a.suspected_total, a.confirmed_total, a.incidence_sum, a.record_count]
            for a in aggregates
        ],
    )


def write_summary_csv(aggregates: list[SummaryAggregate], path: str | Path) -> None:
    _write_csv(
        Path(path),
        ["weather_summary", "record_count", "incidence_sum"],
        [[a.weather_summary, a.record_count, a.incidence_sum] for a in aggregates],
    )


def write_comparison_csvs(rows: list[ComparisonRow], out_dir: str | Path) -> list[Path]:
    """Write one compare_<year>.csv per year present; returns the paths."""
    out_dir = Path(out_dir)
    by_year: dict[int, list[ComparisonRow]] = {}
    for row in rows:
        by_year.setdefault(row.year, []).append(row)
    paths = []
    for year, group in sorted(by_year.items()):
        path = out_dir / f"compare_{year}.csv"
        _write_csv(
            path,
            ["country", "year", "week", "actual", "scored", "residual"],
            [[r.country, r.year, r.week, r.actual, r.scored, r.residual] for r in group],
        )
        paths.append(path)
    return paths


def render_charts(
    year_aggregates: list[YearAggregate],
    summary_aggregates: list[SummaryAggregate],
    comparisons: list[ComparisonRow],
    out_dir: str | Path,
) -> list[Path]:
    """Optional static PNG charts of the aggregate and comparison series."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths: list[Path] = []

    def bar_chart(name: str, labels: list, values: list, title: str) -> None:
        fig, ax = plt.subplots(figsize=(8, 4.5))
        ax.bar(range(len(values)), values)
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels([str(label) for label in labels], rotation=30, ha="right")
        ax.set_title(title)
        fig.tight_layout()
        path = out_dir / name
        fig.savefig(path)
        plt.close(fig)
        paths.append(path)

    years = [a.year for a in year_aggregates]
    bar_chart(
        "chart_suspected_by_year.png",
        years,
        [a.suspected_total for a in year_aggregates],
        "Suspected cases by year",
    )
    bar_chart(
        "chart_confirmed_by_year.png",
        years,
        [a.confirmed_total for a in year_aggregates],
        "Confirmed cases by year",
    )
    bar_chart(
        "chart_incidence_by_year.png",
        years,
        [a.incidence_sum for a in year_aggregates],
        "Sum of incidence rate by year",
    )
    bar_chart(
        "chart_incidence_by_summary.png",
        [a.weather_summary for a in summary_aggregates],
        [a.incidence_sum for a in summary_aggregates],
        "Incidence rate by weather summary",
    )

    by_year: dict[int, list[ComparisonRow]] = {}
    for row in comparisons:
        by_year.setdefault(row.year, []).append(row)
    for year, group in sorted(by_year.items()):
        fig, ax = plt.subplots(figsize=(8, 4.5))
        xs = range(len(group))
        ax.plot(xs, [r.actual for r in group], label="actual")
        ax.plot(xs, [r.scored for r in group], label="scored")
        ax.set_title(f"Actual vs scored incidence rate, {year}")
        ax.legend()
        fig.tight_layout()
        path = out_dir / f"chart_compare_{year}.png"
        fig.savefig(path)
        plt.close(fig)
        paths.append(path)
    return paths
