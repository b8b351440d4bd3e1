"""Command-line pipeline: ingest -> enrich -> train -> evaluate -> report.

Stages communicate only through files under the output directory, so each
can be re-run independently and an enrichment run interrupted by a provider
budget resumes from its cache. Exit codes: 0 success, 1 fatal config or I/O
error, 2 empty result, 3 paused on an exhausted call budget.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import analytics
from .enrich import Enricher
from .ingest import DEFAULT_YEAR_RANGE, IngestError, dedupe, parse_report_file, validate_rows
from .model import (
    DEFAULT_RIDGE_LAMBDA,
    IncidenceRegressor,
    evaluate,
    load_model,
    save_model,
    split_records,
    targets,
)
from .providers import (
    BudgetedProvider,
    CachingProvider,
    FixtureProvider,
    HttpProvider,
    default_budgets,
)
from .store import CLEAN_UNITS, ENRICHED_UNITS, DatasetFile, StoreError, load, merge, save

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_EMPTY = 2
EXIT_BUDGET = 3

CLEAN_FILE = "clean.ejsonl"
REJECTS_FILE = "rejects.csv"
ENRICHED_FILE = "enriched.ejsonl"
EXCLUDED_FILE = "excluded.csv"
MODEL_FILE = "model.json"
METRICS_FILE = "metrics.json"

GEOCODE_KEY_ENV = "GEOCODE_API_KEY"
TIMEZONE_KEY_ENV = "TIMEZONE_API_KEY"
WEATHER_KEY_ENV = "WEATHER_API_KEY"
CACHE_DIR_ENV = "EPIFORGE_CACHE_DIR"


class CliError(Exception):
    """Configuration or I/O problem that should abort with exit code 1."""


@dataclass
class PipelineConfig:
    """Everything a stage needs, resolved up front."""

    input_dir: Path | None = None
    output_dir: Path = Path("out")
    offline: bool = False
    fixtures_dir: Path | None = None
    cache_dir: Path | None = None
    year: int | None = None
    year_range: tuple[int, int] = DEFAULT_YEAR_RANGE
    test_fraction: float = 0.25
    seed: int = 1
    ridge_lambda: float = DEFAULT_RIDGE_LAMBDA
    budget_geocode: int = 1000
    budget_timezone: int = 1000
    budget_weather: int = 1000
    score_all: bool = False
    charts: bool = False
    workers: int = 1

    def __post_init__(self) -> None:
        if self.cache_dir is None:
            env_dir = os.environ.get(CACHE_DIR_ENV)
            self.cache_dir = Path(env_dir) if env_dir else self.output_dir / "cache"
        self.output_dir = self.output_dir.resolve()
        self.cache_dir = Path(self.cache_dir).resolve()
        if self.input_dir is not None:
            self.input_dir = self.input_dir.resolve()
        if self.fixtures_dir is not None:
            self.fixtures_dir = self.fixtures_dir.resolve()

    def path(self, name: str) -> Path:
        return self.output_dir / name


def build_provider(config: PipelineConfig):
    """Assemble the provider stack: cache over budget over fixtures or HTTP."""
    if config.offline:
        if config.fixtures_dir is None or not config.fixtures_dir.is_dir():
            raise CliError(
                f"--offline needs --fixtures pointing at a fixture directory, "
                f"got {config.fixtures_dir}"
            )
        inner = FixtureProvider(config.fixtures_dir)
    else:
        keys = {}
        missing = []
        for env_name in (GEOCODE_KEY_ENV, TIMEZONE_KEY_ENV, WEATHER_KEY_ENV):
            value = os.environ.get(env_name)
            if value:
                keys[env_name] = value
            else:
                missing.append(env_name)
        if missing:
            raise CliError(f"missing API keys in environment: {', '.join(missing)}")
        inner = HttpProvider(
            geocode_api_key=keys[GEOCODE_KEY_ENV],
            timezone_api_key=keys[TIMEZONE_KEY_ENV],
            weather_api_key=keys[WEATHER_KEY_ENV],
        )
    budgets = default_budgets(
        geocode=config.budget_geocode,
        timezone=config.budget_timezone,
        weather=config.budget_weather,
    )
    return CachingProvider(BudgetedProvider(inner, budgets), config.cache_dir)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def cmd_ingest(config: PipelineConfig) -> int:
    """Parse every report CSV in --input into clean.ejsonl plus rejects.csv."""
    if config.input_dir is None:
        raise CliError("--input is required for ingest")
    if not config.input_dir.is_dir():
        raise CliError(f"input directory does not exist: {config.input_dir}")
    files = sorted(config.input_dir.glob("*.csv"))
    if not files:
        logger.error("no report files found in %s", config.input_dir)
        return EXIT_EMPTY

    records = []
    rejects = []
    failures = 0
    for path in files:
        try:
            rows, parse_rejects = parse_report_file(
                path.read_bytes(),
                config.year,
                source_name=path.name,
                year_range=config.year_range,
            )
        except (IngestError, OSError) as exc:
            logger.error("skipping %s: %s", path.name, exc)
            failures += 1
            continue
        clean, row_rejects = validate_rows(rows)
        records.extend(clean)
        rejects.extend(parse_rejects)
        rejects.extend(row_rejects)
        logger.info(
            "%s: %d rows kept, %d rejected",
            path.name,
            len(clean),
            len(parse_rejects) + len(row_rejects),
        )
    if failures == len(files):
        logger.error("every report file failed to parse")
        return EXIT_EMPTY

    deduped = dedupe(records)
    save(
        DatasetFile(units=dict(CLEAN_UNITS), records=list(deduped)),
        config.path(CLEAN_FILE),
    )
    _write_csv(
        config.path(REJECTS_FILE),
        ["source_file", "source_line", "code", "detail"],
        [[r.source_file, r.source_line, r.code.value, r.detail] for r in rejects],
    )
    logger.info(
        "ingested %d files: %d clean records (%d before dedupe), %d rejects",
        len(files) - failures,
        len(deduped),
        len(records),
        len(rejects),
    )
    return EXIT_OK


def cmd_enrich(config: PipelineConfig, provider=None) -> int:
    """Enrich clean records with geo/timezone/weather; resumable on budget."""
    clean_path = config.path(CLEAN_FILE)
    if not clean_path.is_file():
        raise CliError(f"{clean_path} not found; run ingest first")
    clean = load(clean_path)
    if provider is None:
        provider = build_provider(config)
    enricher = Enricher(provider, workers=config.workers)
    enriched, excluded, paused = enricher.enrich_all(clean.records)

    delta = DatasetFile(
        units=dict(ENRICHED_UNITS),
        records=list(enriched),
        exclusions=[(e.key, e.code, e.detail) for e in excluded],
    )
    enriched_path = config.path(ENRICHED_FILE)
    merged = merge(load(enriched_path), delta) if enriched_path.is_file() else delta
    save(merged, enriched_path)
    _write_csv(
        config.path(EXCLUDED_FILE),
        ["country", "year", "week", "code", "detail"],
        [[key[0], key[1], key[2], code, detail] for key, code, detail in merged.exclusions],
    )
    logger.info(
        "enriched %d of %d records (%d excluded)%s",
        len(merged.records),
        len(clean.records),
        len(merged.exclusions),
        "; paused on budget" if paused else "",
    )
    return EXIT_BUDGET if paused else EXIT_OK


def _load_usable(config: PipelineConfig):
    enriched_path = config.path(ENRICHED_FILE)
    if not enriched_path.is_file():
        raise CliError(f"{enriched_path} not found; run enrich first")
    dataset = load(enriched_path)
    usable = [r for r in dataset.records if r.base.incidence_rate is not None]
    return dataset, usable


def cmd_train(config: PipelineConfig) -> int:
    """Fit the incidence model on the training split and save model.json."""
    _, usable = _load_usable(config)
    if len(usable) < 2:
        logger.error("need at least 2 records with an incidence rate, got %d", len(usable))
        return EXIT_EMPTY
    train, test = split_records(usable, config.test_fraction, config.seed)
    model = IncidenceRegressor(ridge_lambda=config.ridge_lambda).fit(train)
    save_model(model, config.path(MODEL_FILE))
    logger.info(
        "trained on %d records (lambda=%g), %d held out", len(train), config.ridge_lambda, len(test)
    )
    return EXIT_OK


def cmd_evaluate(config: PipelineConfig) -> int:
    """Score train and test splits separately into metrics.json."""
    model_path = config.path(MODEL_FILE)
    if not model_path.is_file():
        raise CliError(f"{model_path} not found; run train first")
    model = load_model(model_path)
    _, usable = _load_usable(config)
    if len(usable) < 2:
        logger.error("need at least 2 records with an incidence rate, got %d", len(usable))
        return EXIT_EMPTY
    train, test = split_records(usable, config.test_fraction, config.seed)
    metrics = {
        "train": evaluate(targets(train), model.predict(train)).to_dict(),
        "test": evaluate(targets(test), model.predict(test)).to_dict(),
    }
    metrics_path = config.path(METRICS_FILE)
    metrics_path.parent.mkdir(parents=True, exist_ok=True)
    metrics_path.write_text(json.dumps(metrics, indent=2) + "\n", encoding="utf-8")
    logger.info(
        "metrics written: test mae=%s rse=%s cod=%s",
        metrics["test"]["mae"],
        metrics["test"]["rse"],
        metrics["test"]["cod"],
    )
    return EXIT_OK


def cmd_report(config: PipelineConfig) -> int:
    """Emit aggregate CSVs and per-year actual-vs-scored comparison tables."""
    model_path = config.path(MODEL_FILE)
    if not model_path.is_file():
        raise CliError(f"{model_path} not found; run train first")
    model = load_model(model_path)
    dataset, usable = _load_usable(config)

    year_aggs = analytics.aggregate_by_year(dataset.records)
    summary_aggs = analytics.aggregate_by_summary(dataset.records)
    analytics.write_year_csv(year_aggs, config.path("agg_year.csv"))
    analytics.write_summary_csv(summary_aggs, config.path("agg_summary.csv"))

    if config.score_all:
        compared = usable
    elif len(usable) >= 2:
        compared = split_records(usable, config.test_fraction, config.seed)[1]
    else:
        compared = []
    rows = analytics.comparison_series(compared, model) if compared else []
    paths = analytics.write_comparison_csvs(rows, config.output_dir)
    if config.charts:
        analytics.render_charts(year_aggs, summary_aggs, rows, config.output_dir)
    logger.info(
        "report written: %d year rows, %d summaries, %d comparison files",
        len(year_aggs),
        len(summary_aggs),
        len(paths),
    )
    return EXIT_OK


def cmd_run_all(config: PipelineConfig, provider=None) -> int:
    """Run every stage in order, stopping at the first non-success code."""
    for stage in (
        lambda: cmd_ingest(config),
        lambda: cmd_enrich(config, provider),
        lambda: cmd_train(config),
        lambda: cmd_evaluate(config),
        lambda: cmd_report(config),
    ):
        code = stage()
        if code != EXIT_OK:
            return code
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", type=Path, help="directory of report CSV files")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument(
        "--offline", action="store_true", help="use on-disk fixtures, never the network"
    )
    common.add_argument("--fixtures", type=Path, help="provider fixture directory (offline mode)")
    common.add_argument(
        "--cache",
        type=Path,
        help=f"provider response cache directory (default ${CACHE_DIR_ENV} or <out>/cache)",
    )
    common.add_argument("--year", type=int, help="report year for files without a Year column")
    common.add_argument(
        "--year-range",
        nargs=2,
        type=int,
        default=list(DEFAULT_YEAR_RANGE),
        metavar=("MIN", "MAX"),
        help="accepted report years",
    )
    common.add_argument("--test-fraction", type=float, default=0.25)
    common.add_argument("--seed", type=int, default=1)
    common.add_argument(
        "--lambda", dest="ridge_lambda", type=float, default=DEFAULT_RIDGE_LAMBDA,
        help="ridge penalty strength",
    )
    common.add_argument(
        "--budget-weather", type=int, default=1000, metavar="N",
        help="daily weather-provider call budget",
    )
    common.add_argument(
        "--score-all", action="store_true",
        help="compare scored vs actual on the full dataset, not just the test split",
    )
    common.add_argument("--charts", action="store_true", help="also render static PNG charts")

    parser = argparse.ArgumentParser(
        prog="epiforge",
        description="Weekly surveillance-report pipeline: ingest, enrich, train, evaluate, report.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, doc in (
        ("ingest", cmd_ingest, "parse report CSVs into clean.ejsonl and rejects.csv"),
        ("enrich", cmd_enrich, "add geo, timezone and weather data to clean records"),
        ("train", cmd_train, "fit the incidence-rate model"),
        ("evaluate", cmd_evaluate, "write train/test metrics.json"),
        ("report", cmd_report, "write aggregate and comparison CSVs"),
        ("run-all", cmd_run_all, "run every stage in order"),
    ):
        sub.add_parser(name, parents=[common], help=doc).set_defaults(func=func)
    return parser


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    return PipelineConfig(
        input_dir=args.input,
        output_dir=args.out,
        offline=args.offline,
        fixtures_dir=args.fixtures,
        cache_dir=args.cache,
        year=args.year,
        year_range=tuple(args.year_range),
        test_fraction=args.test_fraction,
        seed=args.seed,
        ridge_lambda=args.ridge_lambda,
        budget_weather=args.budget_weather,
        score_all=args.score_all,
        charts=args.charts,
    )


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        return args.func(config)
    except (CliError, IngestError, StoreError, OSError, ValueError) as exc:
        logger.error("%s", exc)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
