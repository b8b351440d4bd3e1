"""Weekly chikungunya surveillance ETL, weather enrichment and regression."""

from .enrich import Enricher, Excluded, distinct_countries
from .epiweek import (
    EpiWeekDate,
    epiweek_to_date,
    iso_weeks_in_year,
    local_midnight_timestamp,
    utc_midnight_timestamp,
)
from .ingest import (
    clean_country_name,
    dedupe,
    normalize_population,
    normalize_week,
    parse_report_file,
    validate_row,
)
from .model import (
    EvalMetrics,
    FeatureEncoder,
    FeatureMatrix,
    FeatureSchema,
    IncidenceRegressor,
    RidgeRegression,
    encode,
    evaluate,
    load_model,
    predict_record,
    save_model,
    split_records,
)
from .records import (
    CleanRecord,
    EnrichedRecord,
    GeoPoint,
    RawReportRow,
    RejectCode,
    RejectReason,
    WeatherObservation,
)
from .store import DatasetFile, load, merge, save

__version__ = "0.1.0"

__all__ = [
    "CleanRecord",
    "DatasetFile",
    "EnrichedRecord",
    "Enricher",
    "EpiWeekDate",
    "EvalMetrics",
    "Excluded",
    "FeatureEncoder",
    "FeatureMatrix",
    "FeatureSchema",
    "GeoPoint",
    "IncidenceRegressor",
    "RawReportRow",
    "RejectCode",
    "RejectReason",
    "RidgeRegression",
    "WeatherObservation",
    "clean_country_name",
    "dedupe",
    "distinct_countries",
    "encode",
    "epiweek_to_date",
    "evaluate",
    "iso_weeks_in_year",
    "load",
    "load_model",
    "local_midnight_timestamp",
    "merge",
    "normalize_population",
    "normalize_week",
    "parse_report_file",
    "predict_record",
    "save",
    "save_model",
    "split_records",
    "utc_midnight_timestamp",
    "validate_row",
]
