"""Incidence-rate regression: featurization, ridge least squares, metrics.

The design matrix is standardized numerics + full one-hot blocks for
country and weather summary + a trailing intercept column. The intercept
is kept out of the ridge penalty, and the full (no-dropped-level) one-hot
encoding relies on that small penalty to resolve its collinearity
deterministically.
"""

from __future__ import annotations

import json
import os
import random
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_X_y

from .records import EnrichedRecord

NUMERIC_FEATURES = (
    "week",
    "suspected",
    "confirmed",
    "imported",
    "deaths",
    "population_k",
    "year",
    "lat",
    "lon",
    "weather_temperature",
    "weather_dewPoint",
    "weather_humidity",
    "weather_pressure",
    "weather_windSpeed",
)
CATEGORICAL_FEATURES = ("country", "weather_summary")
TARGET = "incidence_rate"

DEFAULT_RIDGE_LAMBDA = 0.001


def _numeric_value(record: EnrichedRecord, name: str) -> float | None:
    base = record.base
    if name == "lat":
        return record.geo.lat
    if name == "lon":
        return record.geo.lon
    if name == "weather_temperature":
        return record.weather.temperature
    if name == "weather_dewPoint":
        return record.weather.dew_point
    if name == "weather_humidity":
        return record.weather.humidity
    if name == "weather_pressure":
        return record.weather.pressure
    if name == "weather_windSpeed":
        return record.weather.wind_speed
    value = getattr(base, name)
    return None if value is None else float(value)


def _categorical_value(record: EnrichedRecord, name: str) -> str:
    if name == "country":
        return record.base.country
    if name == "weather_summary":
        return record.weather.summary
    raise KeyError(name)


def targets(records: Sequence[EnrichedRecord]) -> np.ndarray:
    """Target vector (incidence rate); NaN marks records without one."""
    return np.array(
        [
            np.nan if r.base.incidence_rate is None else float(r.base.incidence_rate)
            for r in records
        ],
        dtype=float,
    )


@dataclass(frozen=True)
class FeatureSchema:
    """Frozen featurization learned from training data.

    `column_means`/`column_scales` are the training statistics of the
    numeric columns (in NUMERIC_FEATURES order); the means double as the
    imputation value for absent optional fields. Categorical levels are the
    sorted training levels; an unseen level encodes to all zeros.
    """

    numeric_features: tuple[str, ...]
    categorical_levels: dict[str, tuple[str, ...]]
    column_means: tuple[float, ...]
    column_scales: tuple[float, ...]
    target: str = TARGET

    @property
    def column_names(self) -> list[str]:
        names = list(self.numeric_features)
        for feature in CATEGORICAL_FEATURES:
            names.extend(f"{feature}={level}" for level in self.categorical_levels[feature])
        names.append("intercept")
        return names

    @property
    def structure(self) -> dict:
        """The column layout alone, without training statistics.

        Two models trained on different splits of the same data share this
        even though their means/scales differ.
        """
        return {
            "numeric_features": list(self.numeric_features),
            "categorical_levels": {
                feature: list(levels) for feature, levels in self.categorical_levels.items()
            },
            "target": self.target,
            "column_names": self.column_names,
        }

    @property
    def n_columns(self) -> int:
        return (
            len(self.numeric_features)
            + sum(len(levels) for levels in self.categorical_levels.values())
            + 1
        )

    def to_dict(self) -> dict:
        return {
            "numeric_features": list(self.numeric_features),
            "categorical_levels": {
                feature: list(levels) for feature, levels in self.categorical_levels.items()
            },
            "column_means": list(self.column_means),
            "column_scales": list(self.column_scales),
            "target": self.target,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureSchema":
        return cls(
            numeric_features=tuple(data["numeric_features"]),
            categorical_levels={
                feature: tuple(levels)
                for feature, levels in data["categorical_levels"].items()
            },
            column_means=tuple(float(v) for v in data["column_means"]),
            column_scales=tuple(float(v) for v in data["column_scales"]),
            target=data["target"],
        )


class FeatureEncoder(TransformerMixin, BaseEstimator):
    """Transformer from enriched records to the numeric design matrix.

    fit() learns the schema (categorical levels, imputation means,
    standardization statistics) from training records only; transform()
    applies it to any records, mapping unseen categorical levels to zero
    rows of their one-hot block.
    """

    def fit(self, X: Sequence[EnrichedRecord], y=None) -> "FeatureEncoder":
        records = list(X)
        if not records:
            raise ValueError("cannot learn a feature schema from zero records")
        raw = np.full((len(records), len(NUMERIC_FEATURES)), np.nan)
        for i, record in enumerate(records):
            for j, name in enumerate(NUMERIC_FEATURES):
                value = _numeric_value(record, name)
                if value is not None:
                    raw[i, j] = value
        means = []
        scales = []
        for j, name in enumerate(NUMERIC_FEATURES):
            column = raw[:, j]
            present = column[~np.isnan(column)]
            if present.size == 0:
                warnings.warn(f"feature {name!r} absent from all training records; mean set to 0")
                mean = 0.0
            else:
                mean = float(present.mean())
            column = np.where(np.isnan(column), mean, column)
            scale = float(column.std())
            if scale == 0.0:
                warnings.warn(f"feature {name!r} has zero variance; standardization is a no-op")
                scale = 1.0
            means.append(mean)
            scales.append(scale)
        levels = {
            feature: tuple(sorted({_categorical_value(r, feature) for r in records}))
            for feature in CATEGORICAL_FEATURES
        }
        self.schema_ = FeatureSchema(
            numeric_features=NUMERIC_FEATURES,
            categorical_levels=levels,
            column_means=tuple(means),
            column_scales=tuple(scales),
        )
        return self

    def transform(self, X: Sequence[EnrichedRecord]) -> np.ndarray:
        if not hasattr(self, "schema_"):
            raise ValueError("FeatureEncoder is not fitted")
        schema = self.schema_
        records = list(X)
        matrix = np.zeros((len(records), schema.n_columns))
        level_offsets: dict[str, dict[str, int]] = {}
        offset = len(schema.numeric_features)
        for feature in CATEGORICAL_FEATURES:
            level_offsets[feature] = {
                level: offset + k for k, level in enumerate(schema.categorical_levels[feature])
            }
            offset += len(schema.categorical_levels[feature])
        for i, record in enumerate(records):
            for j, name in enumerate(schema.numeric_features):
                value = _numeric_value(record, name)
                if value is None:
                    value = schema.column_means[j]
                matrix[i, j] = (value - schema.column_means[j]) / schema.column_scales[j]
            for feature in CATEGORICAL_FEATURES:
                column = level_offsets[feature].get(_categorical_value(record, feature))
                if column is not None:
                    matrix[i, column] = 1.0
            matrix[i, -1] = 1.0
        return matrix

    def get_feature_names_out(self, input_features=None) -> np.ndarray:
        return np.asarray(self.schema_.column_names, dtype=object)

    @classmethod
    def from_schema(cls, schema: FeatureSchema) -> "FeatureEncoder":
        encoder = cls()
        encoder.schema_ = schema
        return encoder


@dataclass
class FeatureMatrix:
    """Design matrix plus aligned targets (NaN where a record has none)."""

    values: np.ndarray
    targets: np.ndarray
    schema: FeatureSchema


def encode(records: Sequence[EnrichedRecord], schema: FeatureSchema | None = None) -> FeatureMatrix:
    """Encode records under `schema`, or learn a schema from them first."""
    if schema is None:
        encoder = FeatureEncoder().fit(records)
    else:
        encoder = FeatureEncoder.from_schema(schema)
    return FeatureMatrix(
        values=encoder.transform(records), targets=targets(records), schema=encoder.schema_
    )


class RidgeRegression(RegressorMixin, BaseEstimator):
    """Least squares with an L2 penalty on all but one designated column.

    Minimizes ||X w - y||^2 + ridge_lambda * ||w_penalized||^2 by a single
    SVD-based least-squares solve of the augmented system [X; sqrt(l)*S],
    never by forming the normal equations. With ridge_lambda = 0 on a
    rank-deficient matrix the minimum-norm solution is returned and a
    warning is emitted.

    Parameters
    ----------
    ridge_lambda : float
        Non-negative penalty strength.
    unpenalized_column : int or None
        Index of the column (typically the trailing intercept) excluded
        from the penalty; None penalizes every column.
    """

    def __init__(self, ridge_lambda: float = DEFAULT_RIDGE_LAMBDA, unpenalized_column: int | None = -1):
        self.ridge_lambda = ridge_lambda
        self.unpenalized_column = unpenalized_column

    def fit(self, X, y) -> "RidgeRegression":
        X, y = check_X_y(X, y, ensure_min_samples=1)
        if self.ridge_lambda < 0:
            raise ValueError(f"ridge_lambda must be >= 0, got {self.ridge_lambda}")
        n_cols = X.shape[1]
        penalized = np.ones(n_cols, dtype=bool)
        if self.unpenalized_column is not None:
            penalized[self.unpenalized_column] = False
        if self.ridge_lambda > 0 and penalized.any():
            selector = np.eye(n_cols)[penalized]
            augmented = np.vstack([X, np.sqrt(self.ridge_lambda) * selector])
            rhs = np.concatenate([y, np.zeros(selector.shape[0])])
        else:
            augmented = X
            rhs = y
        coef, _, rank, _ = np.linalg.lstsq(augmented, rhs, rcond=None)
        if self.ridge_lambda == 0 and rank < n_cols:
            warnings.warn(
                f"design matrix is rank-deficient (rank {rank} < {n_cols}) with no penalty; "
                "returning the minimum-norm solution"
            )
        self.coef_ = coef
        self.n_features_in_ = n_cols
        return self

    def predict(self, X) -> np.ndarray:
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return X @ self.coef_


class IncidenceRegressor(RegressorMixin, BaseEstimator):
    """End-to-end estimator over enriched records: encode, then ridge-fit.

    Parameters
    ----------
    ridge_lambda : float
        Penalty passed to the underlying RidgeRegression.
    """

    def __init__(self, ridge_lambda: float = DEFAULT_RIDGE_LAMBDA):
        self.ridge_lambda = ridge_lambda

    def fit(self, X: Sequence[EnrichedRecord], y=None) -> "IncidenceRegressor":
        records = list(X)
        if y is None:
            y = targets(records)
        y = np.asarray(y, dtype=float)
        if np.isnan(y).any():
            raise ValueError("every training record needs an incidence-rate target")
        self.encoder_ = FeatureEncoder().fit(records)
        matrix = self.encoder_.transform(records)
        self.regressor_ = RidgeRegression(
            ridge_lambda=self.ridge_lambda, unpenalized_column=-1
        ).fit(matrix, y)
        return self

    def predict(self, X: Sequence[EnrichedRecord]) -> np.ndarray:
        return self.regressor_.predict(self.encoder_.transform(X))

    @property
    def schema_(self) -> FeatureSchema:
        return self.encoder_.schema_

    @property
    def coef_(self) -> np.ndarray:
        return self.regressor_.coef_

    def to_dict(self) -> dict:
        return {
            "schema": self.schema_.to_dict(),
            "weights": [float(w) for w in self.coef_],
            "ridge_lambda": self.ridge_lambda,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IncidenceRegressor":
        model = cls(ridge_lambda=float(data["ridge_lambda"]))
        model.encoder_ = FeatureEncoder.from_schema(FeatureSchema.from_dict(data["schema"]))
        regressor = RidgeRegression(ridge_lambda=model.ridge_lambda, unpenalized_column=-1)
        regressor.coef_ = np.array(data["weights"], dtype=float)
        regressor.n_features_in_ = regressor.coef_.shape[0]
        if regressor.n_features_in_ != model.schema_.n_columns:
            raise ValueError(
                f"weights length {regressor.n_features_in_} does not match schema "
                f"({model.schema_.n_columns} columns)"
            )
        model.regressor_ = regressor
        return model


def predict_record(model: IncidenceRegressor, record: EnrichedRecord) -> float:
    """Scored label for a single record."""
    return float(model.predict([record])[0])


def save_model(model: IncidenceRegressor, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(model.to_dict(), indent=2) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def load_model(path: str | Path) -> IncidenceRegressor:
    with Path(path).open(encoding="utf-8") as fh:
        return IncidenceRegressor.from_dict(json.load(fh))


@dataclass(frozen=True)
class EvalMetrics:
    """MAE, relative squared error and coefficient of determination.

    `rse` and `cod` are None (serialized as null) when the target variance
    is zero, where both are undefined; otherwise cod == 1 - rse exactly, by
    construction.
    """

    mae: float
    rse: float | None
    cod: float | None

    def to_dict(self) -> dict:
        return {"mae": self.mae, "rse": self.rse, "cod": self.cod}


def evaluate(y: Sequence[float], yhat: Sequence[float]) -> EvalMetrics:
    """Compute the three evaluation metrics for actual vs scored labels."""
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape or y.ndim != 1 or y.size == 0:
        raise ValueError(f"need equal-length nonempty vectors, got {y.shape} and {yhat.shape}")
    mae = float(np.mean(np.abs(y - yhat)))
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return EvalMetrics(mae=mae, rse=None, cod=None)
    rse = ss_res / ss_tot
    return EvalMetrics(mae=mae, rse=rse, cod=1.0 - rse)


def split_records(records: Sequence, test_fraction: float, seed: int) -> tuple[list, list]:
    """Deterministic (train, test) partition keyed by `seed`.

    Membership comes from a seeded shuffle; both halves keep the input
    order. Fails when either side would be empty.
    """
    n = len(records)
    if n < 2:
        raise ValueError(f"need at least 2 records to split, got {n}")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n_test = round(n * test_fraction)
    if not 1 <= n_test <= n - 1:
        raise ValueError(
            f"test_fraction {test_fraction} yields an empty partition for {n} records"
        )
    indices = list(range(n))
    random.Random(seed).shuffle(indices)
    test_indices = set(indices[:n_test])
    train = [record for i, record in enumerate(records) if i not in test_indices]
    test = [record for i, record in enumerate(records) if i in test_indices]
    return train, test
