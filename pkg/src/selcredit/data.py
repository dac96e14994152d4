"""Dataset ingestion, validation, splitting, and standardization.

Two public credit datasets are supported natively (the Taiwan card-holder
file and the Kaggle "Give Me Some Credit" training file) plus any CSV that
conforms to a declared schema. Continuous columns are standardized with
training-set statistics; ordinal categorical columns stay in their raw
integer coding so that +/-1 steps keep their meaning.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .models import fingerprint

CONTINUOUS = "continuous"
ORDINAL = "ordinal_categorical"
KINDS = (CONTINUOUS, ORDINAL)
PROVENANCES = ("taiwan", "gmsc", "synthetic", "generic")

DATASET_FILE_VERSION = "selcredit-dataset/1"


class IngestionError(ValueError):
    """Raised when a source file cannot be parsed into a dataset."""


class ValidationError(ValueError):
    """Raised when parsed values violate the declared schema."""


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str
    valid_range: tuple[float, float]
    column_index: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        lo, hi = self.valid_range
        if lo > hi:
            raise ValueError(f"empty valid range for {self.name}")
        if self.kind == ORDINAL:
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError(f"{self.name}: categorical range must be finite")
            if lo != int(lo) or hi != int(hi):
                raise ValueError(f"{self.name}: categorical range must be integer-valued")
        if self.column_index < 0:
            raise ValueError("column_index must be >= 0")

    def to_dict(self) -> dict:
        lo, hi = self.valid_range
        return {
            "name": self.name,
            "kind": self.kind,
            # null encodes an unbounded endpoint; keeps the JSON portable
            "valid_range": [None if not math.isfinite(lo) else lo,
                            None if not math.isfinite(hi) else hi],
            "column_index": self.column_index,
        }

    @staticmethod
    def from_dict(doc: dict) -> "FeatureSpec":
        lo, hi = doc["valid_range"]
        return FeatureSpec(
            name=doc["name"],
            kind=doc["kind"],
            valid_range=(-math.inf if lo is None else float(lo),
                         math.inf if hi is None else float(hi)),
            column_index=int(doc["column_index"]),
        )


def _check_schema(schema: tuple[FeatureSpec, ...]):
    indices = [f.column_index for f in schema]
    if len(set(indices)) != len(indices):
        raise ValidationError("schema column indices must be unique")
    names = [f.name for f in schema]
    if len(set(names)) != len(names):
        raise ValidationError("schema feature names must be unique")


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix with binary labels and per-feature metadata."""

    features: np.ndarray  # (n, p) float
    labels: np.ndarray  # (n,) int in {0,1}
    schema: tuple[FeatureSpec, ...]
    provenance: str = "generic"

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.features, dtype=float))
        y = np.asarray(self.labels, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
            raise ValidationError("features must be a non-empty (n, p) matrix")
        if y.shape != (X.shape[0],):
            raise ValidationError("labels length must match the number of rows")
        if not np.all((y == 0) | (y == 1)):
            raise ValidationError("labels must contain only 0 and 1")
        schema = tuple(self.schema)
        if len(schema) != X.shape[1]:
            raise ValidationError("schema length must match the number of columns")
        _check_schema(schema)
        if self.provenance not in PROVENANCES:
            raise ValidationError(f"unknown provenance {self.provenance!r}")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "schema", schema)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def feature(self, name: str) -> np.ndarray:
        for i, spec in enumerate(self.schema):
            if spec.name == name:
                return self.features[:, i]
        raise KeyError(name)

    def categorical_indices(self) -> list[int]:
        return [i for i, s in enumerate(self.schema) if s.kind == ORDINAL]

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.schema,
                       self.provenance)

    def schema_fingerprint(self) -> str:
        return fingerprint([s.to_dict() for s in self.schema])

    def default_share(self) -> float:
        return float(self.labels.mean())


def validate_against_schema(X: np.ndarray, schema: tuple[FeatureSpec, ...]):
    """Range check every value; categorical columns must also be integer-coded."""
    for j, spec in enumerate(schema):
        col = X[:, j]
        bad = ~np.isfinite(col)
        if bad.any():
            i = int(np.argmax(bad))
            raise ValidationError(
                f"row {i}, column {spec.name!r}: non-finite value")
        lo, hi = spec.valid_range
        out = (col < lo) | (col > hi)
        if out.any():
            i = int(np.argmax(out))
            raise ValidationError(
                f"row {i}, column {spec.name!r}: value {col[i]!r} outside "
                f"[{lo}, {hi}]")
        if spec.kind == ORDINAL:
            frac = col != np.floor(col)
            if frac.any():
                i = int(np.argmax(frac))
                raise ValidationError(
                    f"row {i}, column {spec.name!r}: categorical value "
                    f"{col[i]!r} is not an integer")


# --- schemas for the two public datasets -----------------------------------

_UNBOUNDED = (-math.inf, math.inf)


def taiwan_schema() -> tuple[FeatureSpec, ...]:
    """23 explanatory columns of the Taiwan credit card file.

    x2 gender, x3 education, x4 marital status, and the six repayment-status
    columns x6..x11 are ordinal categoricals; credit amount, age, bill and
    payment amounts are continuous. Education/marital "others" codes are kept
    as-is.
    """
    specs = [FeatureSpec("x1_limit_bal", CONTINUOUS, _UNBOUNDED, 0),
             FeatureSpec("x2_sex", ORDINAL, (1, 2), 1),
             FeatureSpec("x3_education", ORDINAL, (0, 6), 2),
             FeatureSpec("x4_marriage", ORDINAL, (0, 3), 3),
             FeatureSpec("x5_age", CONTINUOUS, _UNBOUNDED, 4)]
    months = ["sep", "aug", "jul", "jun", "may", "apr"]
    for k, m in enumerate(months):
        specs.append(FeatureSpec(f"x{6 + k}_pay_{m}", ORDINAL, (-2, 9), 5 + k))
    for k, m in enumerate(months):
        specs.append(FeatureSpec(f"x{12 + k}_bill_{m}", CONTINUOUS, _UNBOUNDED, 11 + k))
    for k, m in enumerate(months):
        specs.append(FeatureSpec(f"x{18 + k}_payamt_{m}", CONTINUOUS, _UNBOUNDED, 17 + k))
    return tuple(specs)


def gmsc_schema() -> tuple[FeatureSpec, ...]:
    """10 explanatory columns of the Kaggle cs-training file.

    Count-valued columns (past-due counters, open lines, real-estate loans,
    dependents) are ordinal categoricals so the +/-1 perturbation applies;
    utilization, age, debt ratio, and income stay continuous. Ranges are
    generous upper bounds on the public file's coding (past-due counters use
    96/98 sentinel codes).
    """
    return (
        FeatureSpec("x1_revolving_utilization", CONTINUOUS, _UNBOUNDED, 0),
        FeatureSpec("x2_age", CONTINUOUS, _UNBOUNDED, 1),
        FeatureSpec("x3_past_due_30_59", ORDINAL, (0, 98), 2),
        FeatureSpec("x4_debt_ratio", CONTINUOUS, _UNBOUNDED, 3),
        FeatureSpec("x5_monthly_income", CONTINUOUS, _UNBOUNDED, 4),
        FeatureSpec("x6_open_credit_lines", ORDINAL, (0, 200), 5),
        FeatureSpec("x7_past_due_90", ORDINAL, (0, 98), 6),
        FeatureSpec("x8_real_estate_loans", ORDINAL, (0, 200), 7),
        FeatureSpec("x9_past_due_60_89", ORDINAL, (0, 98), 8),
        FeatureSpec("x10_dependents", ORDINAL, (0, 100), 9),
    )


# --- CSV ingestion ----------------------------------------------------------


def _read_csv(path, header: bool):
    try:
        df = pd.read_csv(path, header=0 if header else None, sep=",")
    except pd.errors.EmptyDataError:
        raise IngestionError(f"{path}: file is empty") from None
    except pd.errors.ParserError as exc:
        raise IngestionError(f"{path}: malformed CSV ({exc})") from None
    if df.shape[0] == 0:
        raise IngestionError(f"{path}: no data rows")
    return df


def _to_numeric(df: pd.DataFrame, path) -> pd.DataFrame:
    """Coerce every column to numeric, naming the first malformed cell."""
    out = {}
    for col in df.columns:
        numeric = pd.to_numeric(df[col], errors="coerce")
        bad = numeric.isna() & df[col].notna()
        if bad.any():
            row = int(np.argmax(bad.to_numpy()))
            raise IngestionError(
                f"{path}: row {row}, column {col!r}: "
                f"non-numeric value {df[col].iloc[row]!r}")
        out[col] = numeric
    return pd.DataFrame(out)


_TAIWAN_LABELS = ("default payment next month", "default.payment.next.month",
                  "default_payment_next_month", "y", "Y")


def load_taiwan(path, header: bool = True) -> Dataset:
    """Load the UCI Taiwan credit card default file.

    Accepts the two common exports: one with an ID column and named headers,
    and a headerless 24- or 25-column variant (pass header=False). The label
    is the final default-payment column.
    """
    df = _read_csv(path, header)
    if header:
        # second header row ("ID, X1..X23, Y" over names) appears in the raw
        # UCI xls export; detect and re-read
        first = str(df.columns[0]).strip().lower()
        if first in ("", "unnamed: 0") and str(df.iloc[0, 0]).strip().upper() == "ID":
            df = pd.read_csv(path, header=1)
        df.columns = [str(c).strip() for c in df.columns]
        label_col = next((c for c in df.columns if c in _TAIWAN_LABELS), None)
        if label_col is None:
            raise IngestionError(
                f"{path}: no default-payment label column found "
                f"(expected one of {_TAIWAN_LABELS})")
        drop = [c for c in df.columns if c.strip().upper() == "ID"]
        y_raw = df[label_col]
        X_df = df.drop(columns=[label_col] + drop)
    else:
        if df.shape[1] == 25:  # leading ID column
            df = df.iloc[:, 1:]
        if df.shape[1] != 24:
            raise IngestionError(
                f"{path}: headerless Taiwan file must have 24 or 25 columns, "
                f"got {df.shape[1]}")
        y_raw = df.iloc[:, -1]
        X_df = df.iloc[:, :-1]
    if X_df.shape[1] != 23:
        raise IngestionError(
            f"{path}: expected 23 explanatory columns, got {X_df.shape[1]}")
    X_df = _to_numeric(X_df, path)
    y = _to_numeric(y_raw.to_frame(), path).iloc[:, 0]
    if X_df.isna().any().any() or y.isna().any():
        row = int(np.argmax(X_df.isna().any(axis=1).to_numpy() | y.isna().to_numpy()))
        raise IngestionError(f"{path}: row {row}: missing value")
    schema = taiwan_schema()
    X = X_df.to_numpy(dtype=float)
    validate_against_schema(X, schema)
    if not y.isin([0, 1]).all():
        row = int(np.argmax(~y.isin([0, 1]).to_numpy()))
        raise ValidationError(f"{path}: row {row}: label must be 0 or 1")
    return Dataset(X, y.to_numpy(dtype=np.int64), schema, provenance="taiwan")


_GMSC_LABEL = "SeriousDlqin2yrs"
_GMSC_COLUMNS = (
    "RevolvingUtilizationOfUnsecuredLines", "age",
    "NumberOfTime30-59DaysPastDueNotWorse", "DebtRatio", "MonthlyIncome",
    "NumberOfOpenCreditLinesAndLoans", "NumberOfTimes90DaysLate",
    "NumberRealEstateLoansOrLines", "NumberOfTime60-89DaysPastDueNotWorse",
    "NumberOfDependents")


def load_gmsc(path, header: bool = True) -> Dataset:
    """Load the Kaggle cs-training file; rows with any missing value are dropped."""
    df = _read_csv(path, header)
    if header:
        df.columns = [str(c).strip() for c in df.columns]
        if _GMSC_LABEL not in df.columns:
            raise IngestionError(f"{path}: missing label column {_GMSC_LABEL!r}")
        missing = [c for c in _GMSC_COLUMNS if c not in df.columns]
        if missing:
            raise IngestionError(f"{path}: missing feature columns {missing}")
        y_raw = df[_GMSC_LABEL]
        X_df = df[list(_GMSC_COLUMNS)]
    else:
        if df.shape[1] == 12:  # leading row-id column
            df = df.iloc[:, 1:]
        if df.shape[1] != 11:
            raise IngestionError(
                f"{path}: headerless file must have 11 or 12 columns, "
                f"got {df.shape[1]}")
        y_raw = df.iloc[:, 0]  # label precedes the features in this export
        X_df = df.iloc[:, 1:]
    X_df = _to_numeric(X_df, path)
    y = _to_numeric(y_raw.to_frame(), path).iloc[:, 0]
    keep = ~(X_df.isna().any(axis=1).to_numpy() | y.isna().to_numpy())
    if not keep.any():
        raise IngestionError(f"{path}: empty dataset after missing-value removal")
    X = X_df.to_numpy(dtype=float)[keep]
    y = y.to_numpy(dtype=float)[keep]
    schema = gmsc_schema()
    validate_against_schema(X, schema)
    if not np.all((y == 0) | (y == 1)):
        row = int(np.argmax(~((y == 0) | (y == 1))))
        raise ValidationError(f"{path}: row {row}: label must be 0 or 1")
    return Dataset(X, y.astype(np.int64), schema, provenance="gmsc")


def load_generic(path, schema: tuple[FeatureSpec, ...] | None = None,
                 header: bool = True) -> Dataset:
    """Load any numeric CSV whose last column is the binary label.

    Without a declared schema all features are treated as continuous with the
    observed value range.
    """
    df = _read_csv(path, header)
    if df.shape[1] < 2:
        raise IngestionError(f"{path}: need at least one feature column and a label")
    df = _to_numeric(df, path)
    if df.isna().any().any():
        row = int(np.argmax(df.isna().any(axis=1).to_numpy()))
        raise IngestionError(f"{path}: row {row}: missing value")
    X = df.iloc[:, :-1].to_numpy(dtype=float)
    y = df.iloc[:, -1].to_numpy(dtype=float)
    if schema is None:
        names = [str(c) for c in df.columns[:-1]] if header else \
            [f"x{j + 1}" for j in range(X.shape[1])]
        schema = tuple(
            FeatureSpec(names[j], CONTINUOUS,
                        (float(X[:, j].min()), float(X[:, j].max())), j)
            for j in range(X.shape[1]))
    validate_against_schema(X, schema)
    if not np.all((y == 0) | (y == 1)):
        row = int(np.argmax(~((y == 0) | (y == 1))))
        raise ValidationError(f"{path}: row {row}: label must be 0 or 1")
    return Dataset(X, y.astype(np.int64), schema, provenance="generic")


# --- split ------------------------------------------------------------------


def split_indices(n: int, train_fraction: float, seed: int):
    """Disjoint uniform-random partition of range(n); |train| rounds half up.

    Both sides are kept non-empty, so n must be at least 2.
    """
    if not (0.0 < train_fraction < 1.0):
        raise ValueError(f"train_fraction must be in (0,1), got {train_fraction}")
    if n < 2:
        raise ValueError("cannot split fewer than 2 samples")
    k = int(math.floor(train_fraction * n + 0.5))
    k = min(max(k, 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[:k]), np.sort(perm[k:])


def split(dataset: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    train_idx, test_idx = split_indices(dataset.n, train_fraction, seed)
    return dataset.take(train_idx), dataset.take(test_idx)


# --- standardization --------------------------------------------------------


@dataclass(frozen=True)
class ScalerParams:
    """Training-set means and population standard deviations, per column.

    Only continuous, non-constant columns are transformed; categorical
    columns keep their integer coding and constant columns are flagged.
    """

    means: np.ndarray
    standard_deviations: np.ndarray
    scaled: np.ndarray  # bool per column: transformed by apply()
    constant: np.ndarray  # bool per column: zero variance in the training set

    def __post_init__(self):
        for name in ("means", "standard_deviations"):
            a = np.asarray(getattr(self, name), dtype=float)
            a.flags.writeable = False
            object.__setattr__(self, name, a)
        for name in ("scaled", "constant"):
            a = np.asarray(getattr(self, name), dtype=bool)
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    def apply(self, dataset: Dataset) -> Dataset:
        if len(dataset.schema) != self.means.shape[0]:
            raise ValidationError("scaler and dataset have different widths")
        X = dataset.features.copy()
        cols = np.flatnonzero(self.scaled)
        X[:, cols] = (X[:, cols] - self.means[cols]) / self.standard_deviations[cols]
        return Dataset(X, dataset.labels, dataset.schema, dataset.provenance)

    def to_dict(self) -> dict:
        return {
            "means": self.means.tolist(),
            "standard_deviations": self.standard_deviations.tolist(),
            "scaled": self.scaled.astype(int).tolist(),
            "constant": self.constant.astype(int).tolist(),
        }

    @staticmethod
    def from_dict(doc: dict) -> "ScalerParams":
        return ScalerParams(
            means=np.array(doc["means"], dtype=float),
            standard_deviations=np.array(doc["standard_deviations"], dtype=float),
            scaled=np.array(doc["scaled"], dtype=bool),
            constant=np.array(doc["constant"], dtype=bool),
        )


def fit_scaler(train: Dataset) -> ScalerParams:
    X = train.features
    means = X.mean(axis=0)
    sds = X.std(axis=0)  # population convention (1/n)
    constant = sds == 0.0
    is_cont = np.array([s.kind == CONTINUOUS for s in train.schema])
    scaled = is_cont & ~constant
    sds_safe = np.where(sds == 0.0, 1.0, sds)
    return ScalerParams(means=means, standard_deviations=sds_safe,
                        scaled=scaled, constant=constant)


def standardize(train: Dataset, others: tuple[Dataset, ...] = ()) \
        -> tuple[Dataset, tuple[Dataset, ...], ScalerParams]:
    """Fit on train, apply to train and to every companion dataset."""
    for other in others:
        if other.schema != train.schema:
            raise ValidationError("companion dataset schema differs from train")
    params = fit_scaler(train)
    return params.apply(train), tuple(params.apply(d) for d in others), params


# --- canonical dataset file -------------------------------------------------


def dataset_to_dict(dataset: Dataset) -> dict:
    return {
        "format": DATASET_FILE_VERSION,
        "schema": [s.to_dict() for s in dataset.schema],
        "n": dataset.n,
        "p": dataset.p,
        "features": dataset.features.reshape(-1).tolist(),  # row-major
        "labels": dataset.labels.tolist(),
        "provenance": dataset.provenance,
    }


def dataset_from_dict(doc: dict) -> Dataset:
    schema = tuple(FeatureSpec.from_dict(s) for s in doc["schema"])
    n, p = int(doc["n"]), int(doc["p"])
    X = np.array(doc["features"], dtype=float).reshape(n, p)
    y = np.array(doc["labels"], dtype=np.int64)
    return Dataset(X, y, schema, provenance=doc.get("provenance", "generic"))


def save_dataset(dataset: Dataset, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dataset_to_dict(dataset), fh, sort_keys=True)
        fh.write("\n")


def load_dataset(path) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return dataset_from_dict(json.load(fh))
