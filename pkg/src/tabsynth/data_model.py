"""Tabular data representation: schema, CSV I/O, scaling, and summary statistics.

Data is held column-major as a dense float matrix plus an ordered list of
column specs. Binary columns are restricted to {0, 1}; integer-continuous
columns hold integer-valued reals that are treated as continuous everywhere
except for a final rounding step on generated output.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

CONTINUOUS = "continuous"
BINARY = "binary"
INTEGER_CONTINUOUS = "integer_continuous"

COLUMN_KINDS = (CONTINUOUS, BINARY, INTEGER_CONTINUOUS)


class SchemaError(ValueError):
    """Raised when data does not conform to its declared schema."""


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str

    def __post_init__(self):
        if self.kind not in COLUMN_KINDS:
            raise SchemaError(f"unknown column kind {self.kind!r} for {self.name!r}")

    @property
    def is_numericish(self) -> bool:
        return self.kind in (CONTINUOUS, INTEGER_CONTINUOUS)


@dataclass(frozen=True)
class Dataset:
    """Immutable n-by-p table with a schema. Values are float64, column j of
    ``values`` corresponds to ``columns[j]``."""

    columns: tuple[ColumnSpec, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "columns", tuple(self.columns))
        if vals.ndim != 2:
            raise SchemaError("values must be a 2-D matrix")
        if vals.shape[1] != len(self.columns):
            raise SchemaError(
                f"schema has {len(self.columns)} columns, values have {vals.shape[1]}"
            )

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.index(name)]

    def index(self, name: str) -> int:
        for j, c in enumerate(self.columns):
            if c.name == name:
                return j
        raise KeyError(name)

    def validate(self) -> None:
        """Check every column against its spec; raise SchemaError on violation."""
        if self.n < 1:
            raise SchemaError("dataset must contain at least one row")
        if not np.all(np.isfinite(self.values)):
            raise SchemaError("dataset contains non-finite values")
        for j, spec in enumerate(self.columns):
            col = self.values[:, j]
            if spec.kind == BINARY:
                bad = ~np.isin(col, (0.0, 1.0))
                if bad.any():
                    i = int(np.argmax(bad))
                    raise SchemaError(
                        f"binary column {spec.name!r} holds non-0/1 value "
                        f"{col[i]} at row {i}"
                    )
            elif spec.kind == INTEGER_CONTINUOUS:
                bad = col != np.round(col)
                if bad.any():
                    i = int(np.argmax(bad))
                    raise SchemaError(
                        f"integer column {spec.name!r} holds non-integer value "
                        f"{col[i]} at row {i}"
                    )


@dataclass(frozen=True)
class ScalingParams:
    """Center/scale pair for two-standard-deviation scaling."""

    mean: float
    two_sd: float


def standardize(x: np.ndarray) -> tuple[np.ndarray, ScalingParams]:
    """Center x and divide by twice its sample standard deviation.

    The scaled column has mean 0 and sd 0.5, making it comparable in scale
    to a 0/1 indicator.
    """
    x = np.asarray(x, dtype=float)
    sd = float(np.std(x))
    if sd == 0.0:
        raise ValueError("cannot standardize a constant column")
    params = ScalingParams(mean=float(np.mean(x)), two_sd=2.0 * sd)
    return (x - params.mean) / params.two_sd, params


def destandardize(scaled: np.ndarray, params: ScalingParams) -> np.ndarray:
    return np.asarray(scaled, dtype=float) * params.two_sd + params.mean


def quantile(x: np.ndarray, q: float) -> float:
    """Linear-interpolation sample quantile at position (n-1)*q."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("quantile of empty vector")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"quantile level {q} outside [0, 1]")
    return float(np.quantile(x, q, method="linear"))


def column_stats(x: np.ndarray) -> dict:
    """Mean, sd, skewness, kurtosis (non-excess) and named quantiles.

    Skewness and kurtosis use raw central moments: g = m3 / m2^1.5,
    k = m4 / m2^2, so a normal sample gives k near 3.
    """
    x = np.asarray(x, dtype=float)
    if x.size < 4:
        raise ValueError("need at least 4 observations")
    mean = float(np.mean(x))
    sd = float(np.std(x))
    centered = x - mean
    m2 = float(np.mean(centered**2))
    if m2 == 0.0:
        skew = kurt = float("nan")
    else:
        skew = float(np.mean(centered**3)) / m2**1.5
        kurt = float(np.mean(centered**4)) / m2**2
    return {
        "mean": mean,
        "sd": sd,
        "skewness": skew,
        "kurtosis": kurt,
        "min": float(np.min(x)),
        "max": float(np.max(x)),
        "q02": quantile(x, 0.02),
        "q16": quantile(x, 0.16),
        "median": quantile(x, 0.5),
        "q84": quantile(x, 0.84),
        "q98": quantile(x, 0.98),
    }


def _format_value(v: float) -> str:
    v = float(v)
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def load_csv(path, schema: list[ColumnSpec]) -> Dataset:
    """Read a CSV against a schema; rows with missing cells are dropped."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        expected = [c.name for c in schema]
        if header != expected:
            raise SchemaError(f"{path}: header {header} does not match schema {expected}")
        rows = []
        for i, raw in enumerate(reader):
            if len(raw) != len(schema):
                raise SchemaError(f"{path}: row {i} has {len(raw)} cells, expected {len(schema)}")
            if any(cell.strip() == "" for cell in raw):
                continue
            row = []
            for j, cell in enumerate(raw):
                try:
                    row.append(float(cell))
                except ValueError:
                    raise SchemaError(
                        f"{path}: non-numeric cell {cell!r} at row {i}, "
                        f"column {schema[j].name!r}"
                    ) from None
            rows.append(row)
    if not rows:
        raise SchemaError(f"{path}: no complete rows")
    ds = Dataset(columns=tuple(schema), values=np.array(rows, dtype=float))
    ds.validate()
    return ds


def save_csv(dataset: Dataset, path) -> None:
    """Write a Dataset to CSV at full double precision (round-trip safe)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(dataset.names)
        for row in dataset.values:
            writer.writerow([_format_value(v) for v in row])


def load_schema(path) -> list[ColumnSpec]:
    with open(path) as fh:
        entries = json.load(fh)
    return [ColumnSpec(name=e["name"], kind=e["kind"]) for e in entries]


def save_schema(schema, path) -> None:
    with open(path, "w") as fh:
        json.dump([{"name": c.name, "kind": c.kind} for c in schema], fh, indent=2)
        fh.write("\n")
