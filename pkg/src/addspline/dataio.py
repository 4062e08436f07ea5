"""CSV/JSON input and output with lossless float round-trips.

Floats are written with 17 significant digits ('%.17g'), which reproduces the
double exactly on re-parse; JSON relies on Python's shortest-repr floats, which
round-trip as well.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "DataError",
    "Preprocessing",
    "Dataset",
    "format_float",
    "load_csv",
    "preprocess_columns",
    "read_table",
    "write_table",
    "RunReport",
]


class DataError(Exception):
    """Malformed or unusable input data."""


def format_float(value: float) -> str:
    """Decimal form with 17 significant digits; parses back bit-exactly."""
    return format(float(value), ".17g")


@dataclass(frozen=True)
class Preprocessing:
    """Record of the fitting transform: y centered, covariates scaled by max."""

    y_center: float
    x1_scale: float
    x2_scale: float
    zeros_nudged: int = 0


@dataclass(frozen=True)
class Dataset:
    """Numeric columns selected for a fit, plus the preprocessing record."""

    column_names: tuple[str, ...]
    y_name: str
    x1_name: str
    x2_name: str
    y: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    preprocessing: Preprocessing | None = None

    @property
    def n(self) -> int:
        return self.y.shape[0]


def read_table(path) -> tuple[list[str], np.ndarray]:
    """Read a numeric CSV with a header row; errors name the line and column."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [name.strip() for name in header]
        rows: list[list[float]] = []
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and row[0].strip() == ""):
                continue  # ignore blank lines
            if len(row) != len(header):
                raise DataError(
                    f"{path}: line {line_no} has {len(row)} fields, "
                    f"expected {len(header)}"
                )
            parsed = []
            for name, cell in zip(header, row):
                try:
                    value = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric value {cell!r} at line {line_no}, "
                        f"column {name!r}"
                    ) from None
                if not np.isfinite(value):
                    raise DataError(
                        f"{path}: non-finite value {cell!r} at line {line_no}, "
                        f"column {name!r}"
                    )
                parsed.append(value)
            rows.append(parsed)
    return header, np.asarray(rows, dtype=float).reshape(len(rows), len(header))


def write_table(path, header: list[str], columns: list[np.ndarray]) -> None:
    """Write columns as CSV using 17-significant-digit floats."""
    if len(header) != len(columns):
        raise ValueError("header/columns length mismatch")
    arrays = [np.asarray(c, dtype=float).ravel() for c in columns]
    n = arrays[0].shape[0]
    if any(a.shape[0] != n for a in arrays):
        raise ValueError("all columns must have equal length")
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(n):
            writer.writerow([format_float(a[i]) for a in arrays])


def preprocess_columns(
    y: np.ndarray, x1: np.ndarray, x2: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, Preprocessing]:
    """Center y and scale each covariate into (0, 1] by its maximum.

    Exact zeros after scaling are nudged to the smallest positive double (with
    a warning) so they enter the basis domain.  Negative covariate values are
    rejected.  The transform is idempotent: re-running it on its own output
    returns bit-identical arrays.
    """
    y = np.asarray(y, dtype=float).copy()
    mean = float(np.mean(y))
    if abs(mean) > 1e-12 * (float(np.max(np.abs(y), initial=0.0)) + 1.0):
        y -= mean
        center = mean
    else:
        center = 0.0
    scaled = []
    scales = []
    nudged = 0
    for name, x in (("x1", x1), ("x2", x2)):
        x = np.asarray(x, dtype=float).copy()
        if np.any(x < 0):
            raise DataError(f"{name}: negative covariate values are unsupported")
        top = float(x.max())
        if top <= 0:
            raise DataError(f"{name}: covariate maximum must be positive")
        x /= top
        zeros = x == 0.0
        if np.any(zeros):
            nudged += int(zeros.sum())
            x[zeros] = np.nextafter(0.0, 1.0)
        scaled.append(x)
        scales.append(top)
    if nudged:
        warnings.warn(
            f"{nudged} zero covariate values nudged to the smallest positive double",
            stacklevel=2,
        )
    record = Preprocessing(
        y_center=center, x1_scale=scales[0], x2_scale=scales[1], zeros_nudged=nudged
    )
    return y, scaled[0], scaled[1], record


def load_csv(
    path,
    y_col: str,
    x1_col: str,
    x2_col: str,
    preprocess: bool = True,
    min_rows: int = 10,
) -> Dataset:
    """Load the three model columns from a CSV file.

    Raises DataError for a missing file, missing column, non-numeric cell
    (named by line and column), or fewer than `min_rows` rows.
    """
    header, table = read_table(path)
    for col in (y_col, x1_col, x2_col):
        if col not in header:
            raise DataError(
                f"{path}: no column {col!r}; available: {', '.join(header)}"
            )
    if table.shape[0] < min_rows:
        raise DataError(
            f"{path}: {table.shape[0]} rows is fewer than the required {min_rows}"
        )
    y = table[:, header.index(y_col)]
    x1 = table[:, header.index(x1_col)]
    x2 = table[:, header.index(x2_col)]
    record = None
    if preprocess:
        y, x1, x2, record = preprocess_columns(y, x1, x2)
    return Dataset(
        column_names=tuple(header),
        y_name=y_col,
        x1_name=x1_col,
        x2_name=x2_col,
        y=y,
        x1=x1,
        x2=x2,
        preprocessing=record,
    )


@dataclass
class RunReport:
    """Everything a fit run produced, serializable to JSON and back losslessly."""

    command: str
    config: dict
    n: int
    converged: bool
    stages: int
    residual_norm: float
    sigma2: float
    joint_system_singular: bool
    coefficients: dict  # {"b1": [...], "b2": [...]}
    grids: dict  # per component: {"x": [...], "x_scaled": [...], "estimate", "lower", "upper"}
    runtime_seconds: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls(**json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "RunReport":
        return cls.from_json(Path(path).read_text())
