"""Uniformly sampled multivariate time series: container, CSV I/O, scaling."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

MIN_SAMPLES = 10
_MIN_STD = 1e-12


class DataError(ValueError):
    """Raised for malformed or invalid time-series input."""


@dataclass(frozen=True, eq=False)
class TimeSeriesDataset:
    """Named multivariate series, ``values`` has shape (T, N).

    The array is copied and flagged read-only on construction so a dataset
    can be shared across workers without defensive copies.
    """

    names: tuple
    values: np.ndarray
    dt: Optional[float] = None

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise DataError(f"values must be 2-D (T, N), got shape {values.shape}")
        if values.shape[1] != len(names):
            raise DataError(
                f"{len(names)} names for {values.shape[1]} columns")
        _check_names(names)
        if values.shape[0] < MIN_SAMPLES:
            raise DataError(
                f"need at least {MIN_SAMPLES} samples, got {values.shape[0]}")
        bad = np.argwhere(~np.isfinite(values))
        if len(bad):
            row, col = bad[0]
            raise DataError(
                f"non-finite value at sample {row}, variable {names[col]!r}")
        if self.dt is not None and not (self.dt > 0 and math.isfinite(self.dt)):
            raise DataError(f"dt must be positive, got {self.dt}")
        values.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", values)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.index(name)]

    def subset(self, names: Sequence[str]) -> "TimeSeriesDataset":
        """Dataset restricted to ``names``, in the given order."""
        idx = [self.index(n) for n in names]
        return TimeSeriesDataset(tuple(names), self.values[:, idx], self.dt)

    def __eq__(self, other):
        if not isinstance(other, TimeSeriesDataset):
            return NotImplemented
        return (self.names == other.names and self.dt == other.dt
                and self.values.shape == other.values.shape
                and bool(np.array_equal(self.values, other.values)))

    def __repr__(self):
        return f"TimeSeriesDataset(names={list(self.names)}, T={self.T})"


def _check_names(names):
    seen = set()
    for col, name in enumerate(names):
        if not name.strip():
            raise DataError(f"empty variable name in column {col + 1}")
        if name in seen:
            raise DataError(f"duplicate variable name {name!r} in column {col + 1}")
        seen.add(name)


def parse_csv(text: str, source: str = "<string>") -> TimeSeriesDataset:
    """Parse CSV text (header row, then one sample per row)."""
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r]
    if not rows:
        raise DataError(f"{source}: empty file")
    header = [h.strip() for h in rows[0]]
    try:
        _check_names(header)
    except DataError as err:
        raise DataError(f"{source}: header: {err}") from None
    n = len(header)
    values = np.empty((len(rows) - 1, n))
    for i, row in enumerate(rows[1:]):
        line = i + 2
        if len(row) != n:
            raise DataError(
                f"{source}: row {line} has {len(row)} fields, expected {n}")
        for j, cell in enumerate(row):
            cell = cell.strip()
            if not cell:
                raise DataError(
                    f"{source}: missing value at row {line}, column {header[j]!r}")
            try:
                v = float(cell)
            except ValueError:
                raise DataError(
                    f"{source}: non-numeric value {cell!r} at row {line}, "
                    f"column {header[j]!r}") from None
            if not math.isfinite(v):
                raise DataError(
                    f"{source}: non-finite value {cell!r} at row {line}, "
                    f"column {header[j]!r}")
            values[i, j] = v
    return TimeSeriesDataset(tuple(header), values)


def load_csv(path) -> TimeSeriesDataset:
    """Load a dataset from a UTF-8 CSV file with a header row."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    return parse_csv(path.read_text(encoding="utf-8"), source=str(path))


def to_csv(ds: TimeSeriesDataset) -> str:
    """Serialize with shortest round-trip float formatting."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(ds.names)
    for row in ds.values:
        writer.writerow([repr(float(v)) for v in row])
    return out.getvalue()


def save_csv(ds: TimeSeriesDataset, path) -> None:
    Path(path).write_text(to_csv(ds), encoding="utf-8")


def standardize(ds: TimeSeriesDataset) -> TimeSeriesDataset:
    """Zero mean, unit sample standard deviation (n-1 denominator) per column."""
    v = ds.values
    std = v.std(axis=0, ddof=1)
    for j, s in enumerate(std):
        if not s > _MIN_STD:
            raise DataError(f"zero variance in {ds.names[j]}")
    z = (v - v.mean(axis=0)) / std
    # one refinement pass pulls the moments to within rounding of (0, 1)
    z = z - z.mean(axis=0)
    z = z / z.std(axis=0, ddof=1)
    return TimeSeriesDataset(ds.names, z, ds.dt)
