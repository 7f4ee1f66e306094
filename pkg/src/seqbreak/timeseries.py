"""Univariate series container, CSV ingestion, differencing and sample splits."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

FREQUENCIES = ("weekly", "monthly", "untagged")


class DataError(ValueError):
    """Raised for unusable input data (missing file, bad cell, short series)."""


@dataclass(frozen=True)
class TimeSeries:
    """Ordered finite observations with an optional label per period.

    ``values`` is stored as a read-only float64 array. Labels are opaque
    strings (e.g. ``"2008-10"``) carried along so detections can be dated.
    """

    values: np.ndarray
    frequency: str = "untagged"
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64).ravel()
        if vals.size == 0:
            raise DataError("series is empty")
        if not np.all(np.isfinite(vals)):
            bad = int(np.flatnonzero(~np.isfinite(vals))[0])
            raise DataError(f"non-finite value at position {bad}")
        if self.frequency not in FREQUENCIES:
            raise DataError(f"unknown frequency {self.frequency!r}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.labels is not None:
            labels = tuple(str(lab) for lab in self.labels)
            if len(labels) != vals.size:
                raise DataError(f"{len(labels)} labels for {vals.size} values")
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.values.size

    def label(self, index: int) -> str | None:
        """Label at 0-based ``index`` or None when the series is unlabelled."""
        return None if self.labels is None else self.labels[index]

    def slice(self, start: int, stop: int) -> "TimeSeries":
        labels = None if self.labels is None else self.labels[start:stop]
        return TimeSeries(self.values[start:stop], self.frequency, labels)

    def to_csv(self, path: str | Path, header: bool = True) -> None:
        """Write one value per row (``repr`` keeps float64 bit-exact), label first if present."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            if header:
                writer.writerow(["label", "value"] if self.labels is not None else ["value"])
            for i, v in enumerate(self.values):
                cell = repr(float(v))
                writer.writerow([self.labels[i], cell] if self.labels is not None else [cell])


@dataclass(frozen=True)
class SampleSplit:
    """Historical length ``n``, total length ``N`` and horizon multiple ``T``."""

    n: int
    N: int
    T: float

    @property
    def monitoring_length(self) -> int:
        return self.N - self.n


def _column_index(header: list[str] | None, column: str | int) -> int:
    if isinstance(column, int):
        return column
    if column.lstrip("-").isdigit():
        return int(column)
    if header is None:
        raise DataError(f"column {column!r} given by name but the file has no header")
    try:
        return header.index(column)
    except ValueError:
        raise DataError(f"column {column!r} not in header {header}") from None


def load_csv(
    path: str | Path,
    column: str | int = 0,
    header: bool = False,
    label_column: str | int | None = None,
    frequency: str = "untagged",
) -> TimeSeries:
    """Read one numeric column of a comma-separated file, rows in time order.

    Blank or non-numeric cells are rejected with the 1-based data row number;
    nothing is imputed.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh)]
    names = None
    if header:
        if not rows:
            raise DataError(f"{path} is empty")
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
    col = _column_index(names, column)
    lab_col = None if label_column is None else _column_index(names, label_column)

    values = []
    labels = [] if lab_col is not None else None
    for i, row in enumerate(rows, start=1):
        if not row or all(not c.strip() for c in row):
            raise DataError(f"row {i}: blank row")
        try:
            cell = row[col].strip()
        except IndexError:
            raise DataError(f"row {i}: missing column {column!r}") from None
        if not cell:
            raise DataError(f"row {i}: blank cell in column {column!r}")
        try:
            val = float(cell)
        except ValueError:
            raise DataError(f"row {i}: cannot parse {cell!r} as a number") from None
        if not math.isfinite(val):
            raise DataError(f"row {i}: non-finite value {cell!r}")
        values.append(val)
        if labels is not None:
            labels.append(row[lab_col].strip())
    if not values:
        raise DataError(f"column {column!r} of {path} is empty")
    return TimeSeries(np.array(values), frequency, labels)


def difference(series: TimeSeries, order: int = 1) -> TimeSeries:
    """Apply first differencing ``order`` times; labels keep the later period."""
    if order < 1:
        raise ValueError("order must be a positive count")
    if order >= len(series):
        raise DataError(f"cannot difference a length-{len(series)} series {order} times")
    vals = np.diff(series.values, n=order)
    labels = None if series.labels is None else series.labels[order:]
    return TimeSeries(vals, series.frequency, labels)


def split(series: TimeSeries | Sequence[float] | int, n: int, T: float = 2.0) -> SampleSplit:
    """Historical/monitoring split with ``N = ceil(n*T)``.

    ``series`` may also be a plain length.
    """
    length = series if isinstance(series, int) else len(series)
    if n < 1:
        raise DataError("historical length n must be >= 1")
    if T < 1:
        raise DataError("horizon multiple T must be >= 1")
    N = math.ceil(round(n * T, 9))
    if N <= n:
        raise DataError(f"N = ceil({n}*{T}) = {N} leaves no monitoring period")
    if N > length:
        raise DataError(f"need N = {N} observations, series has {length}")
    return SampleSplit(n=n, N=N, T=float(T))
