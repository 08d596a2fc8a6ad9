"""Immutable container for an ordered sequence of observations."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ParameterError, ParseError


@dataclass(frozen=True, eq=False)
class Series:
    """Ordered real-valued observations with optional timestamps.

    ``values`` is stored as a read-only float64 copy, so a Series can be
    shared freely between threads.
    """

    values: np.ndarray
    timestamps: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=float).ravel()
        if arr.size < 1:
            raise ParameterError("a Series needs at least one observation")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("Series values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        if self.timestamps is not None:
            ts = tuple(str(t) for t in self.timestamps)
            if len(ts) != arr.size:
                raise ParameterError(
                    f"{len(ts)} timestamps supplied for {arr.size} values"
                )
            object.__setattr__(self, "timestamps", ts)

    def __len__(self) -> int:
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)

    @property
    def n(self) -> int:
        return self.values.size

    @classmethod
    def of(cls, values: Sequence[float] | np.ndarray | "Series") -> "Series":
        if isinstance(values, Series):
            return values
        return cls(np.asarray(values, dtype=float))


def write_csv(series: Series, path: str | Path) -> None:
    """Write ``series`` with a ``value`` column (and ``timestamp`` if present).

    Floats are written with 17 significant digits so they round-trip.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if series.timestamps is None:
            w.writerow(["value"])
            w.writerows([f"{v:.17g}"] for v in series.values)
        else:
            w.writerow(["timestamp", "value"])
            w.writerows([t, f"{v:.17g}"] for t, v in zip(series.timestamps, series.values))


def read_csv(path: str | Path) -> Series:
    """Read a Series from a CSV with a header row and a ``value`` column.

    Rows whose value is missing (including blank lines before the last
    data row) or not a finite number are collected and reported together;
    row numbers count the header as row 1.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file, expected a header row")
    header = [h.strip().lower() for h in rows[0]]
    if "value" not in header:
        raise ParseError(f"{path}: header has no 'value' column", rows=[1])
    vi = header.index("value")
    ti = header.index("timestamp") if "timestamp" in header else None
    blank = [not row or all(not c.strip() for c in row) for row in rows]
    while len(rows) > 1 and blank[-1]:  # trailing blank lines are tolerated
        rows.pop()
        blank.pop()
    values, stamps, bad = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if blank[lineno - 1]:
            bad.append(lineno)
            continue
        try:
            v = float(row[vi])
        except (IndexError, ValueError):
            v = math.nan
        if not math.isfinite(v):
            bad.append(lineno)
            continue
        values.append(v)
        if ti is not None:
            stamps.append(row[ti].strip() if ti < len(row) else "")
    if bad:
        shown = ", ".join(map(str, bad[:20])) + (" ..." if len(bad) > 20 else "")
        raise ParseError(f"{path}: missing or non-numeric values in rows {shown}", rows=bad)
    if not values:
        raise ParseError(f"{path}: no data rows")
    return Series(np.array(values), tuple(stamps) if ti is not None else None)
