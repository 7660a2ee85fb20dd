"""Rectangular (t, y) grids and the field containers evaluated on them."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["Grid", "TwoParamField", "TimeField", "write_fields_csv"]


def _check_axis(vals, name):
    arr = np.asarray(vals, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} grid axis must be a nonempty 1-D sequence")
    if np.any(arr < 0):
        raise ValueError(f"{name} grid axis must be nonnegative")
    if np.any(np.diff(arr) <= 0):
        raise ValueError(f"{name} grid axis must be strictly increasing")
    return arr


@dataclass(frozen=True)
class Grid:
    t: np.ndarray
    y: np.ndarray

    def __init__(self, t, y):
        object.__setattr__(self, "t", _check_axis(t, "t"))
        object.__setattr__(self, "y", _check_axis(y, "y"))

    @property
    def shape(self):
        return (len(self.t), len(self.y))

    def same_as(self, other: "Grid") -> bool:
        return (len(self.t) == len(other.t) and len(self.y) == len(other.y)
                and np.array_equal(self.t, other.t) and np.array_equal(self.y, other.y))


@dataclass(frozen=True)
class TwoParamField:
    """Values of one process over grid.t x grid.y."""
    grid: Grid
    values: np.ndarray
    label: str

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError(f"field {self.label!r}: values shape {vals.shape} != grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"field {self.label!r}: non-finite entries")
        object.__setattr__(self, "values", vals)

    def rows(self):
        for i, t in enumerate(self.grid.t):
            for j, y in enumerate(self.grid.y):
                yield (self.label, float(t), float(y), float(self.values[i, j]))


@dataclass(frozen=True)
class TimeField:
    """Values of a process constant in (or without) the second argument."""
    t: np.ndarray
    values: np.ndarray
    label: str

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != np.asarray(self.t).shape:
            raise ValueError(f"field {self.label!r}: values shape mismatch")
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"field {self.label!r}: non-finite entries")
        object.__setattr__(self, "values", vals)

    def rows(self):
        for t, v in zip(self.t, self.values):
            yield (self.label, float(t), 0.0, float(v))


def write_fields_csv(path, fields) -> None:
    """Common export schema: one row per (label, t, y, value)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "t", "y", "value"])
        for f in fields:
            for label, t, y, v in f.rows():
                writer.writerow([label, f"{t:.12g}", f"{y:.12g}", f"{v:.12g}"])
