"""Nonnegative step functions on an abstract finite measure space.

A :class:`StepFunction` is a finite list of ``(value, weight)`` cells: the
function takes ``value`` on a set of measure ``weight``.  Geometry is not
recorded, only the measure of each level piece, which is all that the
distribution function, the rearrangement and the maximal function need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = ["StepFunction", "distribution", "rearrangement", "maximal"]


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float).reshape(-1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Finitely many cells ``(value, weight)`` with ``value >= 0`` and ``weight > 0``."""

    values: np.ndarray
    weights: np.ndarray
    total_mass: float = field(init=False)

    def __post_init__(self):
        values = _frozen(self.values)
        weights = _frozen(self.weights)
        if values.shape != weights.shape:
            raise ValueError("values and weights must have the same length")
        if not np.all(np.isfinite(values)) or not np.all(np.isfinite(weights)):
            raise ValueError("values and weights must be finite")
        if np.any(values < 0):
            raise ValueError("cell values must be nonnegative")
        if np.any(weights <= 0):
            raise ValueError("cell weights must be positive")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)
        # left-to-right accumulation over the stored order
        total = 0.0
        for w in weights.tolist():
            total += w
        object.__setattr__(self, "total_mass", total)

    @classmethod
    def from_cells(cls, cells: Iterable[Sequence[float]]) -> "StepFunction":
        cells = [tuple(c) for c in cells]
        if any(len(c) != 2 for c in cells):
            raise ValueError("each cell must be a (value, weight) pair")
        if not cells:
            return cls.zero()
        v, w = zip(*cells)
        return cls(v, w)

    @classmethod
    def zero(cls) -> "StepFunction":
        return cls(np.zeros(0), np.zeros(0))

    @property
    def cells(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.weights.tolist()))

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, StepFunction):
            return NotImplemented
        return np.array_equal(self.values, other.values) and np.array_equal(
            self.weights, other.weights
        )

    def __hash__(self) -> int:
        return hash((self.values.tobytes(), self.weights.tobytes()))

    def __repr__(self) -> str:
        return f"StepFunction({self.cells!r})"

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values > 0)

    def power(self, alpha: float) -> "StepFunction":
        """Cellwise ``value ** alpha``."""
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        return StepFunction(self.values**alpha, self.weights)

    def scale(self, c: float) -> "StepFunction":
        if c < 0:
            raise ValueError("scale factor must be nonnegative")
        return StepFunction(self.values * c, self.weights)

    def restrict(self, indices: Iterable[int]) -> "StepFunction":
        """Keep only the listed cells (multiplication by an indicator)."""
        idx = np.asarray(sorted(set(int(i) for i in indices)), dtype=int)
        if idx.size and (idx[0] < 0 or idx[-1] >= len(self)):
            raise IndexError("cell index out of range")
        return StepFunction(self.values[idx], self.weights[idx])

    def concat(self, other: "StepFunction") -> "StepFunction":
        return StepFunction(
            np.concatenate([self.values, other.values]),
            np.concatenate([self.weights, other.weights]),
        )

    def to_json(self) -> dict:
        return {"cells": [[v, w] for v, w in self.cells]}

    @classmethod
    def from_json(cls, obj: dict) -> "StepFunction":
        if "cells" not in obj:
            raise ValueError("step function JSON needs a 'cells' key")
        return cls.from_cells(obj["cells"])


def distribution(f: StepFunction, t: float) -> float:
    """Measure of ``{f > t}``."""
    if t < 0:
        raise ValueError("distribution function is defined for t >= 0")
    return math.fsum(f.weights[f.values > t].tolist())


def rearrangement(f: StepFunction) -> StepFunction:
    """Nonincreasing rearrangement as a step function on ``[0, total_mass)``.

    Cells are sorted by value in decreasing order and cells of equal value
    are merged, so the returned values are strictly decreasing.
    """
    if len(f) == 0:
        return StepFunction.zero()
    order = np.argsort(-f.values, kind="stable")
    vals = f.values[order]
    wts = f.weights[order]
    starts = np.flatnonzero(np.r_[True, vals[1:] != vals[:-1]])
    ends = np.r_[starts[1:], vals.size]
    merged = [math.fsum(wts[s:e].tolist()) for s, e in zip(starts, ends)]
    return StepFunction(vals[starts], merged)


def breakpoints(fstar: StepFunction) -> np.ndarray:
    """Right endpoints of the cells of a rearranged function."""
    return np.cumsum(fstar.weights)


def maximal(f: StepFunction, t: float) -> float:
    """``f**(t) = (1/t) * integral of f* over [0, t]``."""
    if t <= 0:
        raise ValueError("maximal function is defined for t > 0")
    fs = rearrangement(f)
    if len(fs) == 0:
        return 0.0
    b = breakpoints(fs)
    a = np.r_[0.0, b[:-1]]
    covered = np.clip(np.minimum(b, t) - a, 0.0, None)
    return float(np.dot(fs.values, covered)) / t
