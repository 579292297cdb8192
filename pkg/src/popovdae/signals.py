"""Uniform time grids and piecewise-constant signals.

A :class:`Signal` with values ``u_k`` on ``[t_k, t_{k+1})`` represents an
element of ``L^2([0, t_f], R^d)``; the inner product is
``<u, v> = sum_k dt * <u_k, v_k>``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, GridMismatch


@dataclass(frozen=True)
class TimeGrid:
    t_f: float
    m: int

    def __post_init__(self):
        if not (isinstance(self.m, (int, np.integer)) and self.m >= 1):
            raise ValueError(f"need at least one step, got m={self.m!r}")
        if not (math.isfinite(self.t_f) and self.t_f > 0):
            raise ValueError(f"t_f must be positive, got {self.t_f!r}")
        object.__setattr__(self, "t_f", float(self.t_f))
        object.__setattr__(self, "m", int(self.m))

    @property
    def dt(self) -> float:
        return self.t_f / self.m

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.m + 1) * self.dt

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.m) + 0.5) * self.dt

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.t_f, self.m * factor)


@dataclass(frozen=True, eq=False)
class Signal:
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.grid.m:
            raise DimensionMismatch(
                f"signal needs {self.grid.m} interval values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("signal values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @classmethod
    def zeros(cls, grid: TimeGrid, dim: int) -> "Signal":
        return cls(grid, np.zeros((grid.m, dim)))

    @classmethod
    def constant(cls, grid: TimeGrid, value) -> "Signal":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(grid, np.tile(value, (grid.m, 1)))

    @classmethod
    def from_function(cls, grid: TimeGrid, fn) -> "Signal":
        """Sample ``fn`` at interval midpoints."""
        return cls(grid, np.array([np.atleast_1d(fn(t)) for t in grid.midpoints]))

    @classmethod
    def from_stacked(cls, grid: TimeGrid, vec, dim: int) -> "Signal":
        return cls(grid, np.asarray(vec, dtype=float).reshape(grid.m, dim))

    def stacked(self) -> np.ndarray:
        return self.values.reshape(-1).copy()

    def map(self, M: np.ndarray) -> "Signal":
        """Apply the same matrix on every interval."""
        return Signal(self.grid, self.values @ np.asarray(M).T)

    def refined(self, factor: int = 2) -> "Signal":
        return Signal(self.grid.refined(factor), np.repeat(self.values, factor, axis=0))

    def inner(self, other: "Signal") -> float:
        if other.grid != self.grid:
            raise GridMismatch("signals live on different grids")
        return float(self.grid.dt * np.sum(self.values * other.values))

    def norm(self) -> float:
        return math.sqrt(self.inner(self))

    def __add__(self, other: "Signal") -> "Signal":
        if other.grid != self.grid:
            raise GridMismatch("signals live on different grids")
        return Signal(self.grid, self.values + other.values)

    def __mul__(self, c: float) -> "Signal":
        return Signal(self.grid, c * self.values)

    __rmul__ = __mul__

    def to_csv(self, path, name: str = "u") -> None:
        """One row per interval midpoint: ``t,<name>_1,...``."""
        header = ["t"] + [f"{name}_{i + 1}" for i in range(self.dim)]
        _write_rows(path, header, self.grid.midpoints, self.values)

    @classmethod
    def from_csv(cls, path, grid: TimeGrid | None = None) -> "Signal":
        """Read a signal CSV written by :meth:`to_csv`.

        Without ``grid`` the step is inferred from the first midpoint.
        """
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if len(rows) < 2:
            raise ValueError(f"{path}: no data rows")
        data = np.array([[float(x) for x in row] for row in rows[1:]])
        if grid is None:
            grid = TimeGrid(2.0 * data[0, 0] * len(data), len(data))
        return cls(grid, data[:, 1:])


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Node states of a mild solution.

    ``differential[k]`` is the continuous ``X_R`` part at ``t_k`` and
    ``algebraic[j]`` the ``X_K`` part on interval ``j``. Node states use the
    left-interval value of the algebraic part (the first interval at
    ``t_0``); ``interval_start(j)`` gives the right limit at ``t_j``.
    """

    grid: TimeGrid
    differential: np.ndarray
    algebraic: np.ndarray
    consistency_gap: float = 0.0
    _states: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = self.grid.m
        if self.differential.shape[0] != m + 1 or self.algebraic.shape[0] != m:
            raise DimensionMismatch("trajectory arrays do not match the grid")
        left = np.vstack([self.algebraic[:1], self.algebraic])
        object.__setattr__(self, "_states", self.differential + left)

    @property
    def states(self) -> np.ndarray:
        return self._states

    @property
    def dim(self) -> int:
        return self.differential.shape[1]

    def interval_start(self) -> np.ndarray:
        """Right limits ``x(t_j^+)``, shape ``(m, n)``."""
        return self.differential[:-1] + self.algebraic

    def to_csv(self, path, name: str = "x") -> None:
        header = ["t"] + [f"{name}_{i + 1}" for i in range(self.dim)]
        _write_rows(path, header, self.grid.nodes, self.states)


def _write_rows(path, header, times, values) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, row in zip(times, values):
            w.writerow([format_float(t)] + [format_float(v) for v in row])


def format_float(v) -> str:
    return "%.17g" % float(v)
