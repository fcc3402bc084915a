"""Grid functions on a uniform time grid and their discrete norms.

A curve [0, T] -> R^d is stored as an (n_steps + 1) x d matrix of node
values.  Three time-norm families are supported: sup-in-t, Lp-in-t via
the composite trapezoid rule, and a discrete W^{1,inf} norm (sup of
values plus sup of forward difference quotients).  All objects are
immutable after construction and all operations are pure.
"""

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import GridMismatch, InvalidSpace


class TimeNorm(Enum):
    SUP = "sup"
    LP = "lp"
    W1INF = "w1inf"


@dataclass(frozen=True)
class Grid:
    """Uniform nodes t_i = i * t_end / n_steps, i = 0..n_steps."""

    t_end: float
    n_steps: int

    def __post_init__(self):
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise InvalidSpace(f"t_end must be a positive finite real, got {self.t_end}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise InvalidSpace(f"n_steps must be a positive integer, got {self.n_steps}")

    @property
    def h(self):
        return self.t_end / self.n_steps

    @cached_property
    def nodes(self):
        t = np.linspace(0.0, self.t_end, self.n_steps + 1)
        t.setflags(write=False)
        return t

    @cached_property
    def trapezoid_weights(self):
        w = np.full(self.n_steps + 1, self.h)
        w[0] = w[-1] = self.h / 2.0
        w.setflags(write=False)
        return w


@dataclass(frozen=True)
class GridFunction:
    """Node values of a curve on a Grid; values has shape (n_steps + 1, d)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.grid.n_steps + 1 or v.shape[1] < 1:
            raise GridMismatch(
                f"values shape {np.shape(self.values)} does not match grid with "
                f"{self.grid.n_steps + 1} nodes"
            )
        if not np.all(np.isfinite(v)):
            raise InvalidSpace("grid function values must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self):
        return self.values.shape[1]

    def _check_compatible(self, other):
        if self.grid != other.grid or self.dim != other.dim:
            raise GridMismatch("grid functions live on different grids or dimensions")

    def __add__(self, other):
        self._check_compatible(other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check_compatible(other)
        return GridFunction(self.grid, self.values - other.values)

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __rmul__(self, a):
        return GridFunction(self.grid, float(a) * self.values)


def zeros(grid, dim=1):
    return GridFunction(grid, np.zeros((grid.n_steps + 1, dim)))


def constant(grid, vec):
    vec = np.atleast_1d(np.asarray(vec, dtype=float))
    return GridFunction(grid, np.tile(vec, (grid.n_steps + 1, 1)))


@dataclass(frozen=True)
class SpaceSpec:
    """Norm descriptor: time norm, pointwise R^d exponent, Lp time exponent."""

    time_norm: TimeNorm
    vector_p: float = 2.0
    lp_exponent: float = None

    def __post_init__(self):
        if not (self.vector_p >= 1):  # also rejects NaN
            raise InvalidSpace(f"vector_p must lie in [1, inf], got {self.vector_p}")
        if self.time_norm is TimeNorm.LP:
            e = self.lp_exponent
            if e is None or not (1 < e < math.inf):
                raise InvalidSpace(f"LP time norm needs lp_exponent in (1, inf), got {e}")


def node_norms(values, p):
    """Pointwise R^d p-norms of each row; p = inf means max coordinate."""
    a = np.abs(values)
    if p == math.inf:
        return a.max(axis=1)
    if p == 1:
        return a.sum(axis=1)
    if p == 2:
        return np.sqrt((a * a).sum(axis=1))
    return (a**p).sum(axis=1) ** (1.0 / p)


def norm(u, spec):
    """Discrete norm of a GridFunction under the given SpaceSpec."""
    vn = node_norms(u.values, spec.vector_p)
    if spec.time_norm is TimeNorm.SUP:
        return float(vn.max())
    if spec.time_norm is TimeNorm.LP:
        pe = spec.lp_exponent
        return float((u.grid.trapezoid_weights @ vn**pe) ** (1.0 / pe))
    # W1INF: sup of values plus sup of forward difference quotients
    if u.grid.n_steps < 2:
        raise InvalidSpace("W1INF norm needs a grid with n_steps >= 2")
    dq = node_norms(np.diff(u.values, axis=0), spec.vector_p) / u.grid.h
    return float(vn.max() + dq.max())


def axpy(a, u, v):
    """a * u + v, nodewise."""
    u._check_compatible(v)
    return GridFunction(u.grid, float(a) * u.values + v.values)


def cumulative_integral(w):
    """Running trapezoid integral: out(t_i) ~ integral of w over [0, t_i], out(0) = 0.

    Exact (to round-off) whenever w is piecewise linear on the grid.
    """
    h = w.grid.h
    steps = 0.5 * h * (w.values[:-1] + w.values[1:])
    out = np.vstack([np.zeros((1, w.dim)), np.cumsum(steps, axis=0)])
    return GridFunction(w.grid, out)


def write_csv(u, path):
    """Write `t,x1,...,xd` rows with 17 significant digits."""
    header = "t," + ",".join(f"x{j + 1}" for j in range(u.dim))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for t, row in zip(u.grid.nodes, u.values):
            fh.write(format(t, ".17g") + "," + ",".join(format(x, ".17g") for x in row) + "\n")


def read_csv(path):
    """Read a GridFunction written by write_csv; the grid is recovered from the t column."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = data[:, 0]
    if len(t) < 2:
        raise InvalidSpace(f"{path}: need at least two rows")
    steps = np.diff(t)
    if t[0] != 0.0 or not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
        raise InvalidSpace(f"{path}: nodes are not a uniform grid starting at 0")
    grid = Grid(t_end=float(t[-1]), n_steps=len(t) - 1)
    return GridFunction(grid, data[:, 1:])
