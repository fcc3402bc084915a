"""Shared helpers for the test suite."""

import numpy as np
import pytest

from fpforge import Grid, GridFunction, SpaceSpec, TimeNorm


def const_gf(grid, value, dim=1):
    """Constant grid function (scalar broadcast to every node)."""
    return GridFunction(grid, np.full((grid.n_steps + 1, dim), float(value)))


def random_gf(rng, grid, dim=1, scale=1.0):
    return GridFunction(grid, scale * rng.standard_normal((grid.n_steps + 1, dim)))


@pytest.fixture
def unit_grid():
    return Grid(t_end=1.0, n_steps=100)


@pytest.fixture
def sup2():
    return SpaceSpec(TimeNorm.SUP, vector_p=2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
