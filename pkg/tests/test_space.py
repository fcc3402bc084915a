import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import const_gf, random_gf
from fpforge import (
    Grid,
    GridFunction,
    GridMismatch,
    InvalidSpace,
    SpaceSpec,
    TimeNorm,
    axpy,
    cumulative_integral,
    norm,
)
from fpforge.space import read_csv, write_csv


LP2 = SpaceSpec(TimeNorm.LP, vector_p=2.0, lp_exponent=2.0)
SUP2 = SpaceSpec(TimeNorm.SUP, vector_p=2.0)
W1 = SpaceSpec(TimeNorm.W1INF, vector_p=2.0)


class TestNorm:
    def test_zero_function_is_zero_in_every_norm(self, unit_grid):
        z = const_gf(unit_grid, 0.0, dim=3)
        for spec in (LP2, SUP2, W1, SpaceSpec(TimeNorm.SUP, vector_p=math.inf)):
            assert norm(z, spec) == 0.0

    def test_constant_one_has_unit_l2_norm(self, unit_grid):
        assert norm(const_gf(unit_grid, 1.0), LP2) == pytest.approx(1.0, abs=1e-14)

    def test_identity_curve_l2_norm(self):
        # integral of t^2 over [0,1] is 1/3
        g = Grid(1.0, 1000)
        u = GridFunction(g, g.nodes[:, None])
        assert norm(u, LP2) == pytest.approx(1.0 / math.sqrt(3.0), abs=1e-4)

    def test_zero_only_for_zero_values(self, unit_grid, rng):
        u = random_gf(rng, unit_grid, dim=2)
        assert norm(u, LP2) > 0
        assert norm(u, SUP2) > 0

    def test_vector_p_inf_is_max_coordinate(self, unit_grid):
        u = GridFunction(unit_grid, np.tile([1.0, -3.0], (unit_grid.n_steps + 1, 1)))
        assert norm(u, SpaceSpec(TimeNorm.SUP, vector_p=math.inf)) == 3.0

    def test_w1inf_combines_value_and_slope(self):
        g = Grid(1.0, 10)
        u = GridFunction(g, (2.0 * g.nodes)[:, None])  # value sup 2, slope 2
        assert norm(u, W1) == pytest.approx(4.0, rel=1e-12)

    def test_w1inf_needs_two_steps(self):
        g = Grid(1.0, 1)
        with pytest.raises(InvalidSpace):
            norm(const_gf(g, 1.0), W1)

    def test_lp_requires_exponent(self):
        with pytest.raises(InvalidSpace):
            SpaceSpec(TimeNorm.LP, vector_p=2.0)
        with pytest.raises(InvalidSpace):
            SpaceSpec(TimeNorm.LP, vector_p=2.0, lp_exponent=1.0)

    def test_lp_norms_increase_towards_sup_on_unit_interval(self, rng):
        # On a length-1 interval the trapezoid weights are a probability
        # measure, so Lp norms are nondecreasing in p.
        g = Grid(1.0, 64)
        u = random_gf(rng, g, dim=2)
        vals = [norm(u, SpaceSpec(TimeNorm.LP, vector_p=2.0, lp_exponent=p))
                for p in (2, 4, 8, 16, 32)]
        for lo, hi in zip(vals, vals[1:]):
            assert hi >= lo - 1e-9
        assert vals[-1] <= norm(u, SUP2) + 1e-9


class TestAxpy:
    def test_a_zero_returns_v(self, unit_grid, rng):
        u, v = random_gf(rng, unit_grid), random_gf(rng, unit_grid)
        assert np.array_equal(axpy(0.0, u, v).values, v.values)

    def test_identity_and_cancellation(self, unit_grid, rng):
        u = random_gf(rng, unit_grid)
        z = const_gf(unit_grid, 0.0)
        assert np.array_equal(axpy(1.0, u, z).values, u.values)
        assert np.allclose(axpy(-1.0, u, u).values, 0.0)

    def test_mismatch_raises(self, unit_grid, rng):
        u = random_gf(rng, unit_grid)
        v = random_gf(rng, Grid(1.0, 50))
        with pytest.raises(GridMismatch):
            axpy(1.0, u, v)
        with pytest.raises(GridMismatch):
            axpy(1.0, u, random_gf(rng, unit_grid, dim=2))


class TestCumulativeIntegral:
    def test_exact_on_constants(self, unit_grid):
        out = cumulative_integral(const_gf(unit_grid, 1.0))
        assert np.allclose(out.values[:, 0], unit_grid.nodes, atol=1e-15)

    def test_exact_on_linear(self):
        g = Grid(1.0, 7)
        out = cumulative_integral(GridFunction(g, g.nodes[:, None]))
        assert out.values[-1, 0] == pytest.approx(0.5, abs=1e-15)

    def test_quadratic_has_second_order_error(self):
        g = Grid(1.0, 100)
        out = cumulative_integral(GridFunction(g, (g.nodes**2)[:, None]))
        assert out.values[-1, 0] == pytest.approx(1.0 / 3.0, abs=1e-4)

    @given(a=st.floats(-5, 5), b=st.floats(-5, 5))
    @settings(max_examples=50, deadline=None)
    def test_exact_on_degree_one_polynomials(self, a, b):
        g = Grid(2.0, 13)
        w = GridFunction(g, (a * g.nodes + b)[:, None])
        out = cumulative_integral(w)
        exact = 0.5 * a * g.nodes**2 + b * g.nodes
        assert np.allclose(out.values[:, 0], exact, atol=1e-12 * (1 + abs(a) + abs(b)))

    def test_starts_at_zero(self, unit_grid, rng):
        assert np.all(cumulative_integral(random_gf(rng, unit_grid, dim=3)).values[0] == 0.0)


@given(data=st.data())
@settings(max_examples=80, deadline=None)
def test_triangle_inequality_and_homogeneity(data):
    n = data.draw(st.integers(2, 12), label="n_steps")
    d = data.draw(st.integers(1, 3), label="dim")
    g = Grid(1.0, n)
    elems = st.floats(-100, 100, allow_nan=False)
    u = GridFunction(g, np.array(data.draw(
        st.lists(st.lists(elems, min_size=d, max_size=d), min_size=n + 1, max_size=n + 1))))
    v = GridFunction(g, np.array(data.draw(
        st.lists(st.lists(elems, min_size=d, max_size=d), min_size=n + 1, max_size=n + 1))))
    # Moderate scales: |a|^4 must not underflow for the relative check.
    a = data.draw(st.one_of(st.just(0.0), st.floats(0.001, 10), st.floats(-10, -0.001)),
                  label="scale")
    for spec in (LP2, SUP2, SpaceSpec(TimeNorm.LP, vector_p=3.0, lp_exponent=4.0),
                 SpaceSpec(TimeNorm.SUP, vector_p=1.0)):
        nu, nv = norm(u, spec), norm(v, spec)
        assert norm(u + v, spec) <= nu + nv + 1e-12 * (1 + nu + nv)
        assert norm(a * u, spec) == pytest.approx(abs(a) * nu, rel=1e-12, abs=1e-300)


class TestCsv:
    def test_round_trip_preserves_values(self, tmp_path, rng):
        g = Grid(1.5, 17)
        u = random_gf(rng, g, dim=3)
        path = tmp_path / "u.csv"
        write_csv(u, path)
        header = path.read_text().splitlines()[0]
        assert header == "t,x1,x2,x3"
        v = read_csv(path)
        assert v.grid == g
        assert np.array_equal(v.values, u.values)  # 17 significant digits round-trips floats

    def test_values_are_immutable(self, unit_grid):
        u = const_gf(unit_grid, 1.0)
        with pytest.raises(ValueError):
            u.values[0, 0] = 2.0


class TestGridValidation:
    def test_bad_grid(self):
        with pytest.raises(InvalidSpace):
            Grid(0.0, 10)
        with pytest.raises(InvalidSpace):
            Grid(1.0, 0)

    def test_bad_values(self, unit_grid):
        with pytest.raises(GridMismatch):
            GridFunction(unit_grid, np.zeros((3, 1)))
        with pytest.raises(InvalidSpace):
            GridFunction(unit_grid, np.full((unit_grid.n_steps + 1, 1), np.nan))
