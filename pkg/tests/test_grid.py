import math

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from renormprod.grid import (
    Ball,
    DegenerateBallError,
    DyadicCube,
    Grid,
    GridFunction,
    ball_mask,
    cube_to_support_ball,
    from_bytes,
    integrate,
    periodic_displacement,
    restrict_to_ball,
    to_bytes,
    to_csv,
)

grids = st.builds(Grid, st.sampled_from([1, 2]), st.integers(0, 5), st.sampled_from([1, 2, 4, 8]))


def test_grid_geometry():
    g = Grid(1, 3, 8)
    assert g.h == 0.125
    assert g.n == 64
    assert g.axis()[0] == pytest.approx(0.0625)
    assert Grid(2, 2, 4).shape == (16, 16)


@pytest.mark.parametrize("args", [(3, 1, 1), (1, -1, 1), (1, 2, 0)])
def test_grid_rejects_bad_parameters(args):
    with pytest.raises(ValueError):
        Grid(*args)


def test_wrong_sample_count():
    with pytest.raises(ValueError):
        GridFunction(Grid(1, 2, 1), np.zeros(5))


@given(grids)
@settings(max_examples=25, deadline=None)
def test_constant_integrates_to_volume(grid):
    assert integrate(grid.constant(2.5)) == pytest.approx(2.5 * grid.L ** grid.dim)


def test_midpoint_rule_is_exact_for_linear():
    g = Grid(1, 6, 4)
    assert integrate(g.sample(lambda x: 3 * x - 1)) == pytest.approx(3 * 8 - 4, abs=1e-12)


def test_cell_average_of_square():
    g = Grid(1, 3, 1)
    avg = g.cell_average(lambda x: x ** 2)
    left = (np.arange(8) / 8.0)
    exact = ((left + 1 / 8) ** 3 - left ** 3) / 3 * 8
    assert np.allclose(avg.samples, exact, atol=1e-14)


@given(grids, st.floats(-20, 20))
@settings(max_examples=25, deadline=None)
def test_periodic_displacement_range(grid, c):
    disp = periodic_displacement(grid, (c,) * grid.dim)
    for d in disp:
        assert np.all(d >= -grid.L / 2 - 1e-12) and np.all(d < grid.L / 2 + 1e-12)


def test_ball_wraps_around_seam():
    g = Grid(1, 3, 2)
    mask = ball_mask(g, Ball((0.0,), 0.2))
    assert mask[0] and mask[-1] and mask.sum() == 4


def test_restrict_to_empty_ball():
    g = Grid(1, 1, 1)
    with pytest.raises(DegenerateBallError):
        restrict_to_ball(g.constant(1.0), Ball((0.5,), 0.1))


def test_cube_and_support_ball():
    c = DyadicCube(2, (1, 3))
    assert c.side == 0.25
    assert np.allclose(c.center, [0.375, 0.875])
    B = cube_to_support_ball(c, 3)
    assert B.radius == pytest.approx(3 * 0.25 * math.sqrt(2) / 2)
    with pytest.raises(ValueError):
        cube_to_support_ball(c, 0.5)


def test_ball_volume():
    assert Ball((0.0,), 2).volume == 4
    assert Ball((0.0, 0.0), 1).volume == pytest.approx(math.pi)
    with pytest.raises(ValueError):
        Ball((0.0,), 0)


@given(grids, st.integers(0, 2 ** 31))
@settings(max_examples=20, deadline=None)
def test_bytes_round_trip(grid, seed):
    f = GridFunction(grid, np.random.default_rng(seed).standard_normal(grid.shape))
    back = from_bytes(to_bytes(f))
    assert back.grid == grid
    assert np.array_equal(back.samples, f.samples)


def test_csv_has_header_and_rows():
    text = to_csv(Grid(1, 1, 1).constant(0.5))
    assert text.splitlines() == ["index,value", "0,0.5", "1,0.5"]


def test_arithmetic_and_norms():
    g = Grid(1, 2, 1)
    f = GridFunction(g, [1.0, -2.0, 0.0, 1.0])
    assert (f * 2 - f).allclose(f, 0)
    assert f.sup() == 2
    assert f.lp(1) == pytest.approx(1.0)
    assert f.lp(2) == pytest.approx(math.sqrt(6 / 4))
    assert f.lp(math.inf) == 2
