import math

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from renormprod import maximal
from renormprod.grid import Grid, GridFunction, integrate


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_bspline_unit_mass(order):
    t = np.linspace(-order / 2, order / 2, 20001)
    v = maximal.bspline(order, t)
    assert np.trapezoid(v, t) == pytest.approx(1.0, abs=1e-4)
    assert maximal.bspline(order, np.array([order / 2 + 0.1]))[0] == 0


@pytest.mark.parametrize("r", [0, 1, 2, 4, 6])
def test_moment_killed_mollifier(r):
    psi = maximal.Mollifier.moment_killed(r)
    assert psi.mass == pytest.approx(1.0, abs=1e-12)
    assert psi.moment_order >= r


def test_dictionary_kernels_have_unit_discrete_mass():
    grid = Grid(1, 7, 4)
    one = grid.constant(1.0)
    for moll in maximal.dictionary(4):
        for s in (2.0 ** -j for j in range(1, grid.J + 1)):
            assert (maximal.convolve(one, moll, s) - one).sup() < 1e-12


def test_dictionary_size_and_default():
    d = maximal.dictionary(6)
    assert len(d) == 8
    assert d[0] == maximal.Mollifier.bspline(4)


@given(st.integers(0, 2 ** 31), st.sampled_from([1, 2]))
@settings(max_examples=15, deadline=None)
def test_maximal_bounds(seed, dim):
    grid = Grid(dim, 6 if dim == 1 else 4, 2)
    f = GridFunction(grid, np.random.default_rng(seed).standard_normal(grid.shape))
    radial = maximal.radial_maximal(f).values
    grand = maximal.grand_maximal(f, 4).values
    assert np.all(grand.samples >= radial.samples - 1e-12)
    # positive kernels of mass one never exceed the sup
    assert grand.sup() <= f.sup() * (1 + 1e-12)
    glob = maximal.radial_maximal(f, kind="global").values
    assert np.all(glob.samples >= radial.samples - 1e-12)


def test_cosine_is_bounded_by_one():
    grid = Grid(1, 8, 4)
    f = grid.sample(lambda x: np.cos(2 * math.pi * x))
    assert maximal.grand_maximal(f, 4).values.sup() <= 1 + 1e-12


def test_hardy_norms_scale():
    grid = Grid(1, 7, 8)
    f = grid.sample(lambda x: np.exp(-((x - 4) / 0.3) ** 2) * (x - 4))
    for space, p in (("hp", 0.5), ("Hp", 0.5), ("hPhi", 0.5), ("h_star_Phi", None), ("hp", 1.0)):
        a = maximal.hardy_quasinorm(f, space, p)
        assert math.isfinite(a) and a > 0
        assert maximal.hardy_quasinorm(f * 3.0, space, p) == pytest.approx(3 * a, rel=1e-7)


def test_hardy_norm_dominates_lp():
    grid = Grid(1, 7, 8)
    f = grid.sample(lambda x: np.sin(2 * math.pi * x / 8))
    # the finest scale is one cell wide, so smoothing costs O(h^2)
    assert maximal.hardy_quasinorm(f, "hp", 1.0) >= f.lp(1) * (1 - 1e-4)


def test_global_norm_sees_large_scales():
    grid = Grid(1, 6, 8)
    f = grid.sample(lambda x: np.exp(-((x - 4) / 0.5) ** 2))
    local = maximal.hardy_quasinorm(f, "hp", 0.5)
    glob = maximal.hardy_quasinorm(f, "Hp", 0.5)
    assert glob >= local


def test_all_spaces_finite():
    grid = Grid(2, 4, 2)
    f = grid.sample(lambda x, y: np.exp(-((x - 1) ** 2 + (y - 1) ** 2) / 0.1))
    for space in maximal.SPACES:
        p = 0.6 if space in ("hp", "Hp", "hPhi", "HPhi", "h_musielak_phi_p") else None
        assert math.isfinite(maximal.hardy_quasinorm(f, space, p))


def test_argument_errors():
    f = Grid(1, 3, 1).constant(1.0)
    with pytest.raises(ValueError):
        maximal.hardy_quasinorm(f, "hq", 0.5)
    with pytest.raises(ValueError):
        maximal.hardy_quasinorm(f, "hp", 1.5)
    with pytest.raises(ValueError):
        maximal.hardy_quasinorm(f, "hPhi", 1.0)
    with pytest.raises(ValueError):
        maximal.grand_maximal(f, 0)
    with pytest.raises(ValueError):
        maximal.radial_maximal(f, maximal.Mollifier(4, (1.0, 2.0), (1.0, -1.0)))
    prof = maximal.radial_maximal(f, kind="global")
    with pytest.raises(ValueError):
        maximal.hardy_quasinorm(f, "hp", 0.5, profile=prof)


def test_mollifier_smooth_splits_function():
    grid = Grid(1, 7, 4)
    f = GridFunction(grid, np.random.default_rng(0).standard_normal(grid.shape))
    psi = maximal.Mollifier.moment_killed(2)
    smooth, rough = maximal.mollifier_smooth(f, psi, 2)
    assert (smooth + rough - f).sup() < 1e-12
    assert integrate(rough) == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(ValueError):
        maximal.mollifier_smooth(f, maximal.Mollifier.bspline(), 2)


def test_constant_maximal_and_smoothing():
    grid = Grid(2, 4, 2)
    c = grid.constant(-1.5)
    assert (maximal.radial_maximal(c).values - 1.5).sup() < 1e-10
    _, rough = maximal.mollifier_smooth(c, maximal.Mollifier.moment_killed(2), 2)
    assert rough.sup() < 1e-9
