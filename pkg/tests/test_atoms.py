import math

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from renormprod import atoms, experiments, maximal
from renormprod.grid import Ball, Grid, GridFunction, periodic_displacement


def test_grand_maximal_order():
    assert atoms.grand_maximal_order(0.5, 1) == 5
    assert atoms.grand_maximal_order(1.0, 2) == 5


@given(st.integers(0, 2 ** 31), st.sampled_from([1, 2]), st.integers(0, 2))
@settings(max_examples=20, deadline=None)
def test_random_atoms_validate(seed, dim, d):
    grid = Grid(dim, 8 if dim == 1 else 5, 4)
    rng = np.random.default_rng(seed)
    a, B = experiments.random_atom(grid, rng, 0.5, d, radius=0.3)
    rep = atoms.validate_atom(a, B, "local", 0.5, 2.0, d)
    assert rep.support_ok and rep.size_ok and rep.moments_ok and rep.overall
    assert rep.moments_required


def test_atom_violations_are_reported():
    grid = Grid(1, 8, 4)
    B = Ball((2.0,), 0.25)
    bump = grid.sample(lambda x: np.where(np.abs(x - 2.0) < 0.25, 1.0, 0.0))
    rep = atoms.validate_atom(bump, B, p=0.5, r=2.0, d=0)
    assert rep.support_ok and not rep.moments_ok and not rep.overall
    outside = atoms.validate_atom(bump, Ball((1.0,), 0.25), p=0.5)
    assert not outside.support_ok
    big = Ball((2.0,), 1.0)
    tiny = bump * 1e-3
    assert atoms.validate_atom(tiny, big, p=0.5, d=0).overall
    assert not atoms.validate_atom(tiny, big, "global", p=0.5, d=0).overall
    with pytest.raises(ValueError):
        atoms.validate_atom(bump, B, "other")


def test_atom_poly_product():
    grid = Grid(1, 8, 4)
    a, B = experiments.random_atom(grid, np.random.default_rng(3), 0.5, 1, radius=0.4)
    same = atoms.atom_poly_product(a, B, grid.constant(1.0), 2)
    assert (same - a).sup() < 1e-10
    x = GridFunction(grid, periodic_displacement(grid, B.center)[0])
    lin = atoms.atom_poly_product(a, B, x, 1)
    assert (lin - a * x).sup() < 1e-10
    with pytest.raises(ValueError):
        atoms.atom_poly_product(a, Ball((0.5,), 0.1), grid.constant(1.0), 0)


@pytest.mark.parametrize("dim", [1, 2])
def test_whitney_cover_partitions_mask(dim):
    grid = Grid(dim, 6 if dim == 1 else 4, 2)
    rng = np.random.default_rng(dim)
    from scipy import ndimage

    mask = ndimage.binary_dilation(rng.random(grid.shape) > 0.97, iterations=3)
    cubes = atoms.whitney_cover(mask, grid)
    cover = np.zeros(grid.shape, dtype=int)
    for c in cubes:
        b = 1 << (grid.J - c.j)
        sl = tuple(slice(k * b, (k + 1) * b) for k in c.k)
        cover[sl] += 1
    assert np.array_equal(cover, mask.astype(int))
    assert all(c.j >= 0 for c in cubes)


def _bumps(grid, seed):
    rng = np.random.default_rng(seed)
    f = grid.zeros()
    for _ in range(3):
        c, w, a = rng.uniform(0, grid.L), rng.uniform(0.1, 0.6), rng.uniform(-6, 6)
        f = f + grid.sample(lambda x: a * np.exp(-(((x - c + grid.L / 2) % grid.L - grid.L / 2) / w) ** 2))
    return f


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_cz_pieces_have_vanishing_moments(seed):
    grid = Grid(1, 8, 8)
    f = _bumps(grid, seed)
    cz = atoms.cz_decompose(f, 0.5, 1, (0, 0))
    assert len(cz) > 0
    for pc in cz:
        if pc.ball.volume < 1:
            scale = pc.h.lp(1)
            for beta, val in pc.moments:
                assert abs(val) <= atoms.MOMENT_RTOL * scale * pc.ball.radius ** sum(beta)
    assert (cz.resum() + cz.remainder - f).sup() < 1e-12


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_structure_split_atoms(seed):
    grid = Grid(1, 8, 8)
    f = _bumps(grid, seed)
    split = atoms.structure_split(f, 0.5)
    assert (split.f0 + split.f1 - f).sup() < 1e-9
    reports = list(atoms.atom_reports(split, 0.5, 1))
    assert reports and all(r.overall for _, r in reports)
    assert len(split.atoms0) + len(split.atoms1) == len(reports)


def test_structure_split_2d():
    grid = Grid(2, 5, 2)
    f = grid.sample(lambda x, y: 5 * np.exp(-((x - 1) ** 2 + (y - 0.7) ** 2) / 0.05))
    split = atoms.structure_split(f, 0.8)
    assert (split.f0 + split.f1 - f).sup() < 1e-9
    assert all(r.overall for _, r in atoms.atom_reports(split, 0.8, 0))


def test_small_function_goes_to_h1():
    grid = Grid(1, 7, 8)
    f = grid.sample(lambda x: 0.3 * np.cos(2 * math.pi * x / 8))
    assert maximal.grand_maximal(f, 5, with_identity=True).values.sup() < 1
    split = atoms.structure_split(f, 0.5)
    assert not np.any(split.f1.samples)
    assert (split.f0 - f).sup() < 1e-9


def test_global_decomposition():
    grid = Grid(1, 7, 4)
    f = _bumps(grid, 5)
    f = f - float(np.mean(f.samples))
    cz = atoms.cz_decompose(f, 0.5, 0, (0, 0), kind="global")
    assert (cz.resum() + cz.remainder - f).sup() < 1e-12


def test_bad_exponent():
    with pytest.raises(ValueError):
        atoms.structure_split(Grid(1, 3, 1).zeros(), 1.0)
