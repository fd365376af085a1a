import math

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from renormprod import campanato, orlicz
from renormprod.grid import Ball, Grid, GridFunction, ball_mask


def test_monomial_counts():
    assert len(campanato.monomial_exponents(1, 3)) == 4
    assert len(campanato.monomial_exponents(2, 2)) == 6
    assert campanato.monomial_exponents(2, 1)[0] == (0, 0)


@given(st.integers(0, 2 ** 31), st.integers(0, 4), st.sampled_from([1, 2]))
@settings(max_examples=20, deadline=None)
def test_polynomials_are_reproduced(seed, d, dim):
    rng = np.random.default_rng(seed)
    grid = Grid(dim, 7 if dim == 1 else 5, 4)
    center = tuple(rng.uniform(0, 4, size=dim))
    coef = rng.standard_normal(len(campanato.monomial_exponents(dim, d)))
    P = campanato.PolyCoeffs(d, dim, center, coef)
    g = P.evaluate(grid)
    fit = campanato.minimizing_polynomial(g, Ball(center, 0.8), d)
    assert np.allclose(fit.coeffs, coef, atol=1e-8)


def test_sup_bound_ratio_is_moderate():
    rng = np.random.default_rng(4)
    grid = Grid(1, 8, 4)
    worst = 0.0
    for _ in range(30):
        g = GridFunction(grid, rng.standard_normal(grid.shape))
        _, _, ratio = campanato.minimizing_poly_sup_bound(g, Ball((2.0,), 0.5), 3)
        worst = max(worst, ratio)
    assert worst < 50


def test_too_few_samples():
    grid = Grid(1, 2, 4)
    g = grid.constant(1.0)
    with pytest.raises(campanato.InsufficientSamplesError):
        campanato.minimizing_polynomial(g, Ball((1.1,), 0.3), 3)
    with pytest.raises(ValueError):
        campanato.minimizing_polynomial(g, Ball((1.1,), 0.3), -1)


def test_campanato_of_constant():
    grid = Grid(1, 8, 8)
    spec = campanato.DualNormSpec.campanato_local(0.5)
    # only the large balls see a constant; the unit-measure ball gives the sup
    assert campanato.dual_norm(grid.constant(1.0), spec) == pytest.approx(1.0)
    assert campanato.dual_norm(grid.constant(1.0), spec, branch="small") == pytest.approx(0.0, abs=1e-12)


def test_bmo_of_smooth_function_is_bounded_by_oscillation():
    grid = Grid(1, 8, 8)
    g = grid.sample(lambda x: np.sin(2 * math.pi * x / 8))
    small = campanato.dual_norm(g, campanato.DualNormSpec.bmo(), branch="small")
    assert 0 < small <= 2.0


def test_dual_norm_homogeneity():
    grid = Grid(2, 4, 4)
    g = GridFunction(grid, np.random.default_rng(2).standard_normal(grid.shape))
    for spec in (campanato.DualNormSpec.bmo(), campanato.DualNormSpec.campanato_local(0.5, r=2, dim=2),
                 campanato.DualNormSpec("bmo_phi"), campanato.DualNormSpec("bmo_alpha", alpha=0.5, d=1),
                 campanato.DualNormSpec("orlicz_campanato_global", d=1, phi=orlicz.phi_p(0.5))):
        a = campanato.dual_norm(g, spec)
        assert math.isfinite(a) and a > 0
        assert campanato.dual_norm(g * -2.5, spec) == pytest.approx(2.5 * a, rel=1e-10)


def test_spec_validation():
    with pytest.raises(ValueError):
        campanato.DualNormSpec("nope")
    with pytest.raises(ValueError):
        campanato.DualNormSpec.lipschitz(0.0)
    with pytest.raises(ValueError):
        campanato.DualNormSpec("orlicz_campanato_local")
    with pytest.raises(ValueError):
        campanato.DualNormSpec.campanato_local(0.5, r=3)


def test_lipschitz_norm_of_sine():
    grid = Grid(1, 10, 8)
    g = grid.sample(lambda x: np.sin(2 * math.pi * x / 8))
    # first differences give the derivative bound 2 pi / 8 at small shifts
    val = campanato.lipschitz_norm(g, 1.0) - 1.0
    assert val == pytest.approx(2 * math.pi / 8 * 2 / 2, rel=0.05) or val <= 2 * math.pi / 8 * 2


def test_lipschitz_detects_roughness():
    def lip(J, alpha):
        grid = Grid(1, J, 8)
        g = grid.sample(lambda x: np.abs(np.sin(math.pi * x / 4)) ** 0.5)
        return campanato.lipschitz_norm(g, alpha)

    assert lip(12, 0.7) / lip(8, 0.7) > 1.3
    assert lip(12, 0.5) / lip(8, 0.5) < 1.1


def test_lipschitz_annihilates_low_degree():
    grid = Grid(1, 8, 4)
    g = grid.sample(lambda x: np.cos(2 * math.pi * x / 4))
    assert campanato.lipschitz_norm(g, 1.5) < campanato.lipschitz_norm(g, 1.5 - 1e-9) * 1.01
    with pytest.raises(ValueError):
        campanato.lipschitz_norm(g, 0.0)


def test_psi_alpha_log_factor():
    plain = campanato.psi_alpha((0.0,), 1.0, 0.5, 1)
    logged = campanato.psi_alpha((0.0,), 1.0, 1.0, 1)
    assert plain == pytest.approx(2 ** 0.5 / 2 ** 0.5)
    assert logged == pytest.approx(2 / 2 / math.log(math.e + 1))


def test_multiplier_inequality():
    grid = Grid(1, 9, 8)
    g = grid.sample(lambda x: np.exp(-((x - 4) / 0.5) ** 2))
    f = grid.sample(lambda x: np.cos(2 * math.pi * x / 8))
    rep = campanato.multiplier_inequality_check(g, f, 0.5)
    assert math.isfinite(rep.ratio) and rep.ratio < 5


def test_ball_statistics_thinning():
    grid = Grid(1, 12, 8)
    fam = campanato.BallFamily(max_points=256)
    stats = campanato.ball_statistics(grid.constant(1.0), 2.0, (0, 1), 1.0, fam)
    assert np.allclose(stats.mean_abs_pow, 1.0)
    assert np.allclose(stats.osc_pow[1], 0.0, atol=1e-12)
    assert len(stats.centers) == grid.n // fam.strides(grid)
    mask = ball_mask(grid, Ball(tuple(stats.centers[0]), 2.0))
    assert mask.sum() > 256


def test_identity_multiplier():
    grid = Grid(1, 8, 8)
    f = grid.sample(lambda x: np.cos(2 * math.pi * x / 8))
    rep = campanato.multiplier_inequality_check(grid.constant(1.0), f, 0.5)
    assert rep.lhs == pytest.approx(campanato.lipschitz_norm(f, 1.0))
