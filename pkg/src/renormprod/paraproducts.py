"""Wavelet renormalization of pointwise products.

For grid data ``f = P_J f`` exactly, so the telescoping

    fg = sum_j [P_j f Q_j g + Q_j f P_j g + Q_j f Q_j g] + P_{j0} f P_{j0} g

is finite.  Same-scale pairings are then sorted into the four bilinear
pieces: father x mother (``pi1``), mother x father (``pi2``), the
off-diagonal mother x mother and father x father terms (``pi3``), and the
diagonal terms ``<f,psi_I><g,psi_I> psi_I**2`` (``pi4``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import Grid, GridFunction
from .wavelets import (
    FilterPair,
    WaveletExpansion,
    _cascade,
    _level_size,
    basis_function,
    forward,
    min_level,
    species,
)

__all__ = [
    "ParaproductResult",
    "renormalize",
    "pi4_l1_bound_check",
    "S_operator",
    "T_operator",
    "start_level",
    "relative_residual",
]

VARIANTS = ("inhomogeneous", "homogeneous")


@dataclass(frozen=True)
class ParaproductResult:
    pi1: GridFunction
    pi2: GridFunction
    pi3: GridFunction
    pi4: GridFunction
    variant: str
    pi3_split: tuple[GridFunction, GridFunction] | None = None

    @property
    def components(self) -> tuple[GridFunction, ...]:
        return (self.pi1, self.pi2, self.pi3, self.pi4)

    def total(self) -> GridFunction:
        return self.pi1 + self.pi2 + self.pi3 + self.pi4


def start_level(grid: Grid, variant: str) -> int:
    """Father level: 0 for the local (``D_0``) variant, ``-log2 L`` for the homogeneous one."""
    if variant == "inhomogeneous":
        return 0
    if variant == "homogeneous":
        j0 = min_level(grid)
        if grid.L * 2.0 ** j0 != 1:
            raise ValueError(f"homogeneous variant needs L a power of two, got L={grid.L}")
        return j0
    raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


@lru_cache(maxsize=512)
def _square_template_hat(grid: Grid, d: int, j: int, lam: str) -> np.ndarray:
    from .wavelets import build_filter

    b = basis_function(grid, build_filter(d), j, (0,) * grid.dim, lam)
    return np.fft.rfftn(b.samples ** 2)


def _diagonal_sum(coef: np.ndarray, grid: Grid, filt: FilterPair, j: int, lam: str) -> np.ndarray:
    """``sum_k coef[k] * b_{j,k}**2`` via circular convolution with the k=0 template."""
    if not np.any(coef):
        return np.zeros(grid.shape)
    stride = 1 << (grid.J - j)
    up = np.zeros(grid.shape)
    sl = tuple(slice(None, None, stride) for _ in range(grid.dim))
    up[sl] = coef
    tmpl = _square_template_hat(grid, filt.d, j, lam)
    return np.fft.irfftn(np.fft.rfftn(up) * tmpl, s=grid.shape, axes=tuple(range(grid.dim)))


def _decompose(x, j0: int, filt: FilterPair) -> WaveletExpansion:
    if isinstance(x, WaveletExpansion):
        if x.j0 != j0:
            raise ValueError(f"expansion anchored at j0={x.j0}, expected {j0}")
        return x
    return forward(x, j0, filt)


def _levels(w: WaveletExpansion, filt: FilterPair):
    """Father part ``P_{j0}`` and per-level mother parts ``Q_j`` as finest-level arrays."""
    grid = w.grid
    P0 = _cascade(w.father, None, w.j0, grid, filt)
    Q = {}
    for j in range(w.j0, grid.J):
        z = np.zeros((_level_size(grid, j),) * grid.dim)
        Q[j] = _cascade(z, w.mother[j], j, grid, filt)
    return P0, Q


def renormalize(f, g, filt: FilterPair, variant: str = "inhomogeneous") -> ParaproductResult:
    """Split ``f*g`` into the four renormalized bilinear pieces.

    ``f`` and ``g`` may be :class:`GridFunction` or a precomputed
    :class:`WaveletExpansion` anchored at the variant's start level (useful
    for dropping seam-crossing coefficients before pairing).
    """
    grid = f.grid
    if g.grid != grid:
        raise ValueError("f and g live on different grids")
    j0 = start_level(grid, variant)
    wf = _decompose(f, j0, filt)
    wg = _decompose(g, j0, filt)
    Pf, Qf = _levels(wf, filt)
    Pg, Qg = _levels(wg, filt)

    pi1 = np.zeros(grid.shape)
    pi2 = np.zeros(grid.shape)
    mm = np.zeros(grid.shape)
    pf, pg = Pf.copy(), Pg.copy()
    for j in range(j0, grid.J):
        pi1 += pf * Qg[j]
        pi2 += Qf[j] * pg
        mm += Qf[j] * Qg[j]
        pf += Qf[j]
        pg += Qg[j]

    mother_diag = np.zeros(grid.shape)
    for j in range(j0, grid.J):
        for lam in species(grid.dim):
            prod = wf.mother[j][lam] * wg.mother[j][lam]
            mother_diag += _diagonal_sum(prod, grid, filt, j, lam)
    ff = Pf * Pg
    if variant == "inhomogeneous":
        father_diag = _diagonal_sum(wf.father * wg.father, grid, filt, j0, "phi")
    else:
        # the single coarsest father cube is kept with the father-father term
        father_diag = np.zeros(grid.shape)
    pi31 = mm - mother_diag
    pi32 = ff - father_diag
    pi4 = mother_diag + father_diag
    G = lambda a: GridFunction(grid, a)  # noqa: E731
    return ParaproductResult(
        G(pi1), G(pi2), G(pi31 + pi32), G(pi4), variant, (G(pi31), G(pi32))
    )


def pi4_l1_bound_check(f: GridFunction, g: GridFunction, filt: FilterPair,
                       variant: str = "inhomogeneous") -> tuple[float, float]:
    """``(||pi4(f,g)||_1, ||f||_2 ||g||_2)``; the first never exceeds the second."""
    if f.grid != g.grid:
        raise ValueError("f and g live on different grids")
    res = renormalize(f, g, filt, variant)
    return res.pi4.lp(1), f.lp(2) * g.lp(2)


def S_operator(f, g, filt: FilterPair, variant: str = "inhomogeneous") -> GridFunction:
    """The ``L^1`` part of the product: the diagonal piece ``pi4``."""
    return renormalize(f, g, filt, variant).pi4


def T_operator(f, g, filt: FilterPair, variant: str = "inhomogeneous") -> GridFunction:
    """The Hardy-type part of the product: ``pi1 + pi2 + pi3``."""
    r = renormalize(f, g, filt, variant)
    return r.pi1 + r.pi2 + r.pi3


def relative_residual(f: GridFunction, g: GridFunction, res: ParaproductResult) -> float:
    prod = f.samples * g.samples
    scale = max(float(np.max(np.abs(prod))), math.ulp(1.0))
    return float(np.max(np.abs(prod - res.total().samples))) / scale
