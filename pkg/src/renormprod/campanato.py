"""Minimizing polynomials and the dual-side norms measured over families of balls.

The ``sup`` over all balls is replaced by a deterministic family: centers on
a coarse sublattice of samples and radii ``2h, 4h, ..., L/2``.  Because every
center is a sample, all balls of one radius share the same offset pattern,
so one design matrix (and one QR factorization) serves every center.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement
from math import comb

import numpy as np

from . import orlicz
from .grid import Ball, Grid, GridFunction, ball_mask, periodic_displacement

__all__ = [
    "PolyCoeffs",
    "DualNormSpec",
    "BallFamily",
    "InsufficientSamplesError",
    "SingularGramError",
    "monomial_exponents",
    "minimizing_polynomial",
    "minimizing_poly_sup_bound",
    "ball_statistics",
    "dual_norm",
    "lipschitz_norm",
    "multiplier_inequality_check",
    "psi_alpha",
]

COND_LIMIT = 1e12


class InsufficientSamplesError(ValueError):
    """The ball holds fewer samples than there are polynomials of degree <= d."""


class SingularGramError(ValueError):
    """The local polynomial basis is numerically singular on the ball."""


@lru_cache(maxsize=None)
def monomial_exponents(dim: int, d: int) -> tuple[tuple[int, ...], ...]:
    """Exponents of all monomials of degree ``<= d`` in graded order."""
    out = []
    for deg in range(d + 1):
        for combo in combinations_with_replacement(range(dim), deg):
            out.append(tuple(combo.count(a) for a in range(dim)))
    return tuple(out)


def _vandermonde(disp: tuple[np.ndarray, ...], exps) -> np.ndarray:
    cols = []
    for e in exps:
        col = np.ones_like(disp[0])
        for x, k in zip(disp, e):
            if k:
                col = col * x ** k
        cols.append(col)
    return np.stack(cols, axis=-1)


@dataclass(frozen=True)
class PolyCoeffs:
    """Coefficients in the monomial basis ``(x - center)^beta``."""

    degree: int
    dim: int
    center: tuple[float, ...]
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).copy()
        if c.shape != (comb(self.degree + self.dim, self.dim),):
            raise ValueError(f"expected {comb(self.degree + self.dim, self.dim)} coefficients")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite polynomial coefficients")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def exponents(self):
        return monomial_exponents(self.dim, self.degree)

    def evaluate(self, grid: Grid) -> GridFunction:
        """The polynomial at every sample, with periodic displacement from the center."""
        disp = [np.broadcast_to(x, grid.shape) for x in periodic_displacement(grid, self.center)]
        return GridFunction(grid, _vandermonde(tuple(disp), self.exponents) @ self.coeffs)


def _fit(values: np.ndarray, disp: tuple[np.ndarray, ...], d: int, radius: float):
    """Least-squares fit through a QR of the radius-scaled Vandermonde matrix."""
    exps = monomial_exponents(len(disp), d)
    if values.size < len(exps):
        raise InsufficientSamplesError(
            f"ball has {values.size} samples, degree {d} needs {len(exps)}"
        )
    V = _vandermonde(tuple(x / radius for x in disp), exps)
    Q, R = np.linalg.qr(V)
    if np.linalg.cond(R) > COND_LIMIT:
        raise SingularGramError("polynomial Gram matrix is numerically singular on this ball")
    scaled = np.linalg.solve(R, Q.T @ values)
    scale = np.array([radius ** -sum(e) for e in exps])
    return scaled * scale, V, scaled


def minimizing_polynomial(g: GridFunction, B: Ball, d: int) -> PolyCoeffs:
    """The discrete ``L^2(B)`` projection of ``g`` onto polynomials of degree ``<= d``."""
    if d < 0:
        raise ValueError("degree must be nonnegative")
    mask = ball_mask(g.grid, B)
    disp = tuple(np.broadcast_to(x, g.grid.shape)[mask] for x in periodic_displacement(g.grid, B.center))
    coeffs, _, _ = _fit(g.samples[mask], disp, d, B.radius)
    return PolyCoeffs(d, g.grid.dim, B.center, coeffs)


def minimizing_poly_sup_bound(g: GridFunction, B: Ball, d: int) -> tuple[float, float, float]:
    """``(sup_B |P_B^d g|, mean_B |g|, ratio)``; the ratio is bounded by a constant depending on ``d``."""
    P = minimizing_polynomial(g, B, d)
    mask = ball_mask(g.grid, B)
    sup_p = float(np.max(np.abs(P.evaluate(g.grid).samples[mask])))
    mean_g = float(np.mean(np.abs(g.samples[mask])))
    ratio = sup_p / mean_g if mean_g > 0 else (0.0 if sup_p == 0 else math.inf)
    return sup_p, mean_g, ratio


# -- ball families -------------------------------------------------------------

@dataclass(frozen=True)
class BallFamily:
    """Centers every ``center_stride`` samples and radii ``2h * 2**k`` up to ``L/2``.

    Balls with more than ``max_points`` samples are evaluated on a uniformly
    thinned sublattice of their samples.
    """

    center_stride: int | None = None
    radii: tuple[float, ...] | None = None
    max_points: int | None = None

    def strides(self, grid: Grid) -> int:
        return self.center_stride or max(1, 1 << max(grid.J - 4, 0))

    def radius_ladder(self, grid: Grid) -> tuple[float, ...]:
        if self.radii is not None:
            return tuple(self.radii)
        out, r = [], 2 * grid.h
        while r <= grid.L / 2 + 1e-12:
            out.append(r)
            r *= 2
        return tuple(out)

    def point_cap(self, grid: Grid) -> int:
        return self.max_points or (4096 if grid.dim == 1 else 1024)


def _ball_volume(dim: int, r: float) -> float:
    return 2.0 * r if dim == 1 else math.pi * r * r


@lru_cache(maxsize=256)
def _offsets(grid: Grid, radius: float, cap: int):
    reach = int(math.ceil(radius / grid.h))
    sub = 1
    while True:
        rng = np.arange(-reach + (reach % sub), reach + 1, sub)
        if grid.dim == 1:
            offs = rng[np.abs(rng) * grid.h < radius][:, None]
        else:
            a, b = np.meshgrid(rng, rng, indexing="ij")
            keep = (a * a + b * b) * grid.h ** 2 < radius ** 2
            offs = np.stack([a[keep], b[keep]], axis=-1)
        if len(offs) <= cap:
            return offs
        sub *= 2


@dataclass(frozen=True)
class BallStats:
    """Per-center statistics for one radius."""

    radius: float
    volume: float
    centers: np.ndarray
    mean_abs_pow: np.ndarray
    osc_pow: dict


def ball_statistics(g: GridFunction, radius: float, degrees, r: float = 1.0,
                    family: BallFamily | None = None) -> BallStats:
    """Averages ``mean_B |g|^r`` and ``mean_B |g - P_B^d g|^r`` for every center of the family."""
    family = family or BallFamily()
    grid = g.grid
    stride = family.strides(grid)
    offs = _offsets(grid, float(radius), family.point_cap(grid))
    idx1 = np.arange(0, grid.n, stride)
    if grid.dim == 1:
        centers = idx1[:, None]
        G = g.samples[(centers + offs[None, :, 0]) % grid.n]
    else:
        ci, cj = np.meshgrid(idx1, idx1, indexing="ij")
        centers = np.stack([ci.ravel(), cj.ravel()], axis=-1)
        G = g.samples[(centers[:, None, 0] + offs[None, :, 0]) % grid.n,
                      (centers[:, None, 1] + offs[None, :, 1]) % grid.n]
    raw = np.mean(np.abs(G) ** r, axis=1)
    disp = tuple(offs[:, a] * grid.h / radius for a in range(grid.dim))
    osc = {}
    for d in degrees:
        exps = monomial_exponents(grid.dim, d)
        if len(offs) < len(exps):
            continue
        Q, R = np.linalg.qr(_vandermonde(disp, exps))
        if np.linalg.cond(R) > COND_LIMIT:
            continue
        fitted = (G @ Q) @ Q.T
        osc[d] = np.mean(np.abs(G - fitted) ** r, axis=1)
    return BallStats(float(radius), _ball_volume(grid.dim, radius),
                     (centers + 0.5) * grid.h, raw, osc)


# -- dual norms ----------------------------------------------------------------

KINDS = ("campanato_local", "lipschitz", "bmo", "bmo_phi", "BMO_phi",
         "orlicz_campanato_local", "orlicz_campanato_global", "bmo_alpha")


@dataclass(frozen=True)
class DualNormSpec:
    kind: str
    alpha: float = 0.0
    r: float = 1.0
    d: int = 0
    phi: orlicz.OrliczSpec | None = None
    family: BallFamily = field(default_factory=BallFamily)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown dual norm kind {self.kind!r}")
        if self.kind == "lipschitz" and not self.alpha > 0:
            raise ValueError(f"lipschitz needs alpha > 0, got {self.alpha}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if self.kind.startswith("orlicz") and self.phi is None:
            raise ValueError(f"{self.kind} needs an Orlicz growth function")
        if self.kind == "campanato_local" and self.r not in (1, 2):
            raise ValueError(f"campanato_local supports r in {{1, 2}}, got {self.r}")

    @classmethod
    def campanato_local(cls, alpha: float, r: float = 1, d: int | None = None, dim: int = 1, **kw):
        d = int(math.floor(dim * alpha + 1e-12)) if d is None else d
        return cls("campanato_local", alpha, r, d, **kw)

    @classmethod
    def lipschitz(cls, alpha: float, **kw):
        return cls("lipschitz", alpha, **kw)

    @classmethod
    def bmo(cls, **kw):
        return cls("bmo", **kw)


def psi_alpha(center, radius: float, alpha: float, dim: int) -> float:
    """Weight ``|B|^a / (1 + |c| + r)^(n a)``, with an extra log factor when ``n a`` is an integer."""
    c = float(np.linalg.norm(np.atleast_1d(np.asarray(center, dtype=float))))
    base = 1.0 + c + radius
    out = _ball_volume(dim, radius) ** alpha / base ** (dim * alpha)
    na = dim * alpha
    if abs(na - round(na)) < 1e-12 and round(na) >= 1:
        out /= math.log(math.e + c + radius)
    return out


def _branch_values(stats: BallStats, spec: DualNormSpec, dim: int):
    """Weighted per-center values for the small-ball and large-ball branches."""
    vol = stats.volume
    kind = spec.kind
    d = spec.d if kind in ("campanato_local", "orlicz_campanato_local",
                           "orlicz_campanato_global", "bmo_alpha") else 0
    r = spec.r if kind == "campanato_local" else 1.0
    osc = stats.osc_pow.get(d)
    osc = None if osc is None else osc ** (1.0 / r)
    raw = stats.mean_abs_pow ** (1.0 / r)
    if kind in ("campanato_local", "bmo"):
        w = 1.0 / vol ** spec.alpha
        small, use_all = vol < 1, False
    elif kind in ("bmo_phi", "BMO_phi"):
        w = math.log(math.e + 1.0 / vol)
        small, use_all = vol < 1, kind == "BMO_phi"
    elif kind.startswith("orlicz_campanato"):
        w = vol / orlicz.indicator_norm(vol, spec.phi)
        small, use_all = vol < 1, kind.endswith("global")
    else:
        w = np.array([1.0 / psi_alpha(c, stats.radius, spec.alpha, dim) for c in stats.centers])
        small, use_all = stats.radius < 1, False
    if use_all or small:
        return None if osc is None else w * osc
    return w * raw


def dual_norm(g: GridFunction, spec: DualNormSpec, branch: str = "both") -> float:
    """Sup over the ball family of the weighted oscillation (``|B|<1``) or average (``|B|>=1``).

    ``branch`` may be ``"small"`` or ``"large"`` to report one of the two sups.
    """
    if spec.kind == "lipschitz":
        return lipschitz_norm(g, spec.alpha)
    grid = g.grid
    radii = spec.family.radius_ladder(grid)
    if not radii:
        raise ValueError("empty ball family")
    d = spec.d if spec.kind in ("campanato_local", "orlicz_campanato_local",
                                "orlicz_campanato_global", "bmo_alpha") else 0
    r = spec.r if spec.kind == "campanato_local" else 1.0
    sup_small = sup_large = 0.0
    global_kind = spec.kind in ("BMO_phi", "orlicz_campanato_global")
    for rad in radii:
        stats = ball_statistics(g, rad, (d,), r, spec.family)
        vals = _branch_values(stats, spec, grid.dim)
        if vals is None:
            continue
        is_small = global_kind or (stats.radius < 1 if spec.kind == "bmo_alpha" else stats.volume < 1)
        top = float(np.max(vals))
        if is_small:
            sup_small = max(sup_small, top)
        else:
            sup_large = max(sup_large, top)
    if branch == "small":
        return sup_small
    if branch == "large":
        return sup_large
    return sup_small + sup_large


def _shift_set(grid: Grid):
    """Integer shift vectors along the axes and diagonals with length up to ``L/4``."""
    limit = grid.L / 4.0
    steps = sorted({m for m in range(1, 9)} | {1 << k for k in range(grid.J + 3)}
                   | {3 << k for k in range(grid.J + 2)})
    dirs = [(1,)] if grid.dim == 1 else [(1, 0), (0, 1), (1, 1), (1, -1)]
    out = []
    for e in dirs:
        norm = math.sqrt(sum(c * c for c in e))
        for m in steps:
            if m * norm * grid.h <= limit:
                out.append(tuple(m * c for c in e))
    return out


def lipschitz_norm(g: GridFunction, alpha: float) -> float:
    """``||g||_inf + sup |D_h^k g(x)| / |h|^alpha`` with ``k = floor(alpha) + 1``."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    k = int(math.floor(alpha)) + 1
    a = np.asarray(g.samples)
    axes = tuple(range(g.grid.dim))
    best = 0.0
    for shift in _shift_set(g.grid):
        diff = np.zeros_like(a)
        for i in range(k + 1):
            coef = (-1) ** (k - i) * comb(k, i)
            diff = diff + coef * np.roll(a, tuple(-i * s for s in shift), axis=axes)
        length = math.sqrt(sum(s * s for s in shift)) * g.grid.h
        best = max(best, float(np.max(np.abs(diff))) / length ** alpha)
    return g.sup() + best


@dataclass(frozen=True)
class MultiplierReport:
    lhs: float
    rhs: float
    ratio: float
    g_sup: float
    g_campanato: float
    f_lipschitz: float


def multiplier_inequality_check(g: GridFunction, f: GridFunction, p: float,
                                family: BallFamily | None = None) -> MultiplierReport:
    """Compare ``||g f||_Lambda`` with ``(||g||_inf + ||g||_{L^{Phi_p}_loc}) ||f||_Lambda``."""
    n = g.grid.dim
    alpha = 1.0 / p - 1.0
    na = n * alpha
    lhs = lipschitz_norm(g * f, na)
    spec = DualNormSpec("orlicz_campanato_local", d=int(math.floor(na + 1e-12)),
                        phi=orlicz.phi_p(p), family=family or BallFamily())
    gc = dual_norm(g, spec)
    fl = lipschitz_norm(f, na)
    rhs = (g.sup() + gc) * fl
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    return MultiplierReport(lhs, rhs, ratio, g.sup(), gc, fl)
