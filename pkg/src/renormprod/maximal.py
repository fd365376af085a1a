"""Radial and grand maximal functions and the Hardy-type quasi-norms built on them.

All convolutions are periodic and computed with FFTs against kernels
sampled on the grid.  Dyadic scales ``s = 2**-j`` make ``s/h`` an integer,
for which the sampled B-spline kernels have discrete mass exactly one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import ndimage
from scipy.interpolate import BSpline

from . import orlicz
from .grid import Grid, GridFunction

__all__ = [
    "Mollifier",
    "MaximalProfile",
    "convolve",
    "radial_maximal",
    "grand_maximal",
    "hardy_quasinorm",
    "mollifier_smooth",
    "SPACES",
]

SPACES = ("hp", "Hp", "hPhi", "HPhi", "h_star_Phi", "H_star_Phi", "h_musielak_phi_p")


@lru_cache(maxsize=None)
def _bspline(order: int) -> BSpline:
    knots = np.arange(order + 1) - order / 2.0
    return BSpline.basis_element(knots, extrapolate=False)


def bspline(order: int, t: np.ndarray) -> np.ndarray:
    """Centered cardinal B-spline of the given order (1 = box, 4 = cubic)."""
    t = np.asarray(t, dtype=float)
    v = np.nan_to_num(_bspline(order)(t), nan=0.0)
    # half-open support keeps the discrete mass at one for the box
    return np.where(t >= order / 2.0, 0.0, v)


@lru_cache(maxsize=None)
def _bspline_moment(order: int, k: int) -> float:
    if k % 2:
        return 0.0
    nodes, weights = np.polynomial.legendre.leggauss(order + k + 2)
    total = 0.0
    for left in np.arange(order) - order / 2.0:
        t = left + 0.5 * (nodes + 1.0)
        total += float(np.sum(0.5 * weights * bspline(order, t) * t ** k))
    return total


@dataclass(frozen=True)
class Mollifier:
    """A finite combination ``sum_i w_i B(x / a_i) / a_i^n`` of dilated B-splines.

    ``shift`` displaces the profile by ``shift`` (in units of the scale),
    which the grand maximal dictionary uses.
    """

    order: int = 4
    dilations: tuple[float, ...] = (1.0,)
    weights: tuple[float, ...] = (1.0,)
    shift: float = 0.0

    @classmethod
    def bspline(cls, order: int = 4, shift: float = 0.0) -> "Mollifier":
        return cls(order, (1.0,), (1.0,), shift)

    @classmethod
    def moment_killed(cls, r: int, order: int = 4) -> "Mollifier":
        """Mass one with ``int psi x^beta = 0`` for ``0 < |beta| <= r``.

        Odd moments vanish by symmetry; the even ones are cancelled by
        combining the dilates ``a = 1, ..., floor(r/2) + 1``.
        """
        m = max(r, 0) // 2
        a = np.arange(1, m + 2, dtype=float)
        A = np.vstack([a ** (2 * q) for q in range(m + 1)])
        rhs = np.zeros(m + 1)
        rhs[0] = 1.0
        w = np.linalg.solve(A, rhs)
        return cls(order, tuple(a), tuple(float(v) for v in w))

    @property
    def mass(self) -> float:
        return float(sum(self.weights))

    def moment(self, beta: tuple[int, ...]) -> float:
        """``int psi(x) x^beta dx`` for the unshifted profile."""
        total = 0.0
        for a, w in zip(self.dilations, self.weights):
            term = w * a ** sum(beta)
            for b in beta:
                term *= _bspline_moment(self.order, b)
            total += term
        return total

    @property
    def moment_order(self) -> int:
        """Largest ``r`` with all moments of orders ``1..r`` vanishing (capped at 8)."""
        r = 0
        for k in range(1, 9):
            if abs(self.moment((k,))) > 1e-12 * max(1.0, abs(self.moment((0,)))):
                break
            r = k
        return r

    def profile(self, t: np.ndarray) -> np.ndarray:
        """1-D factor of the tensor kernel at unit scale."""
        t = np.asarray(t, dtype=float) - self.shift
        out = np.zeros_like(t)
        for a, w in zip(self.dilations, self.weights):
            out += w * bspline(self.order, t / a) / a
        return out

    @property
    def support_radius(self) -> float:
        return self.order / 2.0 * max(self.dilations) + abs(self.shift)


@dataclass(frozen=True)
class MaximalProfile:
    values: GridFunction
    scale_set: tuple[float, ...]
    kind: str


@lru_cache(maxsize=1024)
def _kernel_hat(grid: Grid, moll: Mollifier, s: float) -> np.ndarray:
    n, h, L = grid.n, grid.h, grid.L
    m = np.arange(n) * h
    reach = moll.support_radius * s
    images = int(math.ceil(reach / L)) + 1
    k1 = np.zeros(n)
    for r in range(-images, images + 1):
        k1 += moll.profile((m + r * L) / s)
    k1 *= h / s
    if grid.dim == 1:
        return np.fft.rfft(k1)
    return np.fft.rfft2(np.outer(k1, k1))


def convolve(f: GridFunction, moll: Mollifier, s: float) -> GridFunction:
    """Periodic ``f * moll_s`` with ``moll_s(x) = s^-n moll(x/s)``."""
    grid = f.grid
    kh = _kernel_hat(grid, moll, float(s))
    if grid.dim == 1:
        out = np.fft.irfft(np.fft.rfft(f.samples) * kh, n=grid.n)
    else:
        out = np.fft.irfft2(np.fft.rfft2(f.samples) * kh, s=grid.shape)
    return GridFunction(grid, out)


def _scales(grid: Grid, kind: str) -> tuple[float, ...]:
    if kind in ("local", "grand_local"):
        js = range(1, grid.J + 1)
    elif kind in ("global", "grand_global"):
        js = range(-int(math.floor(math.log2(grid.L))), grid.J + 1)
    else:
        raise ValueError(f"unknown maximal kind {kind!r}")
    return tuple(2.0 ** -j for j in js)


def radial_maximal(f: GridFunction, phi: Mollifier | None = None, kind: str = "local",
                   scales=None) -> MaximalProfile:
    """``sup_s |f * phi_s|`` over dyadic ``s`` (``s < 1`` for local, all for global)."""
    phi = phi or Mollifier.bspline()
    if abs(phi.mass) < 1e-14:
        raise ValueError("maximal functions need a mollifier with nonzero mass")
    scale_set = tuple(scales) if scales is not None else _scales(f.grid, kind)
    fh = np.fft.rfftn(f.samples)
    out = np.zeros(f.grid.shape)
    for s in scale_set:
        kh = _kernel_hat(f.grid, phi, float(s))
        np.maximum(out, np.abs(np.fft.irfftn(fh * kh, s=f.grid.shape, axes=tuple(range(f.grid.dim)))), out=out)
    return MaximalProfile(GridFunction(f.grid, out), scale_set, kind)


def dictionary(N: int, size: int = 8) -> list[Mollifier]:
    """Test profiles for the grand maximal function; the first is the default mollifier."""
    orders = list(range(min(N, 4), 0, -1))
    members = []
    for shift in (0.0, 0.5, -0.5, 1.0, -1.0):
        for o in orders:
            members.append(Mollifier.bspline(o, shift))
    return members[:size]


def _spatial_sup(arr: np.ndarray, width: int) -> np.ndarray:
    if width <= 0:
        return arr
    if arr.ndim == 1:
        return ndimage.maximum_filter1d(arr, size=2 * width + 1, mode="wrap")
    w = int(width / math.sqrt(2.0))
    if w <= 0:
        return arr
    return ndimage.maximum_filter(arr, size=2 * w + 1, mode="wrap")


def grand_maximal(f: GridFunction, N: int, kind: str = "grand_local", *, size: int = 8,
                  spatial: bool = True, with_identity: bool = False) -> MaximalProfile:
    """Approximate ``m_N`` / ``M_N``: max over a fixed dictionary and ``|y - x| < s``.

    ``with_identity`` adds the ``s -> 0`` limit ``|f|`` to the supremum.
    In 2-D the spatial supremum runs over the inscribed square of the disc.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    kind = {"local": "grand_local", "global": "grand_global"}.get(kind, kind)
    grid = f.grid
    scale_set = _scales(grid, kind)
    fh = np.fft.rfftn(f.samples)
    out = np.abs(np.array(f.samples)) if with_identity else np.zeros(grid.shape)
    for s in scale_set:
        best = np.zeros(grid.shape)
        for moll in dictionary(N, size):
            kh = _kernel_hat(grid, moll, float(s))
            np.maximum(best, np.abs(np.fft.irfftn(fh * kh, s=grid.shape, axes=tuple(range(grid.dim)))), out=best)
        if spatial:
            best = _spatial_sup(best, int(math.ceil(s / grid.h)) - 1)
        np.maximum(out, best, out=out)
    return MaximalProfile(GridFunction(grid, out), scale_set, kind)


def hardy_quasinorm(f: GridFunction, space: str, p: float | None = None,
                    phi: Mollifier | None = None, profile: MaximalProfile | None = None) -> float:
    """Outer (quasi-)norm of the local or global radial maximal function.

    ``hp``/``Hp`` use ``L^p`` (``p`` in ``(0, 1]``), ``hPhi``/``HPhi`` the
    Luxemburg norm of ``Phi_p``, the starred kinds the unit-cube sum of
    ``Phi(t) = t/log(e+t)``, and ``h_musielak_phi_p`` the Musielak ``phi_p``.
    A precomputed maximal ``profile`` of the right kind can be passed in.
    """
    if space not in SPACES:
        raise ValueError(f"unknown space {space!r}; expected one of {SPACES}")
    needs_p = space in ("hp", "Hp", "hPhi", "HPhi", "h_musielak_phi_p")
    if needs_p:
        upper = 1.0 if space in ("hp", "Hp") else 1.0 - 1e-15
        if p is None or not 0 < p <= upper:
            raise ValueError(f"invalid p={p} for {space}")
    kind = "global" if space[0] == "H" else "local"
    if profile is None:
        profile = radial_maximal(f, phi, kind)
    elif profile.kind != kind:
        raise ValueError(f"{space} needs a {kind} maximal profile, got {profile.kind}")
    m = profile.values
    if space in ("hp", "Hp"):
        return m.lp(p)
    if space in ("hPhi", "HPhi"):
        return orlicz.luxemburg_norm(m, orlicz.phi_p(p))
    if space in ("h_star_Phi", "H_star_Phi"):
        return orlicz.star_norm(m, orlicz.phi_log())
    return orlicz.luxemburg_norm(m, orlicz.musielak_phi_p(p, f.grid.dim))


def mollifier_smooth(f: GridFunction, psi: Mollifier, r: int = 0) -> tuple[GridFunction, GridFunction]:
    """``(psi * f, f - psi * f)`` after checking mass one and vanishing moments to order ``r``."""
    if abs(psi.mass - 1.0) > 1e-12:
        raise ValueError(f"mollifier mass {psi.mass} != 1")
    if psi.moment_order < r:
        raise ValueError(f"mollifier kills moments only to order {psi.moment_order} < {r}")
    smooth = convolve(f, psi, 1.0)
    return smooth, f - smooth
