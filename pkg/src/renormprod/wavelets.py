"""Compactly supported orthonormal wavelets on the periodic grid.

Filters are the extremal-phase Daubechies family, built by spectral
factorization in extended precision.  The transform is the periodic
filter-bank cascade; coefficients are scaled by ``h**(dim/2)`` so that they
equal the grid inner products ``<f, psi_I>`` and ``<f, phi_I>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

import mpmath
import numpy as np

from .grid import DyadicCube, Grid, GridFunction

__all__ = [
    "UnsupportedRegularityError",
    "ScaleRangeError",
    "MalformedExpansionError",
    "FilterPair",
    "WaveletExpansion",
    "build_filter",
    "species",
    "min_level",
    "forward",
    "inverse",
    "project_Pj",
    "project_Qj",
    "basis_function",
    "wrap_flags",
    "dump_coeffs",
]


class UnsupportedRegularityError(ValueError):
    pass


class ScaleRangeError(ValueError):
    pass


class MalformedExpansionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FilterPair:
    d: int
    lowpass: np.ndarray = field(repr=False)
    highpass: np.ndarray = field(repr=False)

    @property
    def support_length(self) -> int:
        return len(self.lowpass)

    @property
    def support_dilation(self) -> float:
        """Smallest ``m`` with ``supp psi_I`` inside the ball around ``mI``.

        ``psi_{j,k}`` lives on ``2**-j [k, k + 2d - 1]``; centering the
        dilation at the cube center needs half-width ``(2d - 3/2) 2**-j``.
        """
        return 2.0 * self.support_length - 3.0


def _lowpass_mp(d: int) -> list:
    """Extremal-phase lowpass taps at 60 significant digits."""
    with mpmath.workdps(60):
        # Q(y) = sum_k C(d-1+k, k) y^k, y = sin^2(w/2); |m0|^2 = cos^{2d}(w/2) Q(y)
        coeffs = [mpmath.binomial(d - 1 + k, k) for k in range(d)]
        zeros = []
        if d > 1:
            yroots = mpmath.polyroots(coeffs[::-1], maxsteps=200, extraprec=200)
            for y in yroots:
                # z + 1/z = 2 - 4y; keep the root inside the unit circle
                b = 2 - 4 * y
                disc = mpmath.sqrt(b * b - 4)
                z1, z2 = (b + disc) / 2, (b - disc) / 2
                zeros.append(z1 if abs(z1) < 1 else z2)
        poly = [mpmath.mpf(1)]
        for root in [-1] * d + zeros:
            nxt = [mpmath.mpc(0)] * (len(poly) + 1)
            for i, c in enumerate(poly):
                nxt[i] += -root * c
                nxt[i + 1] += c
            poly = nxt
        taps = [mpmath.re(c) for c in poly]
        scale = mpmath.sqrt(2) / mpmath.fsum(taps)
        taps = [t * scale for t in taps]
        # order so that the large taps lead, the usual db convention
        if abs(taps[0]) < abs(taps[-1]):
            taps = taps[::-1]
        return taps


@lru_cache(maxsize=None)
def build_filter(d: int) -> FilterPair:
    """Daubechies filter with ``d`` vanishing moments (``d = 1`` is Haar)."""
    if not isinstance(d, (int, np.integer)) or not 1 <= d <= 16:
        raise UnsupportedRegularityError(f"regularity d must be an integer in [1, 16], got {d!r}")
    taps = _lowpass_mp(int(d))
    h = np.array([float(t) for t in taps])
    n = len(h)
    g = np.array([(-1) ** k * h[n - 1 - k] for k in range(n)])
    h.flags.writeable = False
    g.flags.writeable = False
    return FilterPair(int(d), h, g)


def highpass_moment(filt: FilterPair, nu: int) -> float:
    """``sum_k g_k k^nu`` evaluated exactly on the stored float taps."""
    total = sum(Fraction(float(gk)) * k ** nu for k, gk in enumerate(filt.highpass))
    return float(total)


# -- species and level bookkeeping -------------------------------------------

def species(dim: int) -> tuple[str, ...]:
    return ("1",) if dim == 1 else ("01", "10", "11")


def min_level(grid: Grid) -> int:
    """Coarsest admissible father level: ``-log2 L`` when L is a power of two."""
    L = grid.L
    j = 0
    while L % 2 == 0:
        L //= 2
        j -= 1
    return j


def _level_size(grid: Grid, j: int) -> int:
    size = grid.L * 2.0 ** j
    return int(size)


def _check_level(grid: Grid, j: int, *, allow_J: bool = True):
    hi = grid.J if allow_J else grid.J - 1
    if not (min_level(grid) <= j <= hi):
        raise ScaleRangeError(
            f"scale {j} outside [{min_level(grid)}, {hi}] for L={grid.L}, J={grid.J}"
        )


@dataclass(eq=False)
class WaveletExpansion:
    """Father coefficients at level ``j0`` and mother coefficients for ``j0 <= j < J``.

    ``mother[j][lam]`` is an array of shape ``(L 2^j,)*dim`` indexed by the
    cube position ``k``.
    """

    grid: Grid
    j0: int
    father: np.ndarray
    mother: dict[int, dict[str, np.ndarray]]
    finite: bool = False

    def copy(self) -> "WaveletExpansion":
        return WaveletExpansion(
            self.grid,
            self.j0,
            self.father.copy(),
            {j: {lam: a.copy() for lam, a in m.items()} for j, m in self.mother.items()},
            self.finite,
        )

    @classmethod
    def zeros(cls, grid: Grid, j0: int) -> "WaveletExpansion":
        _check_level(grid, j0)
        n0 = _level_size(grid, j0)
        mother = {
            j: {lam: np.zeros((_level_size(grid, j),) * grid.dim) for lam in species(grid.dim)}
            for j in range(j0, grid.J)
        }
        return cls(grid, j0, np.zeros((n0,) * grid.dim), mother, finite=True)

    def items(self) -> Iterator[tuple[DyadicCube, str, float]]:
        """``(cube, species, value)`` for every coefficient; species ``'phi'`` for fathers."""
        for idx in np.ndindex(self.father.shape):
            yield DyadicCube(self.j0, idx), "phi", float(self.father[idx])
        for j in sorted(self.mother):
            for lam in sorted(self.mother[j]):
                arr = self.mother[j][lam]
                for idx in np.ndindex(arr.shape):
                    yield DyadicCube(j, idx), lam, float(arr[idx])

    def sum_of_squares(self) -> float:
        parts = [np.sum(self.father ** 2)]
        for m in self.mother.values():
            parts.extend(np.sum(a ** 2) for a in m.values())
        return float(math.fsum(parts))


# -- periodic filter-bank steps ---------------------------------------------

@lru_cache(maxsize=256)
def _tap_index(m: int, ntaps: int) -> np.ndarray:
    return (2 * np.arange(m // 2)[:, None] + np.arange(ntaps)[None, :]) % m


def _analyze_axis(x: np.ndarray, filt: FilterPair, axis: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.moveaxis(x, axis, -1)
    idx = _tap_index(x.shape[-1], filt.support_length)
    gathered = x[..., idx]
    lo = gathered @ filt.lowpass
    hi = gathered @ filt.highpass
    return np.moveaxis(lo, -1, axis), np.moveaxis(hi, -1, axis)


def _synthesize_axis(lo: np.ndarray, hi: np.ndarray, filt: FilterPair, axis: int) -> np.ndarray:
    lo = np.moveaxis(lo, axis, -1)
    hi = np.moveaxis(hi, axis, -1)
    m = 2 * lo.shape[-1]
    idx = _tap_index(m, filt.support_length)
    out = np.zeros(lo.shape[:-1] + (m,))
    # for a fixed tap the targets (2k + n) mod m are distinct, so += is safe
    for n in range(filt.support_length):
        out[..., idx[:, n]] += filt.lowpass[n] * lo + filt.highpass[n] * hi
    return np.moveaxis(out, -1, axis)


def _analyze(a: np.ndarray, filt: FilterPair) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    if a.ndim == 1:
        lo, hi = _analyze_axis(a, filt, 0)
        return lo, {"1": hi}
    lo0, hi0 = _analyze_axis(a, filt, 0)
    ll, lh = _analyze_axis(lo0, filt, 1)
    hl, hh = _analyze_axis(hi0, filt, 1)
    return ll, {"01": lh, "10": hl, "11": hh}


def _synthesize(a: np.ndarray, det: dict[str, np.ndarray] | None, filt: FilterPair) -> np.ndarray:
    if det is None:
        det = {}
    if a.ndim == 1:
        hi = det.get("1")
        return _synthesize_axis(a, np.zeros_like(a) if hi is None else hi, filt, 0)
    z = np.zeros_like(a)
    lo0 = _synthesize_axis(a, det.get("01", z), filt, 1)
    hi0 = _synthesize_axis(det.get("10", z), det.get("11", z), filt, 1)
    return _synthesize_axis(lo0, hi0, filt, 0)


def _cascade(a: np.ndarray, det: dict[str, np.ndarray] | None, level: int, grid: Grid,
             filt: FilterPair) -> np.ndarray:
    """Synthesize from ``level`` to the finest level; returns grid samples."""
    x = _synthesize(a, det, filt) if det is not None else a
    start = level + 1 if det is not None else level
    for _ in range(start, grid.J):
        x = _synthesize(x, None, filt)
    return x * grid.h ** (-grid.dim / 2.0)


# -- public transform --------------------------------------------------------

def forward(f: GridFunction, j0: int, filt: FilterPair) -> WaveletExpansion:
    grid = f.grid
    _check_level(grid, j0)
    a = np.array(f.samples) * grid.h ** (grid.dim / 2.0)
    mother: dict[int, dict[str, np.ndarray]] = {}
    for j in range(grid.J - 1, j0 - 1, -1):
        a, det = _analyze(a, filt)
        mother[j] = det
    return WaveletExpansion(grid, j0, a, dict(sorted(mother.items())))


def inverse(w: WaveletExpansion, filt: FilterPair) -> GridFunction:
    grid = w.grid
    _check_level(grid, w.j0)
    for j in w.mother:
        if not w.j0 <= j < grid.J:
            raise MalformedExpansionError(f"mother scale {j} outside [{w.j0}, {grid.J})")
    if w.father.shape != (_level_size(grid, w.j0),) * grid.dim:
        raise MalformedExpansionError("father array has the wrong shape")
    a = np.asarray(w.father, dtype=float)
    for j in range(w.j0, grid.J):
        det = w.mother.get(j)
        a = _synthesize(a, det if det else None, filt)
    return GridFunction(grid, a * grid.h ** (-grid.dim / 2.0))


def project_Pj(f: GridFunction, j: int, filt: FilterPair) -> GridFunction:
    """Orthogonal projection onto ``V_j`` (father-only partial sum at scale ``j``)."""
    _check_level(f.grid, j)
    w = forward(f, j, filt)
    return GridFunction(f.grid, _cascade(w.father, None, j, f.grid, filt))


def project_Qj(f: GridFunction, j: int, filt: FilterPair) -> GridFunction:
    """Orthogonal projection onto ``W_j`` (mother coefficients of scale ``j``)."""
    _check_level(f.grid, j, allow_J=False)
    w = forward(f, j, filt)
    z = np.zeros_like(w.father)
    return GridFunction(f.grid, _cascade(z, w.mother[j], j, f.grid, filt))


def multiresolution(f: GridFunction, j0: int, filt: FilterPair):
    """Expansion plus ``P_j f`` and ``Q_j f`` sample arrays for ``j0 <= j < J``.

    Returns ``(w, P, Q)`` with ``P[j]`` and ``Q[j]`` finest-level arrays.
    """
    grid = f.grid
    w = forward(f, j0, filt)
    P, Q = {}, {}
    P[j0] = _cascade(w.father, None, j0, grid, filt)
    for j in range(j0, grid.J):
        Q[j] = _cascade(_zeros_level(grid, j), w.mother[j], j, grid, filt)
        if j + 1 < grid.J:
            P[j + 1] = P[j] + Q[j]
    return w, P, Q


def _zeros_level(grid: Grid, j: int) -> np.ndarray:
    return np.zeros((_level_size(grid, j),) * grid.dim)


def basis_function(grid: Grid, filt: FilterPair, j: int, k, lam: str = "phi") -> GridFunction:
    """Discretized ``phi_I`` (``lam='phi'``) or ``psi_I^lam`` for ``I = (j, k)``."""
    _check_level(grid, j, allow_J=(lam == "phi"))
    k = (k,) if np.isscalar(k) else tuple(k)
    coef = _zeros_level(grid, j)
    coef[k] = 1.0
    if lam == "phi":
        return GridFunction(grid, _cascade(coef, None, j, grid, filt))
    if lam not in species(grid.dim):
        raise ValueError(f"unknown species {lam!r}")
    return GridFunction(grid, _cascade(np.zeros_like(coef), {lam: coef}, j, grid, filt))


def wrap_flags(grid: Grid, filt: FilterPair, j: int) -> np.ndarray:
    """True where the support ``2**-j [k, k + 2d - 1]`` crosses the torus seam."""
    n = _level_size(grid, j)
    k = np.arange(n)
    flag1 = k + filt.support_length - 1 > n
    if grid.dim == 1:
        return flag1
    return flag1[:, None] | flag1[None, :]


def drop_wrapped(w: WaveletExpansion, filt: FilterPair) -> WaveletExpansion:
    """Copy of ``w`` with every seam-crossing coefficient set to zero."""
    out = w.copy()
    out.father[wrap_flags(w.grid, filt, w.j0)] = 0.0
    for j, m in out.mother.items():
        flags = wrap_flags(w.grid, filt, j)
        for arr in m.values():
            arr[flags] = 0.0
    return out


def dump_coeffs(w: WaveletExpansion) -> str:
    """Text dump, one ``j k [lambda] value`` line per coefficient, sorted by ``(j, k)``."""
    rows = sorted(w.items(), key=lambda t: (t[0].j, t[0].k, t[1]))
    lines = []
    for cube, lam, val in rows:
        k = ",".join(str(v) for v in cube.k)
        lines.append(f"{cube.j} {k} {lam} {val!r}")
    return "\n".join(lines) + ("\n" if lines else "")
