"""Atoms, atom-polynomial products and a grid Calderon-Zygmund decomposition.

The decomposition follows the classical Whitney/partition-of-unity route.
For every level ``k`` the open set ``O_k = {m_N f > 2^k}`` is covered by
maximal dyadic cubes ``Q`` (side at most one) whose triple lies in ``O_k``;
each cube carries a normalized cubic B-spline bump supported in ``2Q``.
With ``b_i = (f - P_i) zeta_i`` the pieces

    h_i^k = b_i^k - sum_l [zeta_i^k b_l^{k+1} - P_{i,l} zeta_l^{k+1}]

telescope to ``g^{k+1} - g^k`` and keep the vanishing moments of the small
cubes.  All integrals are discrete sums, so the moment identities hold to
rounding error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, sparse

from . import maximal
from .campanato import _vandermonde, minimizing_polynomial, monomial_exponents
from .grid import Ball, DyadicCube, Grid, GridFunction, ball_mask, integrate, periodic_displacement
from .wavelets import min_level

__all__ = [
    "AtomReport",
    "CZPiece",
    "CZResult",
    "StructureSplit",
    "validate_atom",
    "atom_poly_product",
    "whitney_cover",
    "cz_decompose",
    "structure_split",
    "grand_maximal_order",
]

MOMENT_RTOL = 1e-7


def grand_maximal_order(p: float, dim: int) -> int:
    """``N = floor(2n/p + 1)``, the order of the grand maximal function used for level sets."""
    return int(math.floor(2 * dim / p + 1))


# -- atoms -------------------------------------------------------------------

@dataclass(frozen=True)
class AtomReport:
    kind: str
    p: float
    r: float
    d: int
    support_ball: Ball
    support_ok: bool
    support_excess: float
    size: float
    size_bound: float
    size_ok: bool
    moments: tuple[tuple[tuple[int, ...], float, bool], ...]
    moments_required: bool

    @property
    def moments_ok(self) -> bool:
        return all(ok for _, _, ok in self.moments)

    @property
    def overall(self) -> bool:
        return self.support_ok and self.size_ok and (self.moments_ok or not self.moments_required)


def _lr_norm(a: GridFunction, r: float) -> float:
    return a.lp(r)


def validate_atom(a: GridFunction, B: Ball, kind: str = "local", p: float = 0.5, r: float = 2.0,
                  d: int = 0) -> AtomReport:
    """Check support in ``B``, ``||a||_r <= |B|^(1/r - 1/p)`` and (when required) moments to order ``d``.

    Local atoms need moments only when ``|B| < 1``; global atoms always do.
    Moments are taken about the ball center, which is equivalent and better
    conditioned than moments about the origin.
    """
    if kind not in ("local", "global"):
        raise ValueError(f"unknown atom kind {kind!r}")
    grid = a.grid
    inside = ball_mask(grid, B)
    excess = float(np.max(np.abs(np.where(inside, 0.0, a.samples)), initial=0.0))
    support_ok = excess < 1e-12
    inv_r = 0.0 if math.isinf(r) else 1.0 / r
    bound = B.volume ** (inv_r - 1.0 / p)
    size = _lr_norm(a, r)
    size_ok = size <= bound * (1 + 1e-9)
    required = kind == "global" or B.volume < 1
    l1 = a.lp(1)
    disp = periodic_displacement(grid, B.center)
    moments = []
    for beta in monomial_exponents(grid.dim, d):
        mono = np.ones(grid.shape)
        for x, e in zip(disp, beta):
            if e:
                mono = mono * x ** e
        val = float(math.fsum((a.samples * mono).ravel())) * grid.cell_volume
        tol = MOMENT_RTOL * l1 * B.radius ** sum(beta)
        moments.append((beta, val, abs(val) <= tol))
    return AtomReport(kind, p, r, d, B, support_ok, excess, size, bound, size_ok,
                      tuple(moments), required)


def atom_poly_product(a: GridFunction, B: Ball, g: GridFunction, s: int) -> GridFunction:
    """``a * P_B^s g`` with the polynomial evaluated only on the support of ``a``."""
    inside = ball_mask(a.grid, B)
    if np.max(np.abs(np.where(inside, 0.0, a.samples)), initial=0.0) > 1e-12:
        raise ValueError("atom is not supported in the given ball")
    P = minimizing_polynomial(g, B, s).evaluate(a.grid)
    return GridFunction(a.grid, np.where(inside, a.samples * P.samples, 0.0))


# -- Whitney covering --------------------------------------------------------

def _block_full(mask: np.ndarray, b: int) -> np.ndarray:
    m = mask.shape[0] // b
    if mask.ndim == 1:
        counts = mask.reshape(m, b).sum(axis=1)
    else:
        counts = mask.reshape(m, b, m, b).sum(axis=(1, 3))
    return counts == b ** mask.ndim


def whitney_cover(mask: np.ndarray, grid: Grid, j_top: int = 0) -> list[DyadicCube]:
    """Maximal dyadic cubes of side ``<= 2**-j_top`` whose triple lies in ``mask``.

    At the finest level every sample of ``mask`` is its own admissible cube, so
    the returned cubes are disjoint and cover ``mask`` exactly.
    """
    mask = np.asarray(mask, dtype=bool).reshape(grid.shape)
    cubes = []
    parent = None
    for j in range(j_top, grid.J + 1):
        b = 1 << (grid.J - j)
        if j == grid.J:
            adm = mask.copy()
        else:
            full = _block_full(mask, b)
            adm = ndimage.minimum_filter(full.astype(np.int8), size=3, mode="wrap") > 0
        new = adm.copy()
        if parent is not None:
            up = parent
            for ax in range(grid.dim):
                up = np.repeat(up, 2, axis=ax)
            new &= ~up
        for k in zip(*np.nonzero(new)):
            cubes.append(DyadicCube(j, tuple(int(v) for v in k)))
        parent = adm
    return cubes


_SUPPORT_CACHE: dict = {}


def _bump_1d(b: int):
    """Offsets (relative to the block start) and weights of ``B(2(x - c)/side)`` in sample units."""
    if b not in _SUPPORT_CACHE:
        rel = np.arange(-b, 2 * b)
        t = 2.0 * (rel - (b - 1) / 2.0) / b
        w = maximal.bspline(4, t)
        keep = w > 0
        _SUPPORT_CACHE[b] = (rel[keep], w[keep])
    return _SUPPORT_CACHE[b]


@dataclass
class _Cover:
    k: int
    cubes: list
    supports: list
    zeta: list
    big: np.ndarray
    Z: sparse.csr_matrix
    centers: np.ndarray


def _cube_center(cube: DyadicCube, grid: Grid) -> np.ndarray:
    return cube.center


def _cube_is_big(cube: DyadicCube, grid: Grid) -> bool:
    # nominal ball containing the bump support 2Q
    return Ball(tuple(cube.center), cube.side * math.sqrt(grid.dim)).volume >= 1


def _build_cover(k: int, mask: np.ndarray, grid: Grid, j_top: int, exempt_big: bool) -> _Cover:
    cubes = whitney_cover(mask, grid, j_top)
    n = grid.n
    rows, cols, vals = [], [], []
    supports = []
    for idx, cube in enumerate(cubes):
        b = 1 << (grid.J - cube.j)
        rel, w = _bump_1d(b)
        if grid.dim == 1:
            flat = (cube.k[0] * b + rel) % n
            eta = w
        else:
            i0 = (cube.k[0] * b + rel) % n
            i1 = (cube.k[1] * b + rel) % n
            flat = (i0[:, None] * n + i1[None, :]).ravel()
            eta = np.outer(w, w).ravel()
        supports.append(flat)
        rows.append(np.full(flat.size, idx))
        cols.append(flat)
        vals.append(eta)
    size = n ** grid.dim
    if cubes:
        Z = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                              shape=(len(cubes), size))
        total = np.asarray(Z.sum(axis=0)).ravel()
        if np.any(total[mask.ravel()] <= 0):
            raise RuntimeError("Whitney bumps fail to cover the level set")
        inv = np.zeros(size)
        inv[total > 0] = 1.0 / total[total > 0]
        Z = sparse.csr_matrix(Z.multiply(inv[None, :]))
    else:
        Z = sparse.csr_matrix((0, size))
    zeta = [np.asarray(Z[i, s].todense()).ravel() for i, s in enumerate(supports)]
    big = np.array([exempt_big and _cube_is_big(c, grid) for c in cubes], dtype=bool)
    centers = np.array([c.center for c in cubes]).reshape(len(cubes), grid.dim)
    return _Cover(k, cubes, supports, zeta, big, Z, centers)


def _displacements(grid: Grid, flat: np.ndarray, center: np.ndarray) -> tuple[np.ndarray, ...]:
    idx = np.unravel_index(flat, grid.shape)
    out = []
    for i, c in zip(idx, center):
        x = (i + 0.5) * grid.h
        out.append((x - c + 0.5 * grid.L) % grid.L - 0.5 * grid.L)
    return tuple(out)


def _weighted_fit(values: np.ndarray, disp, weights: np.ndarray, d: int, scale: float) -> np.ndarray:
    """Fitted values of the ``weights``-weighted projection onto polynomials of degree ``<= d``."""
    V = _vandermonde(tuple(x / scale for x in disp), monomial_exponents(len(disp), d))
    sw = np.sqrt(weights)
    coef, *_ = np.linalg.lstsq(V * sw[:, None], values * sw, rcond=1e-13)
    return V @ coef


# -- decomposition -----------------------------------------------------------

@dataclass(frozen=True)
class CZPiece:
    k: int
    i: int
    h: GridFunction = field(repr=False)
    ball: Ball = None
    cube: DyadicCube | None = None
    sup: float = 0.0
    moments: tuple = ()
    remainder: bool = False


@dataclass(frozen=True)
class CZResult:
    pieces: tuple[CZPiece, ...]
    levels: tuple[int, ...]
    remainder: GridFunction
    constant: float
    overlap: dict
    profile: maximal.MaximalProfile

    def resum(self) -> GridFunction:
        grid = self.remainder.grid
        total = np.zeros(grid.shape)
        for pc in self.pieces:
            total += pc.h.samples
        return GridFunction(grid, total)

    def __len__(self):
        return len(self.pieces)

    def __iter__(self):
        return iter(self.pieces)


def _b_values(cover: _Cover, f_flat: np.ndarray, grid: Grid, d: int):
    """``b_i = (f - P_i) zeta_i`` on each support, with ``P_i = 0`` for exempt cubes."""
    out = []
    for i, (s, z) in enumerate(zip(cover.supports, cover.zeta)):
        if cover.big[i]:
            out.append(f_flat[s] * z)
        else:
            disp = _displacements(grid, s, cover.centers[i])
            P = _weighted_fit(f_flat[s], disp, z, d, cover.cubes[i].side)
            out.append((f_flat[s] - P) * z)
    return out


def _make_ball(grid: Grid, flat: np.ndarray, center: np.ndarray) -> Ball:
    disp = _displacements(grid, flat, center)
    dist = np.sqrt(sum(x * x for x in disp))
    return Ball(tuple(center), float(dist.max()) + grid.h / 2)


def _piece(grid: Grid, k: int, i: int, flat: np.ndarray, values: np.ndarray, center,
           cube, d: int, remainder: bool = False, floor: float = 0.0,
           polish=None) -> CZPiece | None:
    acc = np.zeros(grid.n ** grid.dim)
    np.add.at(acc, flat, values)
    # cancellation leaves rounding dust; the remainder layer absorbs it
    acc[np.abs(acc) <= floor] = 0.0
    if polish is not None and np.any(acc):
        # remove the rounding residue of the moments with a multiple of the own bump
        s_i, z_i, side = polish
        exps = monomial_exponents(grid.dim, d)
        Vi = _vandermonde(tuple(x / side for x in _displacements(grid, s_i, center)), exps)
        nz = np.nonzero(acc)[0]
        Vn = _vandermonde(tuple(x / side for x in _displacements(grid, nz, center)), exps)
        mom = np.array([math.fsum(acc[nz] * Vn[:, c]) for c in range(len(exps))])
        q, *_ = np.linalg.lstsq(Vi.T @ (Vi * z_i[:, None]), mom, rcond=1e-13)
        np.add.at(acc, s_i, -(Vi @ q) * z_i)
    if not np.any(acc):
        return None
    nz = np.nonzero(acc)[0]
    ball = _make_ball(grid, np.union1d(nz, np.unique(flat)), np.asarray(center))
    h = GridFunction(grid, acc)
    disp = _displacements(grid, nz, np.asarray(center))
    moments = []
    for beta in monomial_exponents(grid.dim, d):
        mono = np.ones(nz.size)
        for x, e in zip(disp, beta):
            if e:
                mono = mono * x ** e
        moments.append((beta, float(math.fsum(acc[nz] * mono)) * grid.cell_volume))
    return CZPiece(k, i, h, ball, cube, float(np.max(np.abs(acc))), tuple(moments), remainder)


def cz_decompose(f: GridFunction, p: float, d: int, k_range, *, kind: str = "local",
                 profile: maximal.MaximalProfile | None = None) -> CZResult:
    """Calderon-Zygmund pieces ``h_i^k`` of ``f`` for ``k`` from ``k_range[0]`` up.

    Levels above ``k_range[1]`` whose level set is still nonempty are added so
    that the telescoping closes; then ``f - sum h = g^{k_min}``, which vanishes
    whenever ``O_{k_min}`` is the whole torus.  ``kind="global"`` uses the
    global grand maximal function, cubes up to the torus size and moments on
    every cube.
    """
    k_range = tuple(k_range)
    if not k_range:
        raise ValueError("empty k_range")
    k_min, k_max = int(min(k_range)), int(max(k_range))
    grid = f.grid
    N = grand_maximal_order(p, grid.dim)
    if profile is None:
        profile = maximal.grand_maximal(f, N, "grand_" + kind, with_identity=True)
    m = profile.values.samples
    top = float(m.max())
    if top > 0:
        k_max = max(k_max, int(math.ceil(math.log2(top))) - 1)
    j_top = 0 if kind == "local" else min_level(grid)
    exempt = kind == "local"
    f_flat = np.asarray(f.samples).ravel()
    floor = 64 * np.finfo(float).eps * max(float(np.max(np.abs(f_flat), initial=0.0)), top)

    covers = {}
    for k in range(k_min, k_max + 2):
        mask = m > 2.0 ** k
        covers[k] = _build_cover(k, mask, grid, j_top, exempt)
    bvals = {k: _b_values(c, f_flat, grid, d) for k, c in covers.items()}

    pieces = []
    overlap = {}
    for k in range(k_min, k_max + 1):
        cov, nxt = covers[k], covers[k + 1]
        if not cov.cubes:
            continue
        parts = {i: ([cov.supports[i]], [bvals[k][i]]) for i in range(len(cov.cubes))}
        extra = {}
        for l, (sl, zl) in enumerate(zip(nxt.supports, nxt.zeta)):
            bl = bvals[k + 1][l]
            sub = cov.Z[:, sl]
            owners = np.unique(sub.nonzero()[0])
            disp = _displacements(grid, sl, nxt.centers[l])
            side = nxt.cubes[l].side
            resid = bl / np.where(zl > 0, zl, 1.0)  # f - P_l on the support
            for i in owners:
                zi = np.asarray(sub[i].todense()).ravel()
                term = zi * bl
                if not nxt.big[l] or not cov.big[i]:
                    proj = _weighted_fit(resid * zi, disp, zl, d, side) * zl
                    term = term - proj
                    if nxt.big[l]:
                        extra.setdefault(l, []).append(proj)
                parts[i][0].append(sl)
                parts[i][1].append(-term)
        for i, (fl, vl) in parts.items():
            pc = _piece(grid, k, i, np.concatenate(fl), np.concatenate(vl),
                        cov.centers[i], cov.cubes[i], d, floor=floor,
                        polish=None if cov.big[i] else
                        (cov.supports[i], cov.zeta[i], cov.cubes[i].side))
            if pc is not None:
                pieces.append(pc)
        base = len(cov.cubes)
        for l, projs in extra.items():
            pc = _piece(grid, k, base + l, nxt.supports[l], -np.sum(projs, axis=0),
                        nxt.centers[l], nxt.cubes[l], d, floor=floor)
            if pc is not None:
                pieces.append(pc)
        counts = np.zeros(grid.n ** grid.dim, dtype=int)
        for pc in pieces:
            if pc.k == k:
                counts += ball_mask(grid, Ball(pc.ball.center, 0.5 * pc.ball.radius)).ravel()
        overlap[k] = int(counts.max(initial=0))

    recon = np.zeros(grid.n ** grid.dim)
    for pc in pieces:
        recon += np.asarray(pc.h.samples).ravel()
    remainder = GridFunction(grid, f_flat - recon)
    const = max((pc.sup / 2.0 ** pc.k for pc in pieces), default=0.0)
    levels = tuple(sorted({pc.k for pc in pieces}))
    return CZResult(tuple(pieces), levels, remainder, const, overlap, profile)


# -- structure split ----------------------------------------------------------

@dataclass(frozen=True)
class StructureSplit:
    f0: GridFunction
    f1: GridFunction
    atoms0: tuple = ()
    atoms1: tuple = ()
    index_partition: tuple = ((), ())
    lambda0_sum: float = 0.0
    lambda1_quasi: float = 0.0
    constant: float = 0.0
    cz: CZResult | None = None


def _remainder_pieces(g: GridFunction, k_min: int, d: int) -> list[CZPiece]:
    """Split ``g`` over unit cubes; these balls have ``|B| >= 1`` so no moments are needed."""
    grid = g.grid
    m = 1 << grid.J
    out = []
    for idx in np.ndindex(*(grid.L,) * grid.dim):
        sl = tuple(slice(i * m, (i + 1) * m) for i in idx)
        piece = np.zeros(grid.shape)
        piece[sl] = g.samples[sl]
        if not np.any(piece):
            continue
        cube = DyadicCube(0, idx)
        flat = np.flatnonzero(piece)
        pc = _piece(grid, k_min, len(out), flat, piece.ravel()[flat], cube.center, cube, d, True)
        if pc.ball.volume < 1:
            pc = CZPiece(pc.k, pc.i, pc.h, Ball(pc.ball.center, math.sqrt(grid.dim) / 2),
                         cube, pc.sup, pc.moments, True)
        out.append(pc)
    return out


def structure_split(f: GridFunction, p: float, *, d: int | None = None, kind: str = "local",
                    k_min: int | None = None, c: float = 0.5) -> StructureSplit:
    """Split ``f = f0 + f1`` into ``h^1`` and ``h^p`` parts by where the CZ pieces live.

    A piece goes to ``I0`` when at least half of ``c B`` lies in
    ``E = {m_N f < 1}``, otherwise to ``I1``.  Whatever the CZ levels leave
    over is cut along unit cubes and sorted the same way, so the split is exact.
    """
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    grid = f.grid
    if d is None:
        d = int(math.floor(grid.dim * (1.0 / p - 1.0) + 1e-12))
    N = grand_maximal_order(p, grid.dim)
    prof = maximal.grand_maximal(f, N, "grand_" + kind, with_identity=True)
    m = prof.values.samples
    if k_min is None:
        low = float(m.min())
        k_min = int(math.floor(math.log2(low))) - 1 if low > 0 else -30
    cz = cz_decompose(f, p, d, (k_min, k_min), kind=kind, profile=prof)
    pieces = list(cz.pieces) + _remainder_pieces(cz.remainder, k_min, d)
    E = m < 1.0
    const = max(cz.constant, 1e-300)
    I0, I1, atoms0, atoms1 = [], [], [], []
    f0 = np.zeros(grid.shape)
    f1 = np.zeros(grid.shape)
    lam0 = []
    lam1 = []
    for pc in pieces:
        k = pc.k
        if pc.remainder:
            # the remainder is measured on its own scale
            k = int(math.ceil(math.log2(pc.sup / const))) if pc.sup > 0 else k
            pc = CZPiece(k, pc.i, pc.h, pc.ball, pc.cube, pc.sup, pc.moments, True)
        inner = ball_mask(grid, Ball(pc.ball.center, c * pc.ball.radius))
        count = int(inner.sum())
        in_e = int((inner & E).sum())
        key = (pc.k, pc.i, pc.remainder)
        vol = pc.ball.volume
        if count and 2 * in_e >= count:
            lam = const * 2.0 ** k * vol
            I0.append(key)
            lam0.append(lam)
            f0 += pc.h.samples
            atoms0.append((lam, pc))
        else:
            lam = const * 2.0 ** k * vol ** (1.0 / p)
            I1.append(key)
            lam1.append(lam)
            f1 += pc.h.samples
            atoms1.append((lam, pc))
    lam0_sum = float(math.fsum(lam0))
    lam1_q = float(math.fsum(v ** p for v in lam1)) ** (1.0 / p) if lam1 else 0.0
    return StructureSplit(GridFunction(grid, f0), GridFunction(grid, f1), tuple(atoms0), tuple(atoms1),
                          (tuple(I0), tuple(I1)), lam0_sum, lam1_q, const, cz)


def atom_reports(split: StructureSplit, p: float, d: int, kind: str = "local"):
    """Validate every normalized atom ``h / lambda`` of a split; yields ``(side, report)``."""
    for side, atoms, pp in (("h1", split.atoms0, 1.0), ("hp", split.atoms1, p)):
        for lam, pc in atoms:
            a = pc.h / lam
            yield side, validate_atom(a, pc.ball, kind, pp, math.inf, d)
