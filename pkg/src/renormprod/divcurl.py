"""Spectral vector calculus on the 2-D torus and div-curl product experiments.

Frequencies are ``xi = 2 pi k / L``.  The Riesz multiplier ``-i xi_j/|xi|``
is set to zero at ``xi = 0``, and odd derivatives drop the Nyquist mode so
that real data stays real.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import campanato, maximal, orlicz
from .grid import Grid, GridFunction

__all__ = [
    "VectorField2D",
    "SpectralField",
    "spectral",
    "riesz",
    "derivative",
    "gradient",
    "perp_gradient",
    "divergence",
    "curl2d",
    "inhomogeneous_curl_residual",
    "DivCurlReport",
    "divcurl_experiment",
    "MODES",
]

MODES = ("hp_times_lipschitz", "h1_times_bmo")


@dataclass(frozen=True)
class VectorField2D:
    F1: GridFunction
    F2: GridFunction

    def __post_init__(self):
        if self.F1.grid != self.F2.grid:
            raise ValueError("components live on different grids")
        if self.F1.grid.dim != 2:
            raise ValueError("vector fields need a 2-D grid")

    @property
    def grid(self) -> Grid:
        return self.F1.grid

    @property
    def components(self) -> tuple[GridFunction, GridFunction]:
        return (self.F1, self.F2)

    def dot(self, other: "VectorField2D") -> GridFunction:
        return self.F1 * other.F1 + self.F2 * other.F2

    def map(self, fn) -> "VectorField2D":
        return VectorField2D(fn(self.F1), fn(self.F2))

    def __sub__(self, other: "VectorField2D") -> "VectorField2D":
        return VectorField2D(self.F1 - other.F1, self.F2 - other.F2)


@dataclass(frozen=True)
class SpectralField:
    """Half-spectrum (``rfft2``) coefficients of a real field."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)
    zero_mode_removed: bool = False

    def to_grid(self) -> GridFunction:
        return GridFunction(self.grid, np.fft.irfft2(self.coeffs, s=self.grid.shape))


def spectral(f: GridFunction, remove_mean: bool = False) -> SpectralField:
    c = np.fft.rfft2(f.samples)
    if remove_mean:
        c[0, 0] = 0.0
    return SpectralField(f.grid, c, remove_mean)


def _frequencies(grid: Grid):
    n = grid.n
    k0 = np.fft.fftfreq(n, d=1.0 / n)
    k1 = np.fft.rfftfreq(n, d=1.0 / n)
    scale = 2 * math.pi / grid.L
    return scale * k0[:, None], scale * k1[None, :]


def _odd_mask(grid: Grid, axis: int) -> np.ndarray:
    """Zero the Nyquist row or column, where an odd multiplier has no real counterpart."""
    n = grid.n
    shape = (n, n // 2 + 1)
    m = np.ones(shape)
    if n % 2 == 0:
        if axis == 0:
            m[n // 2, :] = 0.0
        else:
            m[:, n // 2] = 0.0
    return m


def _apply(f: GridFunction, mult: np.ndarray) -> GridFunction:
    out = np.fft.irfft2(np.fft.rfft2(f.samples) * mult, s=f.grid.shape)
    return GridFunction(f.grid, out)


def riesz(j: int, f: GridFunction) -> GridFunction:
    """``R_j f`` with multiplier ``-i xi_j / |xi|`` and the zero mode mapped to 0."""
    if j not in (1, 2):
        raise ValueError(f"Riesz index must be 1 or 2, got {j}")
    if f.grid.dim != 2:
        raise ValueError("riesz works on 2-D grids")
    xi = _frequencies(f.grid)
    norm = np.sqrt(xi[0] ** 2 + xi[1] ** 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        mult = np.where(norm > 0, -1j * xi[j - 1] / norm, 0.0)
    return _apply(f, mult * _odd_mask(f.grid, j - 1))


def derivative(f: GridFunction, axis: int) -> GridFunction:
    """Spectral ``d/dx_{axis+1}``."""
    xi = _frequencies(f.grid)
    return _apply(f, 1j * xi[axis] * _odd_mask(f.grid, axis))


def gradient(u: GridFunction) -> VectorField2D:
    return VectorField2D(derivative(u, 0), derivative(u, 1))


def perp_gradient(v: GridFunction) -> VectorField2D:
    """``(-d2 v, d1 v)``, divergence free."""
    return VectorField2D(-derivative(v, 1), derivative(v, 0))


def divergence(F: VectorField2D) -> GridFunction:
    return derivative(F.F1, 0) + derivative(F.F2, 1)


def curl2d(F: VectorField2D) -> GridFunction:
    """The scalar curl ``d1 F2 - d2 F1``."""
    return derivative(F.F2, 0) - derivative(F.F1, 1)


def _check_psi(psi: maximal.Mollifier, r: int):
    if abs(psi.mass - 1.0) > 1e-12:
        raise ValueError(f"mollifier mass {psi.mass} != 1")
    if psi.moment_order < r:
        raise ValueError(f"mollifier kills moments only to order {psi.moment_order} < {r}")


def inhomogeneous_curl_residual(F: VectorField2D, psi: maximal.Mollifier, alpha: float | None = None) -> GridFunction:
    """``curl(F - psi * F)``; zero certifies the smoothed-curl hypothesis.

    When ``alpha`` is given, ``psi`` must kill moments up to ``floor(2 alpha)``.
    """
    r = 0 if alpha is None else int(math.floor(2 * alpha + 1e-12))
    _check_psi(psi, r)
    rough = F - F.map(lambda c: maximal.convolve(c, psi, 1.0))
    return curl2d(rough)


@dataclass(frozen=True)
class DivCurlReport:
    mode: str
    p: float
    J: int
    curl_residual: float
    div_residual: float
    certified: bool
    target: float
    source: float
    dual: float
    ratio: float
    target_rough: float
    target_smooth: float
    domain: str = "torus"


def _vector_norm(values) -> float:
    return math.sqrt(math.fsum(v * v for v in values))


def divcurl_experiment(F: VectorField2D, G: VectorField2D, p: float = 0.5,
                       mode: str = "hp_times_lipschitz", psi: maximal.Mollifier | None = None,
                       tol: float = 1e-9, family: campanato.BallFamily | None = None) -> DivCurlReport:
    """Ratio of the product norm to the product of the source and dual vector norms.

    ``hp_times_lipschitz`` measures ``||F.G||_{h^{Phi_p}} / (||F||_{h^p} ||G||_{Lambda_{2 alpha}})``
    with ``alpha = 1/p - 1``; ``h1_times_bmo`` measures
    ``||F.G||_{h_*^Phi} / (||F||_{h^1} ||G||_{bmo})``.  Certification failures
    are reported, not raised.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    grid = F.grid
    if G.grid != grid:
        raise ValueError("F and G live on different grids")
    alpha = 1.0 / p - 1.0
    if psi is None:
        psi = maximal.Mollifier.moment_killed(int(math.floor(2 * alpha + 1e-12)))
    scale_f = max(F.F1.sup(), F.F2.sup(), 1.0)
    scale_g = max(G.F1.sup(), G.F2.sup(), 1.0)
    curl_res = inhomogeneous_curl_residual(F, psi, alpha if mode == "hp_times_lipschitz" else None).sup()
    div_res = divergence(G).sup()
    certified = curl_res <= tol * scale_f and div_res <= tol * scale_g

    smooth = F.map(lambda c: maximal.convolve(c, psi, 1.0))
    rough = F - smooth
    prod = F.dot(G)
    if mode == "hp_times_lipschitz":
        target = lambda h: maximal.hardy_quasinorm(h, "hPhi", p)  # noqa: E731
        source = _vector_norm(maximal.hardy_quasinorm(c, "hp", p) for c in F.components)
        dual = _vector_norm(campanato.lipschitz_norm(c, grid.dim * alpha) for c in G.components)
    else:
        target = lambda h: maximal.hardy_quasinorm(h, "h_star_Phi")  # noqa: E731
        source = _vector_norm(maximal.hardy_quasinorm(c, "hp", 1.0) for c in F.components)
        spec = campanato.DualNormSpec.bmo(family=family or campanato.BallFamily())
        dual = _vector_norm(campanato.dual_norm(c, spec) for c in G.components)
    t = target(prod)
    denom = source * dual
    ratio = t / denom if denom > 0 else (0.0 if t == 0 else math.inf)
    return DivCurlReport(mode, p, grid.J, curl_res, div_res, certified, t, source, dual, ratio,
                         target(rough.dot(G)), target(smooth.dot(G)))
