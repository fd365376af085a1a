"""Orlicz and Musielak-Orlicz growth functions and Luxemburg quasi-norms."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridFunction

__all__ = [
    "OrliczSpec",
    "phi_p",
    "phi_log",
    "theta_log",
    "musielak_phi_p",
    "evaluate",
    "luxemburg_norm",
    "star_norm",
    "indicator_norm",
]

KINDS = ("phi_p", "phi_log", "theta_log", "musielak_phi_p")


@dataclass(frozen=True)
class OrliczSpec:
    kind: str
    p: float | None = None
    n: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown Orlicz kind {self.kind!r}")
        if self.kind in ("phi_p", "musielak_phi_p"):
            if self.p is None or not 0 < self.p < 1:
                raise ValueError(f"{self.kind} needs p in (0, 1), got {self.p}")

    @property
    def is_musielak(self) -> bool:
        return self.kind in ("theta_log", "musielak_phi_p")

    @property
    def lower_type(self) -> float:
        # phi_log and theta_log are of lower type q for every q < 1
        return self.p if self.kind in ("phi_p", "musielak_phi_p") else 1.0

    @property
    def upper_type(self) -> float:
        return 1.0

    @property
    def log_branch(self) -> bool:
        """Whether ``n(1/p - 1)`` is an integer (selects the log-corrected ``phi_p``)."""
        if self.kind != "musielak_phi_p":
            return False
        v = self.n * (1.0 / self.p - 1.0)
        return abs(v - round(v)) < 1e-12 and round(v) >= 1


def phi_p(p: float) -> OrliczSpec:
    return OrliczSpec("phi_p", p)


def phi_log() -> OrliczSpec:
    return OrliczSpec("phi_log")


def theta_log() -> OrliczSpec:
    return OrliczSpec("theta_log")


def musielak_phi_p(p: float, n: int = 1) -> OrliczSpec:
    return OrliczSpec("musielak_phi_p", p, n)


def _norm_x(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.abs(x)


def evaluate(spec: OrliczSpec, tau, x=None):
    """Growth function at ``tau`` (and at position ``|x|`` for Musielak kinds).

    For Musielak kinds ``x`` is the Euclidean norm ``|x|`` or anything
    broadcastable to ``tau``.
    """
    t = np.asarray(tau, dtype=float)
    if np.any(t < 0):
        raise ValueError("tau must be nonnegative")
    if spec.is_musielak and x is None:
        raise ValueError(f"{spec.kind} needs the space variable x")
    with np.errstate(divide="ignore", invalid="ignore"):
        if spec.kind == "phi_p":
            out = t / (1.0 + t ** (1.0 - spec.p))
        elif spec.kind == "phi_log":
            out = t / np.log(math.e + t)
        elif spec.kind == "theta_log":
            r = _norm_x(x)
            out = t / (np.log(math.e + r) + np.log(math.e + t))
        else:
            r = _norm_x(x)
            w = (t * (1.0 + r) ** spec.n) ** (1.0 - spec.p)
            if spec.log_branch:
                w = w * np.log(math.e + r) ** spec.p
            out = t / (1.0 + w)
    out = np.where(t == 0, 0.0, out)
    return float(out) if np.ndim(out) == 0 else out


def _bisect_log(pred, lo: float, hi: float, rtol: float) -> float:
    """Smallest lam in [lo, hi] with ``pred(lam)`` true, for monotone ``pred``."""
    a, b = math.log(lo), math.log(hi)
    while b - a > rtol:
        mid = 0.5 * (a + b)
        if pred(math.exp(mid)):
            b = mid
        else:
            a = mid
    return math.exp(b)


def _modular(values: np.ndarray, spec: OrliczSpec, cell: float, radius) -> float:
    return float(np.sum(evaluate(spec, values, radius))) * cell


def _radius(f: GridFunction) -> np.ndarray | None:
    coords = f.grid.coords()
    r2 = sum(c * c for c in coords)
    return np.broadcast_to(np.sqrt(r2), f.grid.shape)


def luxemburg_norm(f: GridFunction, spec: OrliczSpec, rtol: float = 1e-10) -> float:
    """``inf{lam > 0 : sum Phi(|f|/lam) h^dim <= 1}`` by bisection on ``log lam``.

    Musielak kinds measure ``|x|`` from the origin corner of the torus.
    """
    a = np.abs(np.asarray(f.samples, dtype=float))
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite samples")
    top = float(a.max()) if a.size else 0.0
    if top == 0.0:
        return 0.0
    radius = _radius(f) if spec.is_musielak else None
    keep = a > 0
    vals = a[keep]
    rad = radius[keep] if radius is not None else None
    cell = f.grid.cell_volume
    pred = lambda lam: _modular(vals / lam, spec, cell, rad) <= 1.0  # noqa: E731
    return _bisect_log(pred, 1e-12 * top, 1e12 * top, rtol)


def indicator_norm(measure: float, spec: OrliczSpec, rtol: float = 1e-12) -> float:
    """``||1_B||_{L^Phi}`` for a set of the given measure (non-Musielak kinds)."""
    if spec.is_musielak:
        raise ValueError("indicator_norm needs an x-independent growth function")
    if measure <= 0:
        return 0.0
    pred = lambda lam: measure * evaluate(spec, 1.0 / lam) <= 1.0  # noqa: E731
    return _bisect_log(pred, 1e-15, 1e15, rtol)


def star_norm(f: GridFunction, spec: OrliczSpec, side: int = 1, rtol: float = 1e-10) -> float:
    """Sum of Luxemburg norms of ``f`` restricted to the cubes ``side*(k + [0,1)^dim)``."""
    grid = f.grid
    if grid.L % side:
        raise ValueError(f"cubes of side {side} do not tile a torus of side {grid.L}")
    m = side << grid.J
    total = []
    blocks = grid.L // side
    for idx in np.ndindex(*(blocks,) * grid.dim):
        sl = tuple(slice(i * m, (i + 1) * m) for i in idx)
        piece = np.zeros(grid.shape)
        piece[sl] = f.samples[sl]
        total.append(luxemburg_norm(GridFunction(grid, piece), spec, rtol))
    return float(math.fsum(total))
