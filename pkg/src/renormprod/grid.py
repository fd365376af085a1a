"""Uniform periodic dyadic grids and the sampled functions that live on them.

A :class:`Grid` discretizes the torus ``[0, L)^dim`` with spacing
``h = 2**-J``.  Sample ``i`` sits at the cell midpoint ``(i + 1/2) h`` so
that :func:`integrate` is the midpoint rule, exact for piecewise-constant
data.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Grid",
    "GridFunction",
    "DyadicCube",
    "Ball",
    "DegenerateBallError",
    "integrate",
    "restrict_to_ball",
    "cube_to_support_ball",
    "periodic_displacement",
    "to_bytes",
    "from_bytes",
    "to_csv",
]


class DegenerateBallError(ValueError):
    """Raised when a ball contains no grid sample."""


@dataclass(frozen=True)
class Grid:
    dim: int
    J: int
    L: int = 8

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.J < 0:
            raise ValueError(f"finest level J must be >= 0, got {self.J}")
        if self.L < 1:
            raise ValueError(f"box side L must be >= 1, got {self.L}")

    @property
    def h(self) -> float:
        return 2.0 ** -self.J

    @property
    def n(self) -> int:
        """Samples per axis."""
        return self.L << self.J

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    @property
    def volume(self) -> int:
        return self.L ** self.dim

    def axis(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.h

    def coords(self) -> tuple[np.ndarray, ...]:
        """Sample coordinates, one broadcastable array per axis."""
        x = self.axis()
        if self.dim == 1:
            return (x,)
        return (x[:, None], x[None, :])

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.shape))

    def constant(self, c: float) -> "GridFunction":
        return GridFunction(self, np.full(self.shape, float(c)))

    def sample(self, func: Callable[..., np.ndarray]) -> "GridFunction":
        """Point-sample ``func`` at cell midpoints."""
        values = np.broadcast_to(func(*self.coords()), self.shape)
        return GridFunction(self, np.array(values, dtype=float))

    def cell_average(self, func: Callable[..., np.ndarray], order: int = 4) -> "GridFunction":
        """Average ``func`` over each cell with tensor Gauss-Legendre quadrature.

        This is the exact grid representation of polynomials up to degree
        ``2*order - 1``.
        """
        nodes, weights = np.polynomial.legendre.leggauss(order)
        nodes = 0.5 * self.h * nodes
        weights = 0.5 * weights
        out = np.zeros(self.shape)
        base = self.coords()
        if self.dim == 1:
            for t, w in zip(nodes, weights):
                out += w * np.broadcast_to(func(base[0] + t), self.shape)
        else:
            for t0, w0 in zip(nodes, weights):
                for t1, w1 in zip(nodes, weights):
                    out += w0 * w1 * np.broadcast_to(func(base[0] + t0, base[1] + t1), self.shape)
        return GridFunction(self, out)


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.samples, dtype=float)
        if arr.size != self.grid.n ** self.grid.dim:
            raise ValueError(
                f"expected {self.grid.n ** self.grid.dim} samples, got {arr.size}"
            )
        arr = arr.reshape(self.grid.shape)
        if not np.all(np.isfinite(arr)):
            raise ValueError("grid function has non-finite samples")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    # arithmetic keeps the grid and returns new immutable objects
    def _coerce(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise ValueError("grid mismatch")
            return other.samples
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.samples + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.samples - self._coerce(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._coerce(other) - self.samples)

    def __mul__(self, other):
        return GridFunction(self.grid, self.samples * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.samples / self._coerce(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.samples)

    def abs(self) -> "GridFunction":
        return GridFunction(self.grid, np.abs(self.samples))

    def sup(self) -> float:
        return float(np.max(np.abs(self.samples))) if self.samples.size else 0.0

    def lp(self, p: float) -> float:
        """``(∫|f|^p)^(1/p)``; a quasi-norm for ``p < 1``."""
        if math.isinf(p):
            return self.sup()
        s = np.sum(np.abs(self.samples) ** p) * self.grid.cell_volume
        return float(s ** (1.0 / p))

    def allclose(self, other: "GridFunction", atol: float) -> bool:
        return float(np.max(np.abs(self.samples - self._coerce(other)))) <= atol


@dataclass(frozen=True)
class DyadicCube:
    """The cube ``2**-j (k + [0,1)^dim)``."""

    j: int
    k: tuple[int, ...]

    def __post_init__(self):
        k = (self.k,) if isinstance(self.k, (int, np.integer)) else tuple(int(v) for v in self.k)
        object.__setattr__(self, "k", k)

    @property
    def dim(self) -> int:
        return len(self.k)

    @property
    def side(self) -> float:
        return 2.0 ** -self.j

    @property
    def volume(self) -> float:
        return self.side ** self.dim

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.k, dtype=float) + 0.5) * self.side

    @property
    def in_d0(self) -> bool:
        return self.j >= 0


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        c = (float(self.center),) if np.isscalar(self.center) else tuple(float(v) for v in self.center)
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        if self.dim == 1:
            return 2.0 * self.radius
        return math.pi * self.radius ** 2


def periodic_displacement(grid: Grid, center: Sequence[float]) -> tuple[np.ndarray, ...]:
    """Per-axis signed displacement ``x - center`` reduced to ``[-L/2, L/2)``."""
    out = []
    for x, c in zip(grid.coords(), center):
        out.append((x - c + 0.5 * grid.L) % grid.L - 0.5 * grid.L)
    return tuple(out)


def ball_mask(grid: Grid, ball: Ball) -> np.ndarray:
    if ball.dim != grid.dim:
        raise ValueError("ball and grid dimensions differ")
    disp = periodic_displacement(grid, ball.center)
    r2 = sum(d * d for d in disp)
    return np.broadcast_to(r2 < ball.radius ** 2, grid.shape)


def integrate(f: GridFunction) -> float:
    """Midpoint rule ``h^dim * sum(samples)``."""
    return float(math.fsum(f.samples.ravel())) * f.grid.cell_volume


def restrict_to_ball(f: GridFunction, ball: Ball) -> GridFunction:
    """Zero every sample whose periodic distance to the center is ``>= radius``."""
    mask = ball_mask(f.grid, ball)
    if not mask.any():
        raise DegenerateBallError(f"no grid sample inside {ball}")
    return GridFunction(f.grid, np.where(mask, f.samples, 0.0))


def cube_to_support_ball(cube: DyadicCube, m: float) -> Ball:
    """Smallest ball containing the ``m``-fold dilation of ``cube`` about its center."""
    if m < 1:
        raise ValueError(f"dilation m must be >= 1, got {m}")
    return Ball(tuple(cube.center), m * cube.side * math.sqrt(cube.dim) / 2.0)


# -- serialization -----------------------------------------------------------

_HEADER = struct.Struct("<4i")


def to_bytes(f: GridFunction) -> bytes:
    """16-byte header ``(dim, J, L, 0)`` followed by little-endian float64 samples."""
    g = f.grid
    return _HEADER.pack(g.dim, g.J, g.L, 0) + f.samples.astype("<f8").tobytes(order="C")


def from_bytes(buf: bytes) -> GridFunction:
    dim, J, L, _ = _HEADER.unpack_from(buf, 0)
    grid = Grid(dim, J, L)
    data = np.frombuffer(buf, dtype="<f8", offset=_HEADER.size)
    return GridFunction(grid, data.astype(float))


def to_csv(f: GridFunction) -> str:
    lines = ["index,value"]
    for i, v in enumerate(f.samples.ravel()):
        lines.append(f"{i},{float(v)!r}")
    return "\n".join(lines) + "\n"
