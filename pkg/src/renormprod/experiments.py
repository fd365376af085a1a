"""Corpora, experiment drivers and CSV output shared by the command line.

Every corpus member is drawn as a small set of continuum parameters and only
then sampled, so the same member can be evaluated on grids of different
resolution.  Trial ``t`` draws from ``default_rng([seed, t])``; results do
not depend on the order in which trials run.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from numpy.polynomial import hermite_e

from . import atoms, campanato, divcurl, maximal, paraproducts, wavelets
from .grid import Ball, Grid, GridFunction, ball_mask

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "Molecule",
    "FourierSeries",
    "random_coeff_expansion",
    "random_atom",
    "SUBCOMMANDS",
    "run",
    "to_csv_text",
]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    dim: int = 1
    J: int = 10
    L: int = 8
    p: float = 0.5
    d: int = 4
    seed: int = 0
    corpus_size: int = 10
    variant: str = "inhomogeneous"
    J_sweep: tuple[int, ...] = ()
    mode: str = "hp_times_lipschitz"
    workers: int = 1
    identity_tol: float = 1e-8
    reconstruction_tol: float = 1e-9
    certification_tol: float = 1e-9

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(data)
        if "J_sweep" in kw:
            if not isinstance(kw["J_sweep"], (list, tuple)):
                raise ConfigError("J_sweep must be a list of integers")
            kw["J_sweep"] = tuple(kw["J_sweep"])
        try:
            cfg = cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        cfg.validate()
        return cfg

    def validate(self):
        ints = ("dim", "J", "L", "d", "seed", "corpus_size", "workers")
        for name in ints:
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"{name} must be an integer, got {v!r}")
        if self.dim not in (1, 2):
            raise ConfigError(f"dim must be 1 or 2, got {self.dim}")
        if not isinstance(self.p, (int, float)) or not 0 < self.p <= 1:
            raise ConfigError(f"p must lie in (0, 1], got {self.p!r}")
        if not 1 <= self.d <= 16:
            raise ConfigError(f"d must lie in 1..16, got {self.d}")
        if self.J < 1 or self.L < 1 or self.corpus_size < 0 or self.seed < 0 or self.workers < 1:
            raise ConfigError("J, L and workers must be positive; seed and corpus_size nonnegative")
        if self.L & (self.L - 1):
            raise ConfigError(f"L must be a power of two, got {self.L}")
        if self.variant not in paraproducts.VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.mode not in divcurl.MODES:
            raise ConfigError(f"unknown divcurl mode {self.mode!r}")
        if any(isinstance(j, bool) or not isinstance(j, int) or j < 1 for j in self.J_sweep):
            raise ConfigError(f"J_sweep entries must be positive integers, got {self.J_sweep}")

    def replace(self, **kw) -> "ExperimentConfig":
        d = asdict(self)
        d.update(kw)
        return ExperimentConfig.from_dict(d)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


# -- corpus members ------------------------------------------------------------

@dataclass(frozen=True)
class Molecule:
    """Sum of derivatives of Gaussians; order ``q`` gives ``q`` vanishing moments."""

    centers: tuple
    widths: tuple
    amps: tuple
    order: int = 2

    @classmethod
    def draw(cls, rng: np.random.Generator, L: int, dim: int = 1, count: int = 3, order: int = 2,
             min_width: float = 1 / 16, max_width: float = 1 / 2) -> "Molecule":
        centers = tuple(tuple(float(v) for v in rng.uniform(0, L, dim)) for _ in range(count))
        widths = tuple(float(2.0 ** rng.uniform(math.log2(min_width), math.log2(max_width)))
                       for _ in range(count))
        amps = tuple(float(rng.standard_normal()) for _ in range(count))
        return cls(centers, widths, amps, order)

    def sample(self, grid: Grid) -> GridFunction:
        out = np.zeros(grid.shape)
        herm = np.zeros(self.order + 1)
        herm[-1] = 1.0
        for c, w, a in zip(self.centers, self.widths, self.amps):
            disp = [(x - ci + grid.L / 2) % grid.L - grid.L / 2 for x, ci in zip(grid.coords(), c)]
            t0 = disp[0] / w
            val = hermite_e.hermeval(t0, herm) * np.exp(-0.5 * t0 * t0)
            for extra in disp[1:]:
                t = extra / w
                val = val * np.exp(-0.5 * t * t)
            # L^1-normalized profile at width w
            out = out + a * val / w ** grid.dim
        return GridFunction(grid, out)


@dataclass(frozen=True)
class FourierSeries:
    """Random trigonometric polynomial with spectrum decay ``|k|^-(1 + alpha)`` and ``sup <= 1``."""

    modes: tuple
    coeffs: tuple
    L: int

    @classmethod
    def draw(cls, rng: np.random.Generator, L: int, dim: int = 1, alpha: float = 1.0,
             kmax: int = 32) -> "FourierSeries":
        modes, coeffs = [], []
        rng_k = range(-kmax, kmax + 1)
        grid_k = [(k,) for k in range(1, kmax + 1)] if dim == 1 else \
            [(a, b) for a in rng_k for b in rng_k if (a, b) > (0, 0)]
        for k in grid_k:
            norm = math.sqrt(sum(v * v for v in k))
            if norm > kmax:
                continue
            w = norm ** -(1.0 + alpha)
            modes.append(k)
            coeffs.append((float(rng.standard_normal() * w), float(rng.standard_normal() * w)))
        total = sum(abs(a) + abs(b) for a, b in coeffs)
        scale = 1.0 / total if total > 0 else 1.0
        coeffs = [(a * scale, b * scale) for a, b in coeffs]
        return cls(tuple(modes), tuple(coeffs), L)

    def sample(self, grid: Grid) -> GridFunction:
        out = np.zeros(grid.shape)
        coords = grid.coords()
        for k, (a, b) in zip(self.modes, self.coeffs):
            ph = sum(2 * math.pi * kk * x / self.L for kk, x in zip(k, coords))
            out = out + a * np.cos(ph) + b * np.sin(ph)
        return GridFunction(grid, out)


def random_coeff_expansion(grid: Grid, rng: np.random.Generator, filt: wavelets.FilterPair,
                           decay: float = 0.5) -> GridFunction:
    """Synthesize random wavelet coefficients scaled by ``2**(-decay * j)``."""
    w = wavelets.WaveletExpansion.zeros(grid, 0)
    father = rng.standard_normal(w.father.shape)
    mother = {}
    for j, bands in w.mother.items():
        mother[j] = {lam: rng.standard_normal(v.shape) * 2.0 ** (-decay * j) for lam, v in bands.items()}
    return wavelets.inverse(wavelets.WaveletExpansion(grid, 0, father, mother), filt)


def random_atom(grid: Grid, rng: np.random.Generator, p: float, d: int,
                radius: float | None = None) -> tuple[GridFunction, Ball]:
    """A local ``(p, 2, d)``-atom: random data on a small ball with its minimizing polynomial removed."""
    r = radius if radius is not None else float(2.0 ** rng.uniform(-4, -2))
    center = tuple(float(v) for v in rng.uniform(0, grid.L, grid.dim))
    B = Ball(center, r)
    mask = ball_mask(grid, B)
    raw = GridFunction(grid, np.where(mask, rng.standard_normal(grid.shape), 0.0))
    P = campanato.minimizing_polynomial(raw, B, d).evaluate(grid)
    a = np.where(mask, raw.samples - P.samples, 0.0)
    a = GridFunction(grid, a)
    bound = B.volume ** (0.5 - 1.0 / p)
    return a * (bound / a.lp(2)), B


# -- drivers -------------------------------------------------------------------

def _g(x: float) -> str:
    return repr(float(x))


IDENTITY_HEADER = ("trial", "residual_relative", "norm_pi1", "norm_pi2", "norm_pi3", "norm_pi4")


def _identity_trial(cfg: ExperimentConfig, t: int):
    rng = trial_rng(cfg.seed, t)
    grid = Grid(cfg.dim, cfg.J, cfg.L)
    filt = wavelets.build_filter(cfg.d)
    f = random_coeff_expansion(grid, rng, filt)
    g = random_coeff_expansion(grid, rng, filt)
    res = paraproducts.renormalize(f, g, filt, cfg.variant)
    resid = paraproducts.relative_residual(f, g, res)
    row = (t, _g(resid), *(_g(c.lp(2)) for c in res.components))
    return row, resid <= cfg.identity_tol


BOUNDS_HEADER = ("setting", "operator", "trial", "J", "target_space", "target_norm",
                 "source_norm", "dual_norm", "ratio")

# setting -> (variant, source space, dual kind, {operator: target space})
SETTINGS = {
    "hp_lambda": ("inhomogeneous", "hp", "lipschitz",
                  {"pi1": "h1", "pi2": "hPhi", "pi3": "h1", "pi4": "L1", "S": "L1", "T": "hPhi"}),
    "Hp_lambda": ("homogeneous", "Hp", "lipschitz",
                  {"pi1": "H1", "pi2": "HPhi", "pi3": "H1", "pi4": "L1", "S": "L1", "T": "HPhi"}),
    "H1_bmo": ("homogeneous", "H1", "bmo",
               {"pi1": "H1", "pi2": "H_star_Phi", "pi3": "H1", "pi4": "L1", "S": "L1", "T": "H_star_Phi"}),
}


def bounds_operators() -> list[tuple[str, str]]:
    return [(s, op) for s, (_, _, _, ops) in SETTINGS.items() for op in ops]


def _target_norm(h: GridFunction, space: str, p: float, cache: dict) -> float:
    if space == "L1":
        return h.lp(1)
    kind = "global" if space[0] == "H" else "local"
    key = (id(h), kind)
    if key not in cache:
        cache[key] = (h, maximal.radial_maximal(h, kind=kind))
    prof = cache[key][1]
    if space in ("h1", "H1"):
        return maximal.hardy_quasinorm(h, "hp" if kind == "local" else "Hp", 1.0, profile=prof)
    return maximal.hardy_quasinorm(h, space, p, profile=prof)


def bounds_corpus(cfg: ExperimentConfig, t: int):
    rng = trial_rng(cfg.seed, t)
    alpha = cfg.dim * (1.0 / cfg.p - 1.0)
    order = int(math.floor(alpha + 1e-12)) + 1
    f = Molecule.draw(rng, cfg.L, cfg.dim, count=int(rng.integers(1, 4)), order=order)
    g = FourierSeries.draw(rng, cfg.L, cfg.dim, alpha=alpha)
    return f, g


def _bounds_trial(cfg: ExperimentConfig, t: int, J: int):
    grid = Grid(cfg.dim, J, cfg.L)
    filt = wavelets.build_filter(cfg.d)
    fm, gm = bounds_corpus(cfg, t)
    f, g = fm.sample(grid), gm.sample(grid)
    na = cfg.dim * (1.0 / cfg.p - 1.0)
    rows = []
    results = {}
    lip = campanato.lipschitz_norm(g, na)
    bmo = None
    for setting, (variant, source_space, dual_kind, ops) in SETTINGS.items():
        if variant not in results:
            results[variant] = paraproducts.renormalize(f, g, filt, variant)
        res = results[variant]
        if source_space == "H1":
            source = maximal.hardy_quasinorm(f, "Hp", 1.0)
        else:
            source = maximal.hardy_quasinorm(f, source_space, cfg.p)
        if dual_kind == "lipschitz":
            dual = lip
        else:
            if bmo is None:
                bmo = campanato.dual_norm(g, campanato.DualNormSpec.bmo())
            dual = bmo
        pieces = {"pi1": res.pi1, "pi2": res.pi2, "pi3": res.pi3, "pi4": res.pi4,
                  "S": res.pi4, "T": res.pi1 + res.pi2 + res.pi3}
        cache: dict = {}
        for op, space in ops.items():
            tn = _target_norm(pieces[op], space, cfg.p, cache)
            denom = source * dual
            ratio = tn / denom if denom > 0 else math.inf
            rows.append((setting, op, t, J, space, _g(tn), _g(source), _g(dual), _g(ratio)))
    ok = all(math.isfinite(float(r[-1])) for r in rows)
    return rows, ok


def _norms_trial(cfg: ExperimentConfig, t: int):
    rng = trial_rng(cfg.seed, t)
    grid = Grid(cfg.dim, cfg.J, cfg.L)
    if t % 2 == 0:
        f = Molecule.draw(rng, cfg.L, cfg.dim, order=int(math.floor(cfg.dim * (1 / cfg.p - 1))) + 1).sample(grid)
    else:
        f, _ = random_atom(grid, rng, min(cfg.p, 0.99), int(math.floor(cfg.dim * (1 / cfg.p - 1))))
    p = min(cfg.p, 0.99)
    rows = []
    for space in maximal.SPACES:
        needs_p = space in ("hp", "Hp", "hPhi", "HPhi", "h_musielak_phi_p")
        val = maximal.hardy_quasinorm(f, space, p if needs_p else None)
        rows.append((t, space, _g(val)))
    ok = all(math.isfinite(float(r[-1])) for r in rows)
    return rows, ok


STRUCTURE_HEADER = ("trial", "norm_f_hPhi", "norm_f0_h1", "norm_f1_hp", "C_ratio", "n_atoms0", "n_atoms1")


def structure_corpus(cfg: ExperimentConfig, t: int) -> GridFunction:
    """A random sum of bumps and molecules, normalized to ``||f||_{h^{Phi_p}} = 1``."""
    rng = trial_rng(cfg.seed, t)
    grid = Grid(cfg.dim, cfg.J, cfg.L)
    plain = Molecule.draw(rng, cfg.L, cfg.dim, count=int(rng.integers(1, 4)), order=0,
                          min_width=1 / 16, max_width=1)
    wavy = Molecule.draw(rng, cfg.L, cfg.dim, count=int(rng.integers(1, 4)), order=2)
    f = plain.sample(grid) + wavy.sample(grid)
    return f / maximal.hardy_quasinorm(f, "hPhi", cfg.p)


def structure_row(cfg: ExperimentConfig, t: int, f: GridFunction):
    p = cfg.p
    split = atoms.structure_split(f, p)
    nf = maximal.hardy_quasinorm(f, "hPhi", p)
    n0 = maximal.hardy_quasinorm(split.f0, "hp", 1.0)
    n1 = maximal.hardy_quasinorm(split.f1, "hp", p)
    ratio = (n0 + n1) / nf if nf > 0 else 0.0
    recon = (split.f0 + split.f1 - f).sup()
    row = (t, _g(nf), _g(n0), _g(n1), _g(ratio), len(split.atoms0), len(split.atoms1))
    return row, recon <= cfg.reconstruction_tol, split


def _structure_trial(cfg: ExperimentConfig, t: int):
    row, ok, _ = structure_row(cfg, t, structure_corpus(cfg, t))
    return row, ok


DIVCURL_HEADER = ("trial", "J", "curl_residual", "div_residual", "ratio", "mode")


def divcurl_corpus(cfg: ExperimentConfig, t: int):
    """Gradient of a Gaussian bump (``F``) and perpendicular gradient of a random series (``G``)."""
    rng = trial_rng(cfg.seed, t)
    bump = Molecule.draw(rng, cfg.L, 2, count=1, order=0, min_width=1 / 8, max_width=1 / 3)
    series = FourierSeries.draw(rng, cfg.L, 2, alpha=2 * (1.0 / cfg.p - 1.0) + 1.0, kmax=4)
    return bump, series


def divcurl_fields(cfg: ExperimentConfig, t: int, J: int):
    grid = Grid(2, J, cfg.L)
    bump, series = divcurl_corpus(cfg, t)
    return divcurl.gradient(bump.sample(grid)), divcurl.perp_gradient(series.sample(grid))


def _divcurl_trial(cfg: ExperimentConfig, t: int, J: int):
    F, G = divcurl_fields(cfg, t, J)
    rep = divcurl.divcurl_experiment(F, G, cfg.p, cfg.mode, tol=cfg.certification_tol)
    row = (t, J, _g(rep.curl_residual), _g(rep.div_residual), _g(rep.ratio), cfg.mode)
    return [row], rep.certified and math.isfinite(rep.ratio)


def _levels(cfg: ExperimentConfig) -> tuple[int, ...]:
    return cfg.J_sweep or (cfg.J,)


def _work(args):
    name, cfg, t, J = args
    if name == "identity":
        row, ok = _identity_trial(cfg, t)
        return [row], ok
    if name == "bounds":
        return _bounds_trial(cfg, t, J)
    if name == "norms":
        return _norms_trial(cfg, t)
    if name == "structure":
        row, ok = _structure_trial(cfg, t)
        return [row], ok
    return _divcurl_trial(cfg, t, J)


HEADERS = {
    "identity": IDENTITY_HEADER,
    "bounds": BOUNDS_HEADER,
    "norms": ("function_id", "space_tag", "value"),
    "structure": STRUCTURE_HEADER,
    "divcurl": DIVCURL_HEADER,
}
SUBCOMMANDS = tuple(HEADERS)


@dataclass
class RunResult:
    header: tuple
    rows: list = field(default_factory=list)
    ok: bool = True


def run(name: str, cfg: ExperimentConfig) -> RunResult:
    """Run one subcommand over the corpus; ``ok`` is false when an invariant check failed."""
    if name not in HEADERS:
        raise ConfigError(f"unknown subcommand {name!r}")
    if name == "divcurl" and cfg.dim != 2:
        cfg = cfg.replace(dim=2)
    sweep = _levels(cfg) if name in ("bounds", "divcurl") else (cfg.J,)
    jobs = [(name, cfg, t, J) for J in sweep for t in range(cfg.corpus_size)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(_work, jobs))
    else:
        outcomes = [_work(j) for j in jobs]
    result = RunResult(HEADERS[name])
    for rows, ok in outcomes:
        result.rows.extend(rows)
        result.ok = result.ok and ok
    return result


def to_csv_text(result: RunResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.header)
    w.writerows(result.rows)
    return buf.getvalue()
