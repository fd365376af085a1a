"""Command line entry point: ``renormprod <subcommand> [--config PATH] [--out DIR]``.

Exit codes: 0 on success, 2 for configuration errors, 3 when an invariant
check failed during the run.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import wavelets
from .experiments import (
    SUBCOMMANDS,
    ConfigError,
    ExperimentConfig,
    random_coeff_expansion,
    run,
    to_csv_text,
    trial_rng,
)
from .grid import Grid

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="renormprod",
                                     description="Wavelet renormalized products and Hardy-space experiments.")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", type=Path, help="JSON file with experiment settings")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
    parser.add_argument("--seed", type=int, help="override the seed from the config")
    parser.add_argument("--workers", type=int, help="run trials on this many processes")
    parser.add_argument("--dump-coeffs", action="store_true",
                        help="also write the wavelet coefficients of the first corpus signal")
    return parser


def load_config(path: Path | None, seed: int | None, workers: int | None) -> ExperimentConfig:
    data = {}
    if path is not None:
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    if seed is not None:
        data["seed"] = seed
    if workers is not None:
        data["workers"] = workers
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.seed, args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    args.out.mkdir(parents=True, exist_ok=True)
    result = run(args.subcommand, cfg)
    (args.out / f"{args.subcommand}.csv").write_text(to_csv_text(result))
    if args.dump_coeffs:
        grid = Grid(cfg.dim, cfg.J, cfg.L)
        filt = wavelets.build_filter(cfg.d)
        f = random_coeff_expansion(grid, trial_rng(cfg.seed, 0), filt)
        w = wavelets.forward(f, 0, filt)
        (args.out / f"{args.subcommand}_coeffs.txt").write_text(wavelets.dump_coeffs(w))
    if not result.ok:
        print(f"{args.subcommand}: invariant check failed", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
