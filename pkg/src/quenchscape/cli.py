"""``quenchscape <subcommand> --config FILE [--seed S] [--workers K] [--out DIR] [--format json|csv]``."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from quenchscape import __version__
from quenchscape.core import ValidationError
from quenchscape.harness import RUNNERS, SUBCOMMANDS, RunConfig, canonical, load_config
from quenchscape.output import RunManifest, config_hash, write_tables
from quenchscape.variational import OptimizationError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quenchscape", description="Analog quench-ansatz experiments.")
    parser.add_argument("--version", action="version", version=f"quenchscape {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML config file")
        p.add_argument("--seed", type=int, help="master seed (overrides [run].seed)")
        p.add_argument("--workers", type=int, help="worker processes (overrides [run].workers)")
        p.add_argument("--out", help="output directory (overrides [run].out)")
        p.add_argument("--format", choices=("csv", "json"), help="output format (overrides [run].format)")
    return parser


def run(subcommand: str, config_path: str, **overrides) -> Path:
    run_cfg, section = load_config(config_path, subcommand)
    run_cfg = RunConfig(**{**run_cfg.__dict__, **{k: v for k, v in overrides.items() if v is not None}})
    resolved = canonical(section)
    # workers, output location and format do not change results, so they stay out of the hash
    chash = config_hash({"subcommand": subcommand, "seed": run_cfg.seed, "config": resolved, "version": __version__})
    start = time.perf_counter()
    tables = RUNNERS[subcommand](section, run_cfg.seed, run_cfg.workers)
    out = Path(run_cfg.out)
    files = write_tables(tables, out, run_cfg.format, chash, run_cfg.seed)
    RunManifest(subcommand, resolved, chash, run_cfg.seed, run_cfg.workers, time.perf_counter() - start, files).write(out)
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = run(args.subcommand, args.config, seed=args.seed, workers=args.workers, out=args.out, format=args.format)
    except (ValidationError, OptimizationError, OSError) as exc:
        print(f"quenchscape {args.subcommand}: error: {exc}", file=sys.stderr)
        return 2
    print(out / "manifest.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
