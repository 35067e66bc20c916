"""Run every subcommand on a config file, one output directory per subcommand.

    python scripts/reproduce.py [--config configs/reproduction.toml] [--out runs] [--workers K]
"""

import argparse
import time
from pathlib import Path

from quenchscape.cli import run
from quenchscape.harness import SUBCOMMANDS

ROOT = Path(__file__).resolve().parents[1]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=str(ROOT / "configs" / "reproduction.toml"))
    parser.add_argument("--out", default="runs")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--only", nargs="*", choices=SUBCOMMANDS, help="subset of subcommands")
    args = parser.parse_args()
    for sub in args.only or SUBCOMMANDS:
        start = time.perf_counter()
        out = run(sub, args.config, seed=args.seed, workers=args.workers, out=str(Path(args.out) / sub), format=args.format)
        print(f"{sub:16s} {time.perf_counter() - start:8.1f}s  {out / 'manifest.json'}", flush=True)


if __name__ == "__main__":
    main()
