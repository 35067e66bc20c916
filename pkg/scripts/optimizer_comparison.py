"""Compare the optimizer choices on the VQE and Max-Cut benchmarks.

Prints the mean final relative error (VQE) and mean approximation ratio
(Max-Cut) per optimizer over a few instances. This is the evidence behind the
benchmark optimizer recorded in the decisions ledger.

    python scripts/optimizer_comparison.py [--instances 4] [--workers K]
"""

import argparse

import numpy as np

from quenchscape.runtime import parallel_map
from quenchscape.variational import OptimizationError, OptimizerConfig, run_maxcut, run_vqe

CHOICES = {
    "momentum lr=0.05": OptimizerConfig(),
    "momentum lr=0.05 clip=1": OptimizerConfig(clip_norm=1.0),
    "momentum lr=0.005": OptimizerConfig(learning_rate=0.005),
    "adam lr=0.05": OptimizerConfig(method="adam", learning_rate=0.05),
}


def _vqe(args):
    cfg, k, M = args
    try:
        return run_vqe(k, M=M, cfg=cfg).final_error
    except OptimizationError:
        return np.nan


def _maxcut(args):
    cfg, k = args
    try:
        return run_maxcut(k, M=6, cfg=OptimizerConfig(**{**cfg.__dict__, "epochs": 50})).final.ratio
    except OptimizationError:
        return np.nan


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--instances", type=int, default=4)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()
    ks = range(args.instances)
    print(f"{'optimizer':26s} {'vqe M=6 err':>12s} {'vqe M=2 err':>12s} {'maxcut ratio':>13s}  (nan = diverged)")
    for name, cfg in CHOICES.items():
        e6 = parallel_map(_vqe, [(cfg, k, 6) for k in ks], workers=args.workers)
        e2 = parallel_map(_vqe, [(cfg, k, 2) for k in ks], workers=args.workers)
        mc = parallel_map(_maxcut, [(cfg, k) for k in ks], workers=args.workers)
        print(f"{name:26s} {np.mean(e6):12.4f} {np.mean(e2):12.4f} {np.mean(mc):13.4f}", flush=True)


if __name__ == "__main__":
    main()
