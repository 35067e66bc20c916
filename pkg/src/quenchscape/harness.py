"""Experiment configs and runners behind the command-line subcommands.

A config file is TOML with an optional ``[run]`` table (seed, workers, out,
format) and one table per subcommand, named after it. Each runner turns its
config into a list of ``Table`` objects; persistence lives in ``output``.
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from quenchscape.core import ValidationError
from quenchscape.expressivity import EnsembleConfig, frame_potentials, haar_frame_potential, sample_ensemble_curve
from quenchscape.landscape import (
    SaturationRule,
    ScanGrid,
    ScanRangeError,
    haar_reference,
    onset_from_scan,
    run_scan,
)
from quenchscape.models import MODELS, PHASES
from quenchscape.output import Table
from quenchscape.phases import (
    GOE_MEAN_R,
    POISSON_MEAN_R,
    LevelStatistics,
    classify_phase,
    realization_ratios,
)
from quenchscape.runtime import parallel_map, task_rng
from quenchscape.variational import (
    BENCHMARK_MAXCUT_ADJACENCY,
    MaxCutInstance,
    OptimizerConfig,
    brute_force_maxcut,
    run_maxcut,
    run_vqe,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SUBCOMMANDS = ("level-stats", "frame-potential", "bp-scan", "entropy-scan", "regimes", "vqe", "maxcut")


def _from_mapping(cls, data: dict, where: str):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValidationError(f"[{where}] unknown keys: {', '.join(sorted(unknown))}")
    return cls(**data)


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    workers: int = 1
    out: str = "results"
    format: str = "csv"

    def __post_init__(self):
        if self.format not in ("csv", "json"):
            raise ValidationError(f"format must be csv or json, not {self.format!r}")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class LevelStatsConfig:
    model: str = "nn"
    n: int = 9
    W: tuple = (0.0, 5.0, 50.0)
    realizations: int = 500
    bins: int = 25
    tau: float = 0.08
    J: float = 1.0
    B: float | None = None
    alpha: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "W", tuple(float(w) for w in self.W))
        if self.model not in MODELS:
            raise ValidationError(f"unknown model {self.model!r}")
        if not self.W or any(w < 0 for w in self.W) or len(set(self.W)) != len(self.W):
            raise ValidationError("W list must be non-empty, non-negative and without repeats")
        if self.realizations < 1:
            raise ValidationError("realizations must be >= 1")


@dataclass(frozen=True)
class FramePotentialConfig:
    model: str = "nn"
    phases: tuple = PHASES
    n: tuple = (5,)
    M: tuple = (0, 1, 2, 4, 8, 16)
    N: int = 5000
    t: float = 1.0
    initial_state: str | None = None
    W: dict | None = None

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(self.phases))
        object.__setattr__(self, "n", tuple(int(x) for x in self.n))
        object.__setattr__(self, "M", tuple(int(x) for x in self.M))
        if self.N < 2:
            raise ValidationError("N must be >= 2")


@dataclass(frozen=True)
class ScanConfig:
    model: str = "nn"
    phases: tuple = PHASES
    n: tuple = (5, 6, 7)
    M: tuple = (0, 1, 2, 4, 8, 16, 32)
    R: int = 400
    observable: str = "Z1Z2"
    cut: int | None = None
    t: float = 1.0
    initial_state: str | None = None
    W: dict | None = None
    frame_potential: bool = True
    # saturation rule, used by `regimes`
    delta: float = 0.1
    scale: str = "excursion"
    noise_sigmas: float = 2.0
    statistics: tuple = ("loss-variance", "entropy-mean")

    def grid(self, seed: int) -> ScanGrid:
        return ScanGrid(
            n_list=self.n,
            M_list=self.M,
            phases=tuple(self.phases),
            model=self.model,
            R=self.R,
            observable=self.observable,
            cut=self.cut,
            seed=seed,
            t=self.t,
            initial_state=self.initial_state,
            W=self.W,
            frame_potential=self.frame_potential,
        )

    def rule(self) -> SaturationRule:
        return SaturationRule(delta=self.delta, scale=self.scale, noise_sigmas=self.noise_sigmas)


@dataclass(frozen=True)
class OptimizerSection:
    method: str = "momentum"
    learning_rate: float = 0.05
    momentum: float = 0.9
    epochs: int = 100
    eps: float = 1e-3
    clip_norm: float | None = None
    beta2: float = 0.999

    def build(self, seed: int) -> OptimizerConfig:
        return OptimizerConfig(seed=seed, **asdict(self))


@dataclass(frozen=True)
class VQEConfig:
    instances: int = 20
    n: int = 7
    M: int = 6
    ansatz_model: str = "nn"
    target_model: str = "long-range"
    init_phase: str = "mbl"
    optimizer: OptimizerSection = field(default_factory=OptimizerSection)


@dataclass(frozen=True)
class MaxCutConfig:
    instances: int = 20
    M: int = 6
    ansatz_model: str = "nn"
    init_phase: str = "mbl"
    threshold: float = 0.01
    adjacency: tuple | None = None
    optimizer: OptimizerSection = field(default_factory=lambda: OptimizerSection(epochs=50))

    def graph(self) -> MaxCutInstance:
        A = BENCHMARK_MAXCUT_ADJACENCY if self.adjacency is None else np.array(self.adjacency, dtype=float)
        return MaxCutInstance(A)


SECTIONS = {
    "level-stats": LevelStatsConfig,
    "frame-potential": FramePotentialConfig,
    "bp-scan": ScanConfig,
    "entropy-scan": ScanConfig,
    "regimes": ScanConfig,
    "vqe": VQEConfig,
    "maxcut": MaxCutConfig,
}


def parse_section(subcommand: str, data: dict):
    cls = SECTIONS[subcommand]
    data = dict(data)
    if cls in (VQEConfig, MaxCutConfig) and "optimizer" in data:
        base = cls().optimizer
        data["optimizer"] = _from_mapping(OptimizerSection, {**asdict(base), **data["optimizer"]}, f"{subcommand}.optimizer")
    if cls is MaxCutConfig and data.get("adjacency") is not None:
        data["adjacency"] = tuple(tuple(float(x) for x in row) for row in data["adjacency"])
    return _from_mapping(cls, data, subcommand)


def load_config(path: str | Path, subcommand: str) -> tuple[RunConfig, object]:
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    run = _from_mapping(RunConfig, doc.get("run", {}), "run")
    return run, parse_section(subcommand, doc.get(subcommand, {}))


def canonical(section) -> dict:
    """Plain-dict form of a config section, used for hashing and the manifest."""

    def plain(v):
        if isinstance(v, tuple):
            return [plain(x) for x in v]
        if isinstance(v, dict):
            return {k: plain(x) for k, x in sorted(v.items())}
        return v

    return {k: plain(v) for k, v in asdict(section).items()}


# -- runners ---------------------------------------------------------------------------


def _level_stats_task(args):
    cfg, seed, W, r = args
    rng = task_rng(seed, "level-stats", cfg.model, cfg.n, W, r)
    kw = {"J": cfg.J}
    if cfg.B is not None:
        kw["B"] = cfg.B
    if cfg.alpha is not None:
        kw["alpha"] = cfg.alpha
    return realization_ratios(cfg.model, cfg.n, W, rng, **kw)


def level_stats(cfg: LevelStatsConfig, seed: int, workers: int = 1) -> list[Table]:
    summary = Table(
        "level_stats_summary",
        ("model", "n", "W", "ratios", "mean_r", "tv_goe", "tv_poisson", "degenerate_fraction", "label"),
    )
    tables = []
    for W in cfg.W:
        ratios = np.concatenate(
            parallel_map(_level_stats_task, [(cfg, seed, W, r) for r in range(cfg.realizations)], workers=workers)
        )
        stats = LevelStatistics(ratios, bins=cfg.bins)
        label = classify_phase(stats, tau=cfg.tau, min_ratios=min(500, ratios.size))
        hist = Table(f"level_stats_W{W:g}", ("bin_center", "density"))
        for c, d in zip(stats.centers, stats.densities):
            hist.add(float(c), float(d))
        tables.append(hist)
        summary.add(
            cfg.model, cfg.n, W, int(ratios.size), label.mean_r, label.tv_goe, label.tv_poisson,
            float(stats.degenerate_fraction), label.label,
        )
    refs = Table("level_stats_reference", ("distribution", "mean_r"))
    refs.add("goe", GOE_MEAN_R)
    refs.add("poisson", POISSON_MEAN_R)
    return [summary, refs, *tables]


def frame_potential_curves(cfg: FramePotentialConfig, seed: int, workers: int = 1) -> list[Table]:
    table = Table("frame_potential", ("model", "phase", "n", "M", "t", "estimate", "se", "haar", "difference", "pairs"))
    for n in cfg.n:
        for phase in cfg.phases:
            W = None if not cfg.W else cfg.W.get(phase)
            ens = EnsembleConfig(
                model=cfg.model, n=n, M=max(cfg.M), phase=phase, W=W, t=cfg.t,
                initial_state=cfg.initial_state, N=cfg.N, seed=seed,
            )
            for M, sample in sample_ensemble_curve(ens, cfg.M, workers=workers).items():
                for t, est in frame_potentials(sample, (1, 2)).items():
                    haar = haar_frame_potential(n, t)
                    table.add(cfg.model, phase, n, M, t, est.value, est.se, haar, est.value - haar, est.pairs)
    return [table]


def _scan_table(result) -> Table:
    table = Table("scan", ("n", "M", "phase", "statistic", "value", "uncertainty"))
    for r in result.rows:
        table.add(r.n, r.M, r.phase, r.statistic, r.value, r.uncertainty)
    return table


def _reference_table(cfg: ScanConfig, statistics) -> Table:
    table = Table("scan_reference", ("n", "statistic", "haar_value"))
    for n in cfg.n:
        ref = haar_reference(n, cfg.observable)
        for s in statistics:
            if s in ref:
                table.add(n, s, ref[s])
    return table


def bp_scan(cfg: ScanConfig, seed: int, workers: int = 1) -> list[Table]:
    stats = ("loss-mean", "loss-variance") + (("F1", "F2", "bound", "empirical-bound") if cfg.frame_potential else ())
    result = run_scan(cfg.grid(seed), workers, stats)
    return [_scan_table(result), _reference_table(cfg, stats)]


def entropy_scan(cfg: ScanConfig, seed: int, workers: int = 1) -> list[Table]:
    grid = cfg.grid(seed)
    grid = ScanGrid(**{**asdict(grid), "frame_potential": False})
    result = run_scan(grid, workers, ("entropy-mean",))
    return [_scan_table(result), _reference_table(cfg, ("entropy-mean",))]


def regimes(cfg: ScanConfig, seed: int, workers: int = 1) -> list[Table]:
    grid = ScanGrid(**{**asdict(cfg.grid(seed)), "frame_potential": False})
    result = run_scan(grid, workers, tuple(cfg.statistics))
    rule = cfg.rule()
    table = Table("regimes", ("n", "statistic", "M_sat_thermal", "M_sat_mbl", "width", "ordered", "status"))
    for n in cfg.n:
        for stat in cfg.statistics:
            onsets, status = {}, "ok"
            for phase in ("thermal", "mbl"):
                try:
                    onsets[phase] = onset_from_scan(result, n, phase, stat, rule)
                except ScanRangeError:
                    onsets[phase], status = -1, "scan-range-too-short"
            th, mbl = onsets["thermal"], onsets["mbl"]
            ok = status == "ok"
            table.add(n, stat, th, mbl, mbl - th if ok else -1, bool(ok and mbl >= th), status)
    return [table, _scan_table(result)]


def _vqe_task(args):
    cfg, seed, k = args
    return run_vqe(
        k, n=cfg.n, M=cfg.M, ansatz_model=cfg.ansatz_model, target_model=cfg.target_model,
        init_phase=cfg.init_phase, cfg=cfg.optimizer.build(seed),
    )


def vqe(cfg: VQEConfig, seed: int, workers: int = 1) -> list[Table]:
    results = parallel_map(_vqe_task, [(cfg, seed, k) for k in range(cfg.instances)], workers=workers)
    traj = Table("vqe_trajectory", ("instance", "epoch", "energy", "relative_error"))
    summary = Table("vqe_summary", ("instance", "exact_energy", "final_energy", "final_relative_error", "best_energy"))
    for res in results:
        for epoch, (e, err) in enumerate(zip(res.trajectory.losses, res.relative_errors)):
            traj.add(res.instance, epoch, float(e), float(err))
        summary.add(res.instance, res.exact_energy, float(res.trajectory.losses[-1]), res.final_error, float(res.trajectory.best_loss))
    errs = np.array([r.final_error for r in results])
    agg = Table("vqe_aggregate", ("statistic", "value"))
    agg.add("instances", len(errs))
    agg.add("mean_relative_error", float(errs.mean()))
    agg.add("std_relative_error", float(errs.std(ddof=1)) if errs.size > 1 else 0.0)
    return [agg, summary, traj]


def _maxcut_task(args):
    cfg, seed, k = args
    return run_maxcut(
        k, cfg.graph(), M=cfg.M, ansatz_model=cfg.ansatz_model, init_phase=cfg.init_phase,
        threshold=cfg.threshold, cfg=cfg.optimizer.build(seed),
    )


def maxcut(cfg: MaxCutConfig, seed: int, workers: int = 1) -> list[Table]:
    graph = cfg.graph()
    best_cut, e0, minimizers = brute_force_maxcut(graph)
    oracle = Table("maxcut_oracle", ("bitstring", "energy", "cut", "optimal"))
    energies, cuts = graph.energies(), graph.cut_values()
    for k in range(1 << graph.n):
        s = format(k, f"0{graph.n}b")
        oracle.add(s, float(energies[k]), float(cuts[k]), s in minimizers)
    results = parallel_map(_maxcut_task, [(cfg, seed, k) for k in range(cfg.instances)], workers=workers)
    traj = Table("maxcut_trajectory", ("instance", "epoch", "energy", "approximation_ratio"))
    summary = Table("maxcut_summary", ("instance", "final_ratio", "fallback", "selected", "final_energy"))
    for res in results:
        for epoch, (e, ratio) in enumerate(zip(res.trajectory.losses, res.ratios)):
            traj.add(res.instance, epoch, float(e), float(ratio))
        selected = " ".join(f"{s}:{p:.4f}" for s, p in res.final.selected)
        summary.add(res.instance, res.final.ratio, res.final.fallback, selected, float(res.trajectory.losses[-1]))
    ratios = np.array([r.final.ratio for r in results])
    agg = Table("maxcut_aggregate", ("statistic", "value"))
    agg.add("instances", len(ratios))
    agg.add("max_cut", best_cut)
    agg.add("ground_energy", e0)
    agg.add("minimizers", " ".join(minimizers))
    agg.add("mean_approximation_ratio", float(ratios.mean()))
    agg.add("std_approximation_ratio", float(ratios.std(ddof=1)) if ratios.size > 1 else 0.0)
    return [agg, oracle, summary, traj]


RUNNERS = {
    "level-stats": level_stats,
    "frame-potential": frame_potential_curves,
    "bp-scan": bp_scan,
    "entropy-scan": entropy_scan,
    "regimes": regimes,
    "vqe": vqe,
    "maxcut": maxcut,
}
