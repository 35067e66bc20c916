"""Frame potentials of quench-ansatz ensembles and expressivity-based bounds.

The ensemble for a phase is the set of ``M``-quench unitaries whose per-quench
disorder is drawn uniformly on ``[-W/2, W/2]`` with that phase's ``W``. Its
t-th frame potential is estimated from output states as the mean of
``|<psi_k|psi_l>|^(2t)`` over all unordered pairs ``k < l``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from quenchscape.core import ValidationError, haar_random_states
from quenchscape.models import (
    MODEL_DEFAULTS,
    DEFAULT_QUENCH_TIME,
    initial_state,
    iter_ansatz,
    phase_disorder,
    random_schedule,
)
from quenchscape.runtime import parallel_map, task_rng

PAIR_BLOCK = 1024


@dataclass(frozen=True)
class EnsembleConfig:
    model: str = "nn"
    n: int = 5
    M: int = 10
    phase: str = "thermal"
    W: float | None = None
    t: float = DEFAULT_QUENCH_TIME
    initial_state: str | None = None
    N: int = 5000
    seed: int = 0
    B: float | None = None
    method: str = "auto"

    def __post_init__(self):
        if self.N < 2:
            raise ValidationError("ensemble needs N >= 2 samples")
        if self.M < 0:
            raise ValidationError("M must be >= 0")

    @property
    def disorder(self) -> float:
        return phase_disorder(self.model, self.phase) if self.W is None else float(self.W)

    @property
    def psi0(self) -> np.ndarray:
        kind = self.initial_state or MODEL_DEFAULTS[self.model]["initial_state"]
        return initial_state(kind, self.n)


@dataclass(frozen=True)
class EnsembleSample:
    states: np.ndarray
    config: EnsembleConfig | None = None

    def __post_init__(self):
        norms = np.linalg.norm(self.states, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-10):
            raise ValidationError("ensemble states must be normalized")

    @property
    def N(self) -> int:
        return self.states.shape[0]

    @property
    def n(self) -> int:
        return self.states.shape[1].bit_length() - 1


def _draw_trajectory(args) -> np.ndarray:
    """States of one ensemble draw at each requested depth, shape ``(len(Ms), d)``."""
    config, k, Ms = args
    rng = task_rng(config.seed, "ensemble", config.model, config.phase, config.disorder, config.n, k)
    schedule = random_schedule(config.model, config.n, max(Ms), config.disorder, rng, t=config.t, B=config.B)
    psi0 = config.psi0
    out = np.empty((len(Ms), psi0.shape[0]), dtype=np.complex128)
    wanted = {M: i for i, M in enumerate(Ms)}
    if 0 in wanted:
        out[wanted[0]] = psi0
    for m, psi in enumerate(iter_ansatz(schedule, psi0, config.method), start=1):
        if m in wanted:
            out[wanted[m]] = psi
    return out


def sample_ensemble_curve(config: EnsembleConfig, Ms: Sequence[int], workers: int = 1) -> dict[int, EnsembleSample]:
    """Ensemble samples at several depths from shared draws.

    Draw ``k`` is one quench sequence of length ``max(Ms)``; the sample at
    depth ``M`` holds its first-``M``-quench prefixes. Samples at different
    depths are therefore correlated, exactly as ``sample_ensemble`` at each
    depth with the same seed would give.
    """
    Ms = sorted(set(int(M) for M in Ms))
    per_draw = parallel_map(_draw_trajectory, [(config, k, Ms) for k in range(config.N)], workers=workers, chunksize=16)
    stacked = np.stack(per_draw, axis=1)
    return {M: EnsembleSample(stacked[i], replace(config, M=M)) for i, M in enumerate(Ms)}


def sample_ensemble(config: EnsembleConfig, workers: int = 1) -> EnsembleSample:
    return sample_ensemble_curve(config, [config.M], workers=workers)[config.M]


# -- frame potentials ---------------------------------------------------------


@dataclass(frozen=True)
class FramePotentialEstimate:
    """U-statistic over unordered pairs; ``se`` ignores pair correlations."""

    order: int
    value: float
    se: float
    pairs: int


def _pair_moments(states: np.ndarray, orders: Sequence[int]):
    """Sum and sum-of-squares of |<k|l>|^(2t) over pairs k<l, streamed in blocks."""
    N = states.shape[0]
    sums = np.zeros(len(orders))
    sq = np.zeros(len(orders))
    conj = states.conj()
    for a in range(0, N, PAIR_BLOCK):
        block = conj[a : a + PAIR_BLOCK]
        for b in range(a, N, PAIR_BLOCK):
            f = np.abs(block @ states[b : b + PAIR_BLOCK].T) ** 2
            if a == b:
                f = f[np.triu_indices(f.shape[0], k=1)]
            else:
                f = f.ravel()
            for i, t in enumerate(orders):
                v = f**t
                sums[i] += v.sum()
                sq[i] += np.dot(v, v)
    return sums, sq


def frame_potentials(sample, orders: Sequence[int] = (1, 2)) -> dict[int, FramePotentialEstimate]:
    states = sample.states if isinstance(sample, EnsembleSample) else np.asarray(sample)
    N = states.shape[0]
    if N < 2:
        raise ValidationError("frame potential needs at least two states")
    for t in orders:
        if t not in (1, 2):
            raise ValidationError(f"unsupported frame-potential order {t}")
    pairs = N * (N - 1) // 2
    sums, sq = _pair_moments(states, orders)
    out = {}
    for i, t in enumerate(orders):
        mean = sums[i] / pairs
        var = max(sq[i] / pairs - mean**2, 0.0)
        out[t] = FramePotentialEstimate(t, float(mean), float(np.sqrt(var / pairs)), pairs)
    return out


def frame_potential(sample, t: int) -> FramePotentialEstimate:
    return frame_potentials(sample, (t,))[t]


def haar_frame_potential(n: int, t: int) -> float:
    """1/d for t=1 and 2/(d(d+1)) for t=2, with d = 2**n."""
    d = 1 << n
    if t == 1:
        return 1.0 / d
    if t == 2:
        return 2.0 / (d * (d + 1))
    raise ValidationError(f"unsupported frame-potential order {t}")


def haar_frame_potential_exact(n: int, t: int) -> Fraction:
    """Rational t!(d-1)!/(d+t-1)!, the Haar frame potential of pure states."""
    if t not in (1, 2):
        raise ValidationError(f"unsupported frame-potential order {t}")
    d = 1 << n
    num = Fraction(1)
    for k in range(1, t + 1):
        num *= Fraction(k, d + k - 1)
    return num


# -- loss-variance bounds --------------------------------------------------------


def _op_stats(O, n):
    O = np.asarray(O)
    d = 1 << n
    if O.shape != (d, d):
        raise ValidationError(f"observable shape {O.shape} does not match n={n}")
    tr = float(np.trace(O).real)
    tr2 = float(np.real(np.vdot(O, O)))  # Tr[O^dagger O]
    return d, tr, tr2


def haar_loss_variance(O, n: int) -> float:
    d, tr, tr2 = _op_stats(O, n)
    return (tr**2 + tr2) / (d * (d + 1)) - tr**2 / d**2


def _bound(F1, F2, O, n, k):
    d, tr, tr2 = _op_stats(O, n)
    norm2 = np.sqrt(tr2)
    dF1 = max(F1 - haar_frame_potential(n, 1), 0.0)
    dF2 = max(F2 - haar_frame_potential(n, 2), 0.0)
    first = (np.sqrt(dF2) - (F1 - haar_frame_potential(n, 1))) * norm2 ** (2 * k)
    second = tr / 2 ** (n - 1) * np.sqrt(dF1) * norm2
    return haar_loss_variance(O, n) + first + second


def variance_bound(F1: float, F2: float, O, n: int) -> float:
    """Haar variance plus the frame-potential correction term.

    Differences below the Haar values (Monte-Carlo noise) are clamped to
    zero inside the square roots only.
    """
    return float(_bound(F1, F2, O, n, 1.0))


def empirical_bound(F1: float, F2: float, O, n: int, k: float = 0.7) -> float:
    return float(_bound(F1, F2, O, n, k))


# -- moment operators --------------------------------------------------------------

MAX_MOMENT_QUBITS = 6


def swap_operator(d: int) -> np.ndarray:
    S = np.zeros((d * d, d * d))
    i, j = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    S[(j * d + i).ravel(), (i * d + j).ravel()] = 1.0
    return S


def haar_moment_operator(n: int, t: int) -> np.ndarray:
    """Exact Haar average of ``rho^{(x)t}`` for a pure state: I/d or (I + SWAP)/(d(d+1))."""
    d = 1 << n
    if t == 1:
        return np.eye(d) / d
    if t == 2:
        return (np.eye(d * d) + swap_operator(d)) / (d * (d + 1))
    raise ValidationError(f"unsupported moment order {t}")


def ensemble_moment_operator(states: np.ndarray, t: int) -> np.ndarray:
    """Average of ``(|psi><psi|)^{(x)t}`` over the rows of ``states``."""
    states = np.asarray(states, dtype=np.complex128)
    if t == 1:
        vecs = states
    elif t == 2:
        vecs = np.einsum("ki,kj->kij", states, states).reshape(states.shape[0], -1)
    else:
        raise ValidationError(f"unsupported moment order {t}")
    return vecs.T @ vecs.conj() / states.shape[0]


def moment_deviation_norm(
    sample,
    t: int,
    exact: bool = True,
    *,
    haar_samples: int = 20000,
    seed: int = 0,
    debias: bool = True,
) -> float:
    """Schatten-2 norm of (Haar moment operator - ensemble moment operator).

    The ensemble operator is built explicitly from the sampled states.
    ``exact=False`` replaces the analytic Haar operator with a Monte-Carlo
    average over ``haar_samples`` Haar-random states. With ``debias`` the
    k = l self-overlap contribution of the finite sample is removed, so the
    squared norm estimates the population quantity without the O(1/N) bias
    (point-mass ensembles are unaffected).
    """
    states = sample.states if isinstance(sample, EnsembleSample) else np.asarray(sample)
    N, d = states.shape
    n = d.bit_length() - 1
    if n > MAX_MOMENT_QUBITS:
        raise ValidationError(f"moment operators are limited to n <= {MAX_MOMENT_QUBITS} (got n={n})")
    avg = ensemble_moment_operator(states, t)
    if exact:
        haar = haar_moment_operator(n, t)
    else:
        haar = ensemble_moment_operator(haar_random_states(n, haar_samples, np.random.default_rng(seed)), t)
    diff = haar - avg
    norm_sq = float(np.real(np.vdot(diff, diff)))
    if debias:
        # ||avg||^2 = 1/N + (N-1)/N * F_pairs for pure states; swap in the
        # pair-only estimate. Same for a Monte-Carlo Haar operator.
        norm_sq += _self_overlap_bias(avg, N)
        if not exact:
            norm_sq += _self_overlap_bias(haar, haar_samples)
    return float(np.sqrt(max(norm_sq, 0.0)))


def _self_overlap_bias(op: np.ndarray, N: int) -> float:
    if N < 2:
        return 0.0
    sq = float(np.real(np.vdot(op, op)))
    return (N * sq - 1.0) / (N - 1) - sq
