"""Training quench ansatze: losses, FD gradients, momentum descent, benchmarks.

Trainable groups per quench are the on-site fields, the transverse field and
the evolution time. Times are stored as ``log t`` so the optimizer works
without constraints.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from quenchscape.core import ValidationError, diagonalize
from quenchscape.models import (
    MODEL_DEFAULTS,
    DEFAULT_QUENCH_TIME,
    QuenchSchedule,
    build_hamiltonian,
    hamiltonian_parts,
    initial_state,
    iter_ansatz,
    phase_disorder,
    sample_disorder,
    z_signs,
    _assemble_dense,
)
from quenchscape.runtime import derive_seed, task_rng


@dataclass(frozen=True)
class TrainableParams:
    fields: np.ndarray  # (M, n)
    B: np.ndarray  # (M,)
    log_times: np.ndarray  # (M,)
    train_fields: bool = True
    train_B: bool = True
    train_times: bool = True

    def __post_init__(self):
        fields = np.atleast_2d(np.asarray(self.fields, dtype=float))
        M = fields.shape[0]
        B = np.broadcast_to(np.asarray(self.B, dtype=float), (M,)).copy()
        lt = np.broadcast_to(np.asarray(self.log_times, dtype=float), (M,)).copy()
        object.__setattr__(self, "fields", fields)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "log_times", lt)

    @classmethod
    def from_times(cls, fields, B, times, **flags) -> "TrainableParams":
        times = np.asarray(times, dtype=float)
        if np.any(times <= 0):
            raise ValidationError("quench times must be positive")
        return cls(fields, B, np.log(times), **flags)

    @property
    def M(self) -> int:
        return self.fields.shape[0]

    @property
    def n(self) -> int:
        return self.fields.shape[1]

    @property
    def times(self) -> np.ndarray:
        return np.exp(self.log_times)

    def vector(self) -> np.ndarray:
        parts = []
        if self.train_fields:
            parts.append(self.fields.ravel())
        if self.train_B:
            parts.append(self.B)
        if self.train_times:
            parts.append(self.log_times)
        return np.concatenate(parts) if parts else np.zeros(0)

    def with_vector(self, x) -> "TrainableParams":
        x = np.asarray(x, dtype=float)
        if x.shape != (self.size,):
            raise ValidationError(f"expected {self.size} parameters, got {x.shape}")
        fields, B, lt = self.fields, self.B, self.log_times
        i = 0
        if self.train_fields:
            fields = x[i : i + fields.size].reshape(fields.shape)
            i += fields.size
        if self.train_B:
            B = x[i : i + self.M]
            i += self.M
        if self.train_times:
            lt = x[i : i + self.M]
        return replace(self, fields=fields, B=B, log_times=lt)

    @property
    def size(self) -> int:
        return self.M * (self.n * self.train_fields + self.train_B + self.train_times)

    def coordinate_quench(self) -> np.ndarray:
        """Quench index owning each entry of ``vector()``."""
        owners = []
        if self.train_fields:
            owners.append(np.repeat(np.arange(self.M), self.n))
        if self.train_B:
            owners.append(np.arange(self.M))
        if self.train_times:
            owners.append(np.arange(self.M))
        return np.concatenate(owners) if owners else np.zeros(0, dtype=int)


@dataclass(frozen=True)
class LossSpec:
    """Loss ``<psi0| U^dagger O U |psi0>`` for the chosen ansatz model.

    ``operator`` may be a dense Hermitian matrix or, for diagonal targets, a
    1-D array holding the diagonal.
    """

    operator: np.ndarray
    kind: str = "observable-expectation"
    model: str = "nn"
    initial_state: str | None = None
    J: float = 1.0
    alpha: float | None = None

    def __post_init__(self):
        O = np.asarray(self.operator)
        if O.ndim == 2:
            if O.shape[0] != O.shape[1] or not np.allclose(O, O.conj().T, atol=1e-12):
                raise ValidationError("loss operator must be square Hermitian")
        elif O.ndim != 1 or np.iscomplexobj(O) and np.any(O.imag):
            raise ValidationError("diagonal operator must be a real 1-D array")
        object.__setattr__(self, "operator", O)

    @property
    def dim(self) -> int:
        return self.operator.shape[0]

    @property
    def n(self) -> int:
        return self.dim.bit_length() - 1

    @property
    def psi0(self) -> np.ndarray:
        return initial_state(self.initial_state or MODEL_DEFAULTS[self.model]["initial_state"], self.n)

    def measure(self, psi) -> float:
        O = self.operator
        if O.ndim == 1:
            return float(np.dot(np.abs(psi) ** 2, O.real))
        return float(np.vdot(psi, O @ psi).real)

    def spectrum_bounds(self) -> tuple[float, float]:
        O = self.operator
        w = O.real if O.ndim == 1 else np.linalg.eigvalsh(O)
        return float(w.min()), float(w.max())


def schedule_of(params: TrainableParams, spec: LossSpec) -> QuenchSchedule:
    if params.n != spec.n:
        raise ValidationError(f"params are for n={params.n}, loss operator for n={spec.n}")
    return QuenchSchedule(spec.model, params.n, params.fields, params.times, J=spec.J, B=params.B, alpha=spec.alpha)


def loss(params: TrainableParams, spec: LossSpec) -> float:
    psi = spec.psi0
    for psi in iter_ansatz(schedule_of(params, spec), psi):
        pass
    return spec.measure(psi)


def _quench_unitary(parts, n, t):
    spec = diagonalize(_assemble_dense(n, *parts))
    V = spec.eigenvectors
    return (V * np.exp(-1j * t * spec.eigenvalues)) @ V.conj().T


def finite_diff_gradient(params: TrainableParams, spec: LossSpec, eps: float = 1e-3) -> np.ndarray:
    """Central differences over every trainable coordinate.

    A coordinate owned by quench ``m`` only changes that quench, so each
    shifted loss is ``<phi|O_m|phi>`` with ``phi`` the shifted quench applied
    to the cached state before quench ``m`` and ``O_m`` the observable
    pulled back through the later quenches. This is the same central
    difference as two full ``loss`` calls, at ~1/M of the cost. Times are
    shifted in ``log t``, so they stay positive.
    """
    if eps <= 0:
        raise ValidationError("eps must be positive")
    x0 = params.vector()
    if x0.size == 0:
        return x0
    sched = schedule_of(params, spec)
    n, M = params.n, params.M
    unitaries = [_quench_unitary(sched.parts(m), n, sched.times[m]) for m in range(M)]
    before = [spec.psi0]
    for U in unitaries[:-1]:
        before.append(U @ before[-1])
    O = spec.operator
    O = np.diag(O).astype(np.complex128) if O.ndim == 1 else O.astype(np.complex128)
    pulled = [None] * M
    for m in range(M - 1, -1, -1):
        pulled[m] = O
        O = unitaries[m].conj().T @ O @ unitaries[m]

    owners = params.coordinate_quench()
    grad = np.empty_like(x0)
    for i in range(x0.size):
        m = owners[i]
        vals = []
        for sign in (1.0, -1.0):
            x = x0.copy()
            x[i] += sign * eps
            p = params.with_vector(x)
            parts = hamiltonian_parts(spec.model, n, p.fields[m], J=spec.J, B=p.B[m], alpha=spec.alpha)
            s = diagonalize(_assemble_dense(n, *parts))
            V = s.eigenvectors
            phi = V @ (np.exp(-1j * p.times[m] * s.eigenvalues) * (V.conj().T @ before[m]))
            vals.append(np.vdot(phi, pulled[m] @ phi).real)
        grad[i] = (vals[0] - vals[1]) / (2 * eps)
    return grad


def finite_diff_gradient_naive(params: TrainableParams, spec: LossSpec, eps: float = 1e-3) -> np.ndarray:
    """Reference central differences through full ``loss`` evaluations."""
    x0 = params.vector()
    grad = np.empty_like(x0)
    for i in range(x0.size):
        e = np.zeros_like(x0)
        e[i] = eps
        grad[i] = (loss(params.with_vector(x0 + e), spec) - loss(params.with_vector(x0 - e), spec)) / (2 * eps)
    return grad


# -- optimizer -------------------------------------------------------------------------


OPTIMIZERS = ("momentum", "adam")


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "momentum"
    learning_rate: float = 0.05
    momentum: float = 0.9
    epochs: int = 100
    eps: float = 1e-3
    seed: int = 0
    clip_norm: float | None = None
    beta2: float = 0.999  # second-moment decay, used by "adam" only

    def __post_init__(self):
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ValidationError("clip_norm must be positive")
        if not 0 <= self.beta2 < 1:
            raise ValidationError("beta2 must lie in [0, 1)")
        if self.method not in OPTIMIZERS:
            raise ValidationError(f"unknown optimizer {self.method!r}")
        if self.learning_rate <= 0 or self.eps <= 0:
            raise ValidationError("learning rate and eps must be positive")
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")
        if not 0 <= self.momentum < 1:
            raise ValidationError("momentum must lie in [0, 1)")


class OptimizationError(RuntimeError):
    pass


@dataclass
class Trajectory:
    losses: list = field(default_factory=list)  # loss at the params entering each epoch, then final
    params: list = field(default_factory=list)
    best_loss: float = np.inf
    best_params: TrainableParams | None = None


def optimize(spec: LossSpec, init: TrainableParams, cfg: OptimizerConfig = OptimizerConfig()) -> Trajectory:
    """First-order descent on FD gradients.

    ``cfg.method`` selects heavy-ball momentum (``x += v``, ``v = mu v - lr g``)
    or Adam, where ``cfg.momentum`` is the first-moment decay and
    ``cfg.beta2`` the second. With ``cfg.clip_norm`` set, gradients longer
    than that are rescaled to it before the update.

    ``losses[k]`` is the loss after ``k`` updates, so there are ``epochs+1``
    entries. The best parameters seen are returned alongside.
    """
    traj = Trajectory()
    params = init
    x = params.vector()
    velocity = np.zeros_like(x)
    second = np.zeros_like(x)
    for epoch in range(cfg.epochs + 1):
        value = loss(params, spec)
        if not np.isfinite(value):
            raise OptimizationError(f"non-finite loss {value!r} at epoch {epoch}")
        traj.losses.append(value)
        traj.params.append(params)
        if value < traj.best_loss:
            traj.best_loss, traj.best_params = value, params
        if epoch == cfg.epochs:
            break
        g = finite_diff_gradient(params, spec, cfg.eps)
        if not np.all(np.isfinite(g)):
            raise OptimizationError(f"non-finite gradient at epoch {epoch}")
        if cfg.clip_norm is not None:
            norm = np.linalg.norm(g)
            if norm > cfg.clip_norm:
                g = g * (cfg.clip_norm / norm)
        if cfg.method == "adam":
            velocity = cfg.momentum * velocity + (1 - cfg.momentum) * g
            second = cfg.beta2 * second + (1 - cfg.beta2) * g * g
            step = epoch + 1
            m_hat = velocity / (1 - cfg.momentum**step)
            v_hat = second / (1 - cfg.beta2**step)
            x = x - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + 1e-8)
        else:
            velocity = cfg.momentum * velocity - cfg.learning_rate * g
            x = x + velocity
        params = params.with_vector(x)
        with np.errstate(over="ignore"):
            t = params.times
            finite = np.all(np.isfinite(x)) and np.all(np.isfinite(t)) and np.all(t > 0)
        if not finite:
            raise OptimizationError(f"parameters diverged at epoch {epoch + 1}")
    return traj


# -- initializations -----------------------------------------------------------------


def phase_init(phase: str, n: int, M: int, seed: int, model: str = "nn", **flags) -> TrainableParams:
    """Per-quench fields drawn with the phase's ``W``; default B; t = 1/J."""
    W = phase_disorder(model, phase)
    rng = task_rng(seed, "init", model, phase, n, M)
    fields = np.array([sample_disorder(W, n, rng) for _ in range(M)]).reshape(M, n)
    B = np.full(M, MODEL_DEFAULTS[model]["B"])
    return TrainableParams.from_times(fields, B, np.full(M, DEFAULT_QUENCH_TIME), **flags)


def mbl_init(n: int, M: int, seed: int, model: str = "nn", **flags) -> TrainableParams:
    return phase_init("mbl", n, M, seed, model, **flags)


def thermal_init(n: int, M: int, seed: int, model: str = "nn", **flags) -> TrainableParams:
    return phase_init("thermal", n, M, seed, model, **flags)


# -- VQE -----------------------------------------------------------------------------------


def vqe_target(model: str, n: int, seed: int) -> tuple[np.ndarray, float]:
    """A thermal-phase Hamiltonian of ``model`` and its exact ground energy."""
    rng = task_rng(seed, "vqe-target", model, n)
    h = sample_disorder(phase_disorder(model, "thermal"), n, rng)
    H = build_hamiltonian(model, n, h)
    return H, float(np.linalg.eigvalsh(H)[0])


def relative_error(estimate: float, exact: float) -> float:
    return abs(estimate - exact) / abs(exact)


@dataclass
class VQEResult:
    instance: int
    exact_energy: float
    trajectory: Trajectory

    @property
    def relative_errors(self) -> np.ndarray:
        return np.array([relative_error(v, self.exact_energy) for v in self.trajectory.losses])

    @property
    def final_error(self) -> float:
        return relative_error(self.trajectory.losses[-1], self.exact_energy)


def run_vqe(
    instance: int,
    n: int = 7,
    M: int = 6,
    ansatz_model: str = "nn",
    target_model: str = "long-range",
    init_phase: str = "mbl",
    cfg: OptimizerConfig = OptimizerConfig(),
) -> VQEResult:
    H, e0 = vqe_target(target_model, n, derive_instance_seed(cfg.seed, "vqe", instance))
    spec = LossSpec(H, kind="vqe-energy", model=ansatz_model)
    init = phase_init(init_phase, n, M, derive_instance_seed(cfg.seed, "vqe-init", instance), model=ansatz_model)
    return VQEResult(instance, e0, optimize(spec, init, cfg))


def derive_instance_seed(seed: int, label: str, instance: int) -> int:
    return derive_seed(seed, label, instance)


# -- Max-Cut -----------------------------------------------------------------------------

BENCHMARK_MAXCUT_ADJACENCY = np.array(
    [
        [0, 1, -1, 0, 1],
        [1, 0, 1, 0, 0],
        [-1, 1, 0, -1, 1],
        [0, 0, -1, 0, -1],
        [1, 0, 1, -1, 0],
    ],
    dtype=float,
)


@dataclass(frozen=True)
class MaxCutInstance:
    adjacency: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.adjacency, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValidationError("adjacency must be square")
        if not np.allclose(A, A.T):
            raise ValidationError("adjacency must be symmetric")
        if np.any(np.diag(A) != 0):
            raise ValidationError("adjacency must have a zero diagonal")
        object.__setattr__(self, "adjacency", A)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def energies(self) -> np.ndarray:
        """``sum_{i>j} w_ij z_i z_j`` for every basis state (bit 0 -> z=+1)."""
        z = z_signs(self.n).astype(float)
        return 0.5 * np.einsum("ki,ij,kj->k", z, self.adjacency, z)

    def cut_values(self) -> np.ndarray:
        """Weight of edges crossing the partition, ``sum_{i>j} w_ij (1 - z_i z_j)/2``."""
        total = 0.5 * self.adjacency.sum()
        return 0.5 * (total - self.energies())


def maxcut_hamiltonian(instance: MaxCutInstance) -> np.ndarray:
    return np.diag(instance.energies())


def bitstring(index: int, n: int) -> str:
    return format(index, f"0{n}b")


def brute_force_maxcut(instance: MaxCutInstance):
    """Exhaustive optimum: ``(max cut, ground energy, minimizing bitstrings)``."""
    n = instance.n
    best_cut, best = -np.inf, []
    for bits in product((0, 1), repeat=n):
        z = 1 - 2 * np.array(bits)
        cut = sum(
            instance.adjacency[i, j] * (1 - z[i] * z[j]) / 2 for i in range(n) for j in range(i)
        )
        s = "".join(map(str, bits))
        if cut > best_cut + 1e-12:
            best_cut, best = cut, [s]
        elif abs(cut - best_cut) <= 1e-12:
            best.append(s)
    total = 0.5 * instance.adjacency.sum()
    return float(best_cut), float(total - 2 * best_cut), sorted(best)


def maxcut_solutions(psi, threshold: float = 0.01) -> list[tuple[str, float]]:
    if not 0 < threshold <= 1:
        raise ValidationError("threshold must lie in (0, 1]")
    p = np.abs(np.asarray(psi)) ** 2
    n = p.shape[0].bit_length() - 1
    idx = np.flatnonzero(p >= threshold)
    idx = idx[np.argsort(-p[idx], kind="stable")]
    return [(bitstring(i, n), float(p[i])) for i in idx]


@dataclass(frozen=True)
class ApproximationRatio:
    ratio: float
    selected: tuple
    fallback: bool


def approximation_ratio(psi, instance: MaxCutInstance, threshold: float = 0.01) -> ApproximationRatio:
    """Probability-weighted cut of the selected bitstrings over the maximum cut.

    Probabilities are renormalized within the selection. If nothing passes
    the threshold the single most probable bitstring is used and the result
    is flagged.
    """
    selected = maxcut_solutions(psi, threshold)
    fallback = not selected
    if fallback:
        p = np.abs(np.asarray(psi)) ** 2
        i = int(np.argmax(p))
        selected = [(bitstring(i, instance.n), float(p[i]))]
    cuts = instance.cut_values()
    weights = np.array([q for _, q in selected])
    values = np.array([cuts[int(s, 2)] for s, _ in selected])
    achieved = float(np.dot(weights, values) / weights.sum())
    return ApproximationRatio(achieved / float(cuts.max()), tuple(selected), fallback)


@dataclass
class MaxCutResult:
    instance: int
    trajectory: Trajectory
    ratios: list  # approximation ratio after each update
    final: ApproximationRatio


def final_state(params: TrainableParams, spec: LossSpec) -> np.ndarray:
    psi = spec.psi0
    for psi in iter_ansatz(schedule_of(params, spec), psi):
        pass
    return psi


def run_maxcut(
    instance: int,
    graph: MaxCutInstance | None = None,
    M: int = 6,
    ansatz_model: str = "nn",
    init_phase: str = "mbl",
    threshold: float = 0.01,
    cfg: OptimizerConfig = OptimizerConfig(epochs=50),
) -> MaxCutResult:
    graph = graph or MaxCutInstance(BENCHMARK_MAXCUT_ADJACENCY)
    spec = LossSpec(graph.energies(), kind="maxcut-energy", model=ansatz_model)
    init = phase_init(init_phase, graph.n, M, derive_instance_seed(cfg.seed, "maxcut-init", instance), model=ansatz_model)
    traj = optimize(spec, init, cfg)
    ratios = [approximation_ratio(final_state(p, spec), graph, threshold).ratio for p in traj.params]
    final = approximation_ratio(final_state(traj.params[-1], spec), graph, threshold)
    return MaxCutResult(instance, traj, ratios, final)
