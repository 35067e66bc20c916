"""Loss-variance and entanglement scans over quench depth, size and phase.

A scan runs ``R`` independent quench sequences per ``(n, phase)`` out to the
deepest requested ``M`` and records the loss, the half-chain entropy and
(optionally) the state after each requested depth. All depth-``M``
statistics are then computed across realizations.
"""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from quenchscape.core import ValidationError, diagonal_expectation, expectation, half_chain_entropy
from quenchscape.expressivity import (
    empirical_bound,
    frame_potentials,
    haar_frame_potential,
    haar_loss_variance,
    variance_bound,
)
from quenchscape.models import (
    DEFAULT_QUENCH_TIME,
    MODEL_DEFAULTS,
    initial_state,
    iter_ansatz,
    pauli_operator,
    phase_disorder,
    random_schedule,
    z_signs,
)
from quenchscape.runtime import parallel_map, task_rng

STATISTICS = ("loss-mean", "loss-variance", "entropy-mean", "F1", "F2", "bound", "empirical-bound")


def observable_label(spec: str, n: int) -> str:
    """Expand ``"Z1Z2"``-style specs to a full Pauli string for ``n`` qubits."""
    spec = spec.replace(" ", "").upper()
    if re.fullmatch(r"[IXYZ]+", spec) and len(spec) == n:
        return spec
    terms = re.findall(r"([XYZ])(\d+)", spec)
    if not terms or "".join(p + q for p, q in terms) != spec:
        raise ValidationError(f"cannot parse observable {spec!r}")
    chars = ["I"] * n
    for p, q in terms:
        q = int(q)
        if not 1 <= q <= n:
            raise ValidationError(f"observable acts on qubit {q} outside 1..{n}")
        chars[q - 1] = p
    return "".join(chars)


def observable_diagonal(label: str) -> np.ndarray | None:
    """Diagonal of a Z/I-only Pauli string, else ``None``."""
    if set(label) - {"Z", "I"}:
        return None
    z = z_signs(len(label))
    cols = [q for q, c in enumerate(label) if c == "Z"]
    return np.prod(z[:, cols], axis=1).astype(float) if cols else np.ones(z.shape[0])


@dataclass(frozen=True)
class ScanGrid:
    n_list: tuple = (5, 6, 7)
    M_list: tuple = (0, 1, 2, 4, 8, 16)
    phases: tuple = ("thermal", "mbl")
    model: str = "nn"
    R: int = 400
    observable: str = "Z1Z2"
    cut: int | None = None
    seed: int = 0
    t: float = DEFAULT_QUENCH_TIME
    initial_state: str | None = None
    method: str = "auto"
    frame_potential: bool = True
    W: dict | None = None

    def __post_init__(self):
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        object.__setattr__(self, "M_list", tuple(int(M) for M in self.M_list))
        object.__setattr__(self, "phases", tuple(self.phases))
        if self.R < 2:
            raise ValidationError("need R >= 2 realizations")
        if any(b <= a for a, b in zip(self.M_list, self.M_list[1:])):
            raise ValidationError("M_list must be strictly increasing")
        if self.M_list and self.M_list[0] < 0:
            raise ValidationError("M must be >= 0")

    def disorder(self, phase: str) -> float:
        if self.W and phase in self.W:
            return float(self.W[phase])
        return phase_disorder(self.model, phase)

    def psi0(self, n: int) -> np.ndarray:
        return initial_state(self.initial_state or MODEL_DEFAULTS[self.model]["initial_state"], n)

    def cut_for(self, n: int) -> int:
        return n // 2 if self.cut is None else self.cut


@dataclass(frozen=True)
class ScanRow:
    n: int
    M: int
    phase: str
    statistic: str
    value: float
    uncertainty: float


@dataclass
class ScanResult:
    rows: list = field(default_factory=list)
    grid: ScanGrid | None = None

    def series(self, n: int, phase: str, statistic: str):
        """``(M, value, uncertainty)`` arrays for one curve, sorted by M."""
        sel = sorted(
            (r for r in self.rows if r.n == n and r.phase == phase and r.statistic == statistic),
            key=lambda r: r.M,
        )
        if not sel:
            raise KeyError((n, phase, statistic))
        return (
            np.array([r.M for r in sel]),
            np.array([r.value for r in sel]),
            np.array([r.uncertainty for r in sel]),
        )

    def value(self, n: int, M: int, phase: str, statistic: str) -> ScanRow:
        for r in self.rows:
            if (r.n, r.M, r.phase, r.statistic) == (n, M, phase, statistic):
                return r
        raise KeyError((n, M, phase, statistic))

    def as_records(self) -> list[dict]:
        return [asdict(r) for r in self.rows]


# -- per-realization work ------------------------------------------------------


def _realization(args):
    grid, n, phase, r, keep_states = args
    rng = task_rng(grid.seed, "scan", grid.model, phase, grid.disorder(phase), n, r)
    Ms = grid.M_list
    schedule = random_schedule(grid.model, n, max(Ms), grid.disorder(phase), rng, t=grid.t)
    label = observable_label(grid.observable, n)
    diag = observable_diagonal(label)
    O = None if diag is not None else pauli_operator(label)
    cut = grid.cut_for(n)

    def measure(psi):
        loss = diagonal_expectation(psi, diag) if diag is not None else expectation(psi, O)
        return loss, half_chain_entropy(psi, cut)

    psi0 = grid.psi0(n)
    losses = np.empty(len(Ms))
    entropies = np.empty(len(Ms))
    states = np.empty((len(Ms), psi0.shape[0]), dtype=np.complex128) if keep_states else None
    slot = {M: i for i, M in enumerate(Ms)}

    def record(M, psi):
        i = slot[M]
        losses[i], entropies[i] = measure(psi)
        if keep_states:
            states[i] = psi

    if 0 in slot:
        record(0, psi0)
    for m, psi in enumerate(iter_ansatz(schedule, psi0, grid.method), start=1):
        if m in slot:
            record(m, psi)
    return losses, entropies, states


def variance_se(x: np.ndarray) -> float:
    """Standard error of the unbiased sample variance."""
    R = x.shape[0]
    s2 = np.var(x, ddof=1)
    m4 = np.mean((x - x.mean()) ** 4)
    return float(np.sqrt(max(m4 - s2**2 * (R - 3) / (R - 1), 0.0) / R))


def _bound_with_se(F1, F2, O, n, k):
    """Bound and a finite-difference propagation of the F1/F2 standard errors."""
    fn = variance_bound if k == 1.0 else (lambda a, b, O, n: empirical_bound(a, b, O, n, k))
    centre = fn(F1.value, F2.value, O, n)
    hi = fn(F1.value - F1.se, F2.value + F2.se, O, n)
    lo = fn(F1.value + F1.se, F2.value - F2.se, O, n)
    return centre, 0.5 * abs(hi - lo)


def run_scan(grid: ScanGrid, workers: int = 1, statistics: Sequence[str] = STATISTICS) -> ScanResult:
    want_fp = grid.frame_potential and any(s in statistics for s in ("F1", "F2", "bound", "empirical-bound"))
    rows = []
    for n in grid.n_list:
        label = observable_label(grid.observable, n)
        O = pauli_operator(label) if want_fp else None
        for phase in grid.phases:
            tasks = [(grid, n, phase, r, want_fp) for r in range(grid.R)]
            results = parallel_map(_realization, tasks, workers=workers)
            L = np.stack([res[0] for res in results])
            S = np.stack([res[1] for res in results])
            for i, M in enumerate(grid.M_list):
                stats = {
                    "loss-mean": (L[:, i].mean(), L[:, i].std(ddof=1) / np.sqrt(grid.R)),
                    "loss-variance": (np.var(L[:, i], ddof=1), variance_se(L[:, i])),
                    "entropy-mean": (S[:, i].mean(), S[:, i].std(ddof=1) / np.sqrt(grid.R)),
                }
                if want_fp:
                    states = np.stack([res[2][i] for res in results])
                    fp = frame_potentials(states, (1, 2))
                    stats["F1"] = (fp[1].value, fp[1].se)
                    stats["F2"] = (fp[2].value, fp[2].se)
                    stats["bound"] = _bound_with_se(fp[1], fp[2], O, n, 1.0)
                    stats["empirical-bound"] = _bound_with_se(fp[1], fp[2], O, n, 0.7)
                for name in statistics:
                    if name in stats:
                        v, u = stats[name]
                        rows.append(ScanRow(n, M, phase, name, float(v), float(u)))
    return ScanResult(rows, grid)


def loss_variance_scan(grid: ScanGrid, workers: int = 1) -> ScanResult:
    return run_scan(grid, workers, ("loss-mean", "loss-variance", "F1", "F2", "bound", "empirical-bound"))


def entanglement_scan(grid: ScanGrid, workers: int = 1) -> ScanResult:
    grid = ScanGrid(**{**asdict(grid), "frame_potential": False})
    return run_scan(grid, workers, ("entropy-mean",))


# -- reference values and saturation ------------------------------------------------


def page_entropy(dA: int, dB: int) -> float:
    """Mean entanglement entropy (nats) of a Haar state, ln dA - dA/(2 dB).

    A one-dimensional subsystem carries no entanglement, so ``dA == 1``
    returns 0 rather than the formula's ``-1/(2 dB)``.
    """
    if dA > dB:
        dA, dB = dB, dA
    if dA == 1:
        return 0.0
    return float(np.log(dA) - dA / (2.0 * dB))


class ScanRangeError(ValueError):
    """The scanned depths do not reach a flat tail."""


def _tail_drift(M, V, U):
    """Fitted change across the tail and the noise it is compared with.

    Scan points at different depths share realizations, so their errors are
    strongly correlated and a weighted-slope standard error would be far too
    small. The drift over the tail is compared with the spread expected between
    two points, ``sqrt(2)`` times the median per-point standard error. Series
    without uncertainties fall back to the residual scatter about a line.
    """
    x = M.astype(float)
    span = x[-1] - x[0]
    slope = np.polyfit(x, V, 1)[0] if len(x) >= 2 and span > 0 else 0.0
    if np.all(U > 0):
        return abs(slope) * span, np.sqrt(2.0) * float(np.median(U))
    if len(x) < 3:
        return abs(slope) * span, 0.0
    resid = V - np.polyval(np.polyfit(x, V, 1), x)
    return abs(slope) * span, np.sqrt(2.0) * float(np.std(resid, ddof=2))


@dataclass(frozen=True)
class SaturationRule:
    """Convergence criterion for ``saturation_onset``.

    ``scale="plateau"`` measures deviations relative to the tail value;
    ``scale="excursion"`` relative to the largest deviation anywhere in the
    series, i.e. "within ``delta`` of the total relaxation". ``noise_sigmas``
    widens the band by that many per-point standard errors.
    """

    delta: float = 0.1
    scale: str = "plateau"
    noise_sigmas: float = 0.0
    flat_sigmas: float = 2.0


def saturation_onset(series, delta: float = 0.1, rule: SaturationRule | None = None) -> int:
    """Smallest M after which the series stays within tolerance of its tail.

    ``series`` is a sequence of ``(M, value)`` or ``(M, value, uncertainty)``.
    The tail value is the mean over the last quartile of points. The fitted
    drift across that quartile must stay within ``rule.flat_sigmas`` times
    the point-to-point noise, otherwise ``ScanRangeError`` is raised.
    """
    rule = rule or SaturationRule(delta=delta)
    arr = np.array([tuple(p) + (0.0,) * (3 - len(p)) for p in series], dtype=float)
    if arr.shape[0] < 2:
        raise ValidationError("need at least two points")
    order = np.argsort(arr[:, 0])
    M, V, U = arr[order, 0], arr[order, 1], arr[order, 2]
    k = max(2, len(M) // 4)
    tail = slice(len(M) - k, None)
    v_inf = float(V[tail].mean())
    drift, noise = _tail_drift(M[tail], V[tail], U[tail])
    rounding = 1e-12 * max(1.0, float(np.abs(V).max()))
    if drift > rule.flat_sigmas * noise + rounding:
        raise ScanRangeError(
            f"scan range too short: tail drifts by {drift:.3g} (noise {noise:.3g}) over M={M[tail][0]:g}..{M[-1]:g}"
        )
    dev = np.abs(V - v_inf)
    if rule.scale == "plateau":
        scale = abs(v_inf)
    elif rule.scale == "excursion":
        scale = float(dev.max())
    else:
        raise ValidationError(f"unknown saturation scale {rule.scale!r}")
    ok = dev <= rule.delta * scale + rule.noise_sigmas * U
    # first index from which every later point is within tolerance
    bad = np.flatnonzero(~ok)
    first = 0 if bad.size == 0 else bad[-1] + 1
    if first >= len(M):
        raise ScanRangeError("series never settles within tolerance")
    return int(M[first])


REGIMES = ("I", "II", "III")


def regime_classify(M: int, M_sat_thermal: int, M_sat_mbl: int) -> str:
    if M < M_sat_thermal:
        return "I"
    if M < M_sat_mbl:
        return "II"
    return "III"


@dataclass(frozen=True)
class RegimeReport:
    n: int
    M_sat_thermal: int
    M_sat_mbl: int

    @property
    def width(self) -> int:
        return self.M_sat_mbl - self.M_sat_thermal

    @property
    def ordered(self) -> bool:
        return self.M_sat_mbl >= self.M_sat_thermal

    def boundaries(self) -> dict:
        return {
            "I": (0, self.M_sat_thermal),
            "II": (self.M_sat_thermal, self.M_sat_mbl),
            "III": (self.M_sat_mbl, None),
        }

    def classify(self, M: int) -> str:
        return regime_classify(M, self.M_sat_thermal, self.M_sat_mbl)


def onset_from_scan(result: ScanResult, n: int, phase: str, statistic: str, rule: SaturationRule | None = None) -> int:
    M, V, U = result.series(n, phase, statistic)
    return saturation_onset(list(zip(M, V, U)), rule=rule)


def regime_report(result: ScanResult, n: int, rule: SaturationRule | None = None, statistic: str = "loss-variance") -> RegimeReport:
    return RegimeReport(
        n,
        onset_from_scan(result, n, "thermal", statistic, rule),
        onset_from_scan(result, n, "mbl", statistic, rule),
    )


def saturated_value(result: ScanResult, n: int, phase: str, statistic: str = "loss-variance"):
    """Mean and standard error over the last quartile of depths."""
    M, V, U = result.series(n, phase, statistic)
    k = max(2, len(M) // 4)
    return float(V[-k:].mean()), float(np.sqrt(np.sum(U[-k:] ** 2)) / k)


def haar_reference(n: int, observable: str = "Z1Z2") -> dict:
    label = observable_label(observable, n)
    O = pauli_operator(label)
    return {
        "loss-variance": haar_loss_variance(O, n),
        "entropy-mean": page_entropy(1 << (n // 2), 1 << (n - n // 2)),
        "F1": haar_frame_potential(n, 1),
        "F2": haar_frame_potential(n, 2),
    }
