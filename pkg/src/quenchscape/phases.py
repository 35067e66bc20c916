"""Level-spacing-ratio statistics and thermal/MBL classification."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from quenchscape.core import ValidationError
from quenchscape.models import build_hamiltonian, sample_disorder

GOE_MEAN_R = 4.0 - 2.0 * np.sqrt(3.0)
POISSON_MEAN_R = 2.0 * np.log(2.0) - 1.0

THERMALIZED = "Thermalized"
MBL = "MBL"
INDETERMINATE = "Indeterminate"


def spacing_ratios(energies, degenerate_tol: float = 1e-12) -> np.ndarray:
    """Ratios min(d_i, d_{i+1}) / max(d_i, d_{i+1}) of consecutive level gaps.

    Pairs of gaps that are both below ``degenerate_tol`` count as r = 0
    rather than being dropped, so exact degeneracies stay visible.
    """
    E = np.asarray(energies, dtype=float)
    if E.ndim != 1 or E.shape[0] < 3:
        raise ValidationError("need a 1-D array of at least 3 energies")
    gaps = np.diff(E)
    if np.any(gaps < 0):
        raise ValidationError("energies must be sorted ascending")
    lo = np.minimum(gaps[:-1], gaps[1:])
    hi = np.maximum(gaps[:-1], gaps[1:])
    out = np.zeros_like(hi)
    ok = hi >= degenerate_tol
    out[ok] = lo[ok] / hi[ok]
    return out


def _check_r(r):
    r = np.asarray(r, dtype=float)
    if np.any((r < 0) | (r > 1)):
        raise ValidationError("r must lie in [0, 1]")
    return r


def goe_pdf(r):
    r = _check_r(r)
    return 6.75 * (r + r**2) / (1.0 + r + r**2) ** 2.5


def poisson_pdf(r):
    r = _check_r(r)
    return 2.0 / (1.0 + r) ** 2


def poisson_cdf(r):
    r = _check_r(r)
    return 2.0 * r / (1.0 + r)


def bin_probabilities(pdf: Callable, edges) -> np.ndarray:
    """Exact probability mass of ``pdf`` in each histogram bin."""
    edges = np.asarray(edges, dtype=float)
    if pdf is poisson_pdf:
        return np.diff(poisson_cdf(edges))
    return np.array([integrate.quad(pdf, a, b, epsabs=1e-13, epsrel=1e-12)[0] for a, b in zip(edges[:-1], edges[1:])])


@dataclass(frozen=True)
class LevelStatistics:
    ratios: np.ndarray
    bins: int = 25
    edges: np.ndarray = field(init=False, repr=False)
    densities: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        r = _check_r(self.ratios)
        object.__setattr__(self, "ratios", r)
        dens, edges = np.histogram(r, bins=self.bins, range=(0.0, 1.0), density=True)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "densities", dens)

    @property
    def mean_r(self) -> float:
        return float(np.mean(self.ratios))

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def degenerate_fraction(self) -> float:
        return float(np.mean(self.ratios == 0.0))

    def tv_distance(self, pdf: Callable) -> float:
        """Total-variation distance between the binned sample and ``pdf``."""
        p_hist = self.densities * np.diff(self.edges)
        return float(0.5 * np.sum(np.abs(p_hist - bin_probabilities(pdf, self.edges))))


@dataclass(frozen=True)
class PhaseLabel:
    label: str
    mean_r: float
    tv_goe: float
    tv_poisson: float

    def __str__(self):
        return self.label


def classify_phase(stats: LevelStatistics, tau: float = 0.08, min_ratios: int = 500) -> PhaseLabel:
    """Thermalized/MBL only if both the mean ratio and the histogram agree."""
    if stats.ratios.shape[0] < min_ratios:
        raise ValidationError(f"need at least {min_ratios} ratios, got {stats.ratios.shape[0]}")
    mean_r = stats.mean_r
    tv_goe = stats.tv_distance(goe_pdf)
    tv_poi = stats.tv_distance(poisson_pdf)
    closer_to_goe = abs(mean_r - GOE_MEAN_R) < abs(mean_r - POISSON_MEAN_R)
    if closer_to_goe and tv_goe < tau:
        label = THERMALIZED
    elif not closer_to_goe and tv_poi < tau:
        label = MBL
    else:
        label = INDETERMINATE
    return PhaseLabel(label, mean_r, tv_goe, tv_poi)


def realization_ratios(model: str, n: int, W: float, rng: np.random.Generator, **model_kw) -> np.ndarray:
    """Spacing ratios of one disorder realization of a quench Hamiltonian."""
    h = sample_disorder(W, n, rng)
    energies = np.linalg.eigvalsh(build_hamiltonian(model, n, h, **model_kw))
    return spacing_ratios(energies)
