import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate

from quenchscape.core import ValidationError
from quenchscape.phases import (
    GOE_MEAN_R,
    INDETERMINATE,
    MBL,
    POISSON_MEAN_R,
    THERMALIZED,
    LevelStatistics,
    bin_probabilities,
    classify_phase,
    goe_pdf,
    poisson_pdf,
    realization_ratios,
    spacing_ratios,
)


def rejection_sample(pdf, peak, size, rng):
    out = []
    while len(out) < size:
        r = rng.uniform(0, 1, 4 * size)
        u = rng.uniform(0, peak, 4 * size)
        out.extend(r[u < pdf(r)])
    return np.array(out[:size])


def test_spacing_ratio_examples():
    assert np.allclose(spacing_ratios([0, 1, 3]), [0.5])
    assert np.allclose(spacing_ratios([0, 1, 2, 3]), [1.0, 1.0])
    assert np.allclose(spacing_ratios([0, 2, 3, 7]), [0.5, 0.25])


def test_spacing_ratio_validation():
    with pytest.raises(ValidationError):
        spacing_ratios([0, 2, 1])
    with pytest.raises(ValidationError):
        spacing_ratios([0, 1])


def test_degenerate_levels_count_as_zero():
    assert np.array_equal(spacing_ratios([0, 0, 0, 1]), [0.0, 0.0])
    assert np.array_equal(spacing_ratios([1, 1, 2]), [0.0])


@given(
    st.lists(st.floats(-100, 100), min_size=3, max_size=30, unique=True),
    st.integers(-8, 8),
    st.floats(-50, 50),
)
def test_spacing_ratios_scale_invariant(energies, log2c, shift):
    E = np.sort(np.array(energies))
    r = spacing_ratios(E)
    assert np.all((0 <= r) & (r <= 1))
    # the degeneracy tolerance is absolute, so invariance holds for resolved gaps only
    assume(np.diff(E).min() > 1e-6)
    # powers of two scale exactly
    assert np.array_equal(spacing_ratios(2.0**log2c * E), r)
    assert np.allclose(spacing_ratios(2.0**log2c * E + shift), r, atol=1e-6)


def test_pdf_examples():
    assert poisson_pdf(0.0) == 2.0
    assert goe_pdf(0.0) == 0.0
    assert poisson_pdf(1.0) == 0.5
    with pytest.raises(ValidationError):
        goe_pdf(1.5)
    with pytest.raises(ValidationError):
        poisson_pdf(-0.1)


def test_pdf_normalization_and_means():
    for pdf, mean in [(goe_pdf, 4 - 2 * np.sqrt(3)), (poisson_pdf, 2 * np.log(2) - 1)]:
        total = integrate.quad(pdf, 0, 1, epsabs=1e-14, epsrel=1e-13)[0]
        first = integrate.quad(lambda r: r * pdf(r), 0, 1, epsabs=1e-14, epsrel=1e-13)[0]
        assert total == pytest.approx(1.0, abs=1e-8)
        assert first == pytest.approx(mean, abs=1e-6)
    assert GOE_MEAN_R == pytest.approx(0.5359, abs=1e-4)
    assert POISSON_MEAN_R == pytest.approx(0.3863, abs=1e-4)


def test_bin_probabilities_sum_to_one():
    edges = np.linspace(0, 1, 26)
    assert bin_probabilities(goe_pdf, edges).sum() == pytest.approx(1.0, abs=1e-10)
    assert bin_probabilities(poisson_pdf, edges).sum() == pytest.approx(1.0, abs=1e-12)


def test_histogram_integrates_to_one(rng):
    stats = LevelStatistics(rng.uniform(0, 1, 1000))
    assert np.sum(stats.densities * np.diff(stats.edges)) == pytest.approx(1.0, abs=1e-6)


def test_classify_direct_samples(rng):
    goe = rejection_sample(goe_pdf, 1.2, 100_000, rng)
    poi = rejection_sample(poisson_pdf, 2.0, 100_000, rng)
    assert classify_phase(LevelStatistics(goe)).label == THERMALIZED
    assert classify_phase(LevelStatistics(poi)).label == MBL
    assert classify_phase(LevelStatistics(np.zeros(1000))).label == INDETERMINATE


def test_classify_requires_enough_ratios():
    with pytest.raises(ValidationError):
        classify_phase(LevelStatistics(np.full(10, 0.5)))


def test_realization_ratios_length():
    r = realization_ratios("nn", 6, 5.0, np.random.default_rng(0))
    assert r.shape == (62,)


def test_weak_and_strong_disorder_small_chain():
    # n=8 keeps this quick; the n=9, 500-realization version is an acceptance check
    def pooled(W):
        return np.concatenate([realization_ratios("nn", 8, W, np.random.default_rng(k)) for k in range(40)])

    thermal = classify_phase(LevelStatistics(pooled(5.0)))
    mbl = classify_phase(LevelStatistics(pooled(50.0)))
    clean = classify_phase(LevelStatistics(pooled(0.0)))
    assert thermal.mean_r > mbl.mean_r
    assert mbl.label == MBL
    assert clean.label == INDETERMINATE
