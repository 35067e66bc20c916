import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quenchscape.core import ValidationError, haar_random_states, half_chain_entropy
from quenchscape.landscape import (
    RegimeReport,
    SaturationRule,
    ScanGrid,
    ScanRangeError,
    entanglement_scan,
    haar_reference,
    loss_variance_scan,
    observable_diagonal,
    observable_label,
    page_entropy,
    regime_classify,
    regime_report,
    run_scan,
    saturated_value,
    saturation_onset,
    variance_se,
)
from quenchscape.models import pauli_operator


def test_observable_parsing():
    assert observable_label("Z1Z2", 4) == "ZZII"
    assert observable_label("x3", 3) == "IIX"
    assert observable_label("ZIZ", 3) == "ZIZ"
    with pytest.raises(ValidationError):
        observable_label("Z5", 3)
    with pytest.raises(ValidationError):
        observable_label("Q1", 3)


def test_observable_diagonal_matches_dense():
    for label in ("ZZII", "IZIZ", "IIII"):
        assert np.array_equal(observable_diagonal(label), np.diag(pauli_operator(label)))
    assert observable_diagonal("XZ") is None


def test_page_entropy_examples():
    assert page_entropy(2, 2) == pytest.approx(np.log(2) - 0.5)
    assert page_entropy(2, 2) == pytest.approx(0.1931, abs=1e-4)
    assert page_entropy(16, 32) == pytest.approx(2.5226, abs=1e-4)
    assert page_entropy(1, 8) == 0.0
    assert page_entropy(32, 16) == page_entropy(16, 32)


def test_page_entropy_against_haar_sampling():
    states = haar_random_states(6, 4000, np.random.default_rng(0))
    S = np.array([half_chain_entropy(s) for s in states])
    # exact finite-size average: sum_{k=dB+1}^{dA dB} 1/k - (dA-1)/(2 dB)
    exact = sum(1 / k for k in range(9, 65)) - 7 / 16
    assert abs(S.mean() - exact) < 3 * S.std() / np.sqrt(S.size)
    # the closed form is its large-d approximation
    assert page_entropy(8, 8) == pytest.approx(exact, rel=0.01)


def test_saturation_onset_examples():
    series = [(1, 8), (2, 4), (3, 2), (4, 1.05), (5, 1), (6, 1), (7, 1), (8, 1)]
    assert saturation_onset(series, delta=0.1) == 4
    assert saturation_onset([(M, 3.0) for M in (2, 4, 6, 8)]) == 2


def test_saturation_onset_requires_flat_tail():
    with pytest.raises(ScanRangeError, match="scan range too short"):
        saturation_onset([(M, 10.0 / M) for M in range(1, 13)])


def test_flat_tail_tolerates_correlated_noise():
    # a prefix-shared scan wanders slowly around its plateau; a drift smaller
    # than the per-point error is not a sign of an unfinished relaxation
    M = np.arange(0, 41)
    V = 1 - np.exp(-M / 3.0)
    V[30:] += np.linspace(0, 0.004, 11)
    series = [(m, v, 0.004) for m, v in zip(M, V)]
    assert saturation_onset(series, rule=SaturationRule(scale="excursion", noise_sigmas=2.0)) <= 10
    V[30:] += np.linspace(0, 0.05, 11)
    with pytest.raises(ScanRangeError, match="scan range too short"):
        saturation_onset([(m, v, 0.004) for m, v in zip(M, V)])


def test_saturation_onset_unsorted_input():
    series = [(5, 1), (1, 8), (3, 2), (2, 4), (4, 1.05), (6, 1), (8, 1), (7, 1)]
    assert saturation_onset(series) == 4


def test_saturation_excursion_scale_and_noise_allowance():
    M = np.arange(0, 21)
    V = 1 + 9 * np.exp(-M / 2.0)
    series = list(zip(M, V, np.full_like(V, 0.01)))
    plateau = saturation_onset(series, rule=SaturationRule(scale="plateau"))
    excursion = saturation_onset(series, rule=SaturationRule(scale="excursion"))
    # 10% of the plateau is 0.1; 10% of the excursion is 0.9
    assert plateau == int(np.ceil(2 * np.log(90)))
    assert excursion == int(np.ceil(2 * np.log(10)))
    noisy = saturation_onset(series, rule=SaturationRule(scale="plateau", noise_sigmas=100))
    assert noisy < plateau
    with pytest.raises(ValidationError):
        saturation_onset(series, rule=SaturationRule(scale="other"))


@given(st.floats(0.1, 10), st.floats(-5, 5))
def test_saturation_onset_affine_invariance_of_excursion_rule(a, b):
    M = np.arange(1, 17)
    V = np.where(M < 6, 10.0 / M, 1.0)
    rule = SaturationRule(scale="excursion")
    base = saturation_onset(list(zip(M, V)), rule=rule)
    assert saturation_onset(list(zip(M, a * V + b)), rule=rule) == base


def test_regime_examples():
    assert regime_classify(3, 5, 12) == "I"
    assert regime_classify(8, 5, 12) == "II"
    assert regime_classify(20, 5, 12) == "III"
    rep = RegimeReport(10, 5, 12)
    assert rep.width == 7 and rep.ordered
    assert rep.classify(5) == "II" and rep.classify(12) == "III"
    assert rep.boundaries()["II"] == (5, 12)


def test_variance_se_against_resampling(rng):
    x = rng.standard_normal(400)
    boot = [np.var(rng.choice(x, x.size), ddof=1) for _ in range(2000)]
    assert variance_se(x) == pytest.approx(np.std(boot), rel=0.15)


def test_scan_grid_validation():
    with pytest.raises(ValidationError):
        ScanGrid(R=1)
    with pytest.raises(ValidationError):
        ScanGrid(M_list=(0, 2, 2))


@pytest.fixture(scope="module")
def small_scan():
    grid = ScanGrid(n_list=(4,), M_list=(0, 1, 2, 3, 6, 10, 14), R=60, seed=2)
    return run_scan(grid)


def test_scan_depth_zero(small_scan):
    for phase in ("thermal", "mbl"):
        assert small_scan.value(4, 0, phase, "loss-variance").value == 0.0
        assert small_scan.value(4, 0, phase, "loss-mean").value == 1.0
        assert small_scan.value(4, 0, phase, "entropy-mean").value == pytest.approx(0.0, abs=1e-12)
        assert small_scan.value(4, 0, phase, "F2").value == pytest.approx(1.0)


def test_scan_invariants(small_scan):
    ref = haar_reference(4)
    for row in small_scan.rows:
        if row.statistic == "loss-variance":
            assert row.value >= 0
        if row.statistic == "entropy-mean":
            assert -1e-12 <= row.value <= 2 * np.log(2) + 1e-12
    for row in small_scan.rows:
        if row.statistic == "loss-variance":
            b = small_scan.value(row.n, row.M, row.phase, "bound")
            assert row.value <= b.value + 3 * np.hypot(row.uncertainty, b.uncertainty)
    assert ref["loss-variance"] == pytest.approx(1 / 17)


def test_thermal_entropy_grows_faster(small_scan):
    th = small_scan.value(4, 2, "thermal", "entropy-mean")
    mbl = small_scan.value(4, 2, "mbl", "entropy-mean")
    assert th.value - mbl.value > 3 * np.hypot(th.uncertainty, mbl.uncertainty)


def test_saturated_value_reaches_haar(small_scan):
    v, se = saturated_value(small_scan, 4, "thermal")
    assert v == pytest.approx(1 / 17, rel=0.25)


def test_scan_records_roundtrip(small_scan):
    rec = small_scan.as_records()
    assert len(rec) == len(small_scan.rows)
    assert set(rec[0]) == {"n", "M", "phase", "statistic", "value", "uncertainty"}


def test_scan_deterministic_and_worker_independent():
    grid = ScanGrid(n_list=(3,), M_list=(1, 3), R=6, seed=11)
    a = run_scan(grid, workers=1).rows
    b = run_scan(grid, workers=2).rows
    assert a == b


def test_scan_prefix_consistency():
    # deeper grids extend the same trajectories, so shared depths agree exactly
    short = run_scan(ScanGrid(n_list=(3,), M_list=(1, 2), R=5, seed=1, frame_potential=False))
    long = run_scan(ScanGrid(n_list=(3,), M_list=(1, 2, 5), R=5, seed=1, frame_potential=False))
    for M in (1, 2):
        assert short.value(3, M, "thermal", "loss-mean") == long.value(3, M, "thermal", "loss-mean")


def test_scan_wrappers_select_statistics():
    grid = ScanGrid(n_list=(3,), M_list=(0, 2), R=4, phases=("thermal",))
    assert {r.statistic for r in entanglement_scan(grid).rows} == {"entropy-mean"}
    assert "entropy-mean" not in {r.statistic for r in loss_variance_scan(grid).rows}


def test_non_diagonal_observable():
    grid = ScanGrid(n_list=(3,), M_list=(0, 2), R=4, observable="X1", frame_potential=False)
    res = run_scan(grid)
    assert res.value(3, 0, "thermal", "loss-mean").value == pytest.approx(0.0, abs=1e-12)


def test_regime_report_from_scan():
    grid = ScanGrid(n_list=(4,), M_list=tuple(range(0, 81, 4)), R=40, seed=0, frame_potential=False)
    res = run_scan(grid, statistics=("loss-variance",))
    rep = regime_report(res, 4, SaturationRule(scale="excursion", noise_sigmas=2))
    assert rep.M_sat_thermal <= rep.M_sat_mbl
