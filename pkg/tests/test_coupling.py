import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relief_layout.coupling import (PairwiseMatrix, ahp_weights, analyze, composite_index, consistency_ratio,
                                    coupling_degree, efficiency, efficiency_score, grey_relational,
                                    read_series_csv)
from relief_layout.errors import DegenerateRange, DimensionError, InstanceTooSmall, InvalidMatrix
from relief_layout.synth import EXAMPLE_JUDGMENT

from conftest import power_iteration, random_reciprocal

ROUNDED_JUDGMENT = [[1, 3, 1, 0.33], [0.33, 1, 0.50, 0.20], [1, 2, 1, 0.33], [3, 5, 3, 1]]


def test_uniform_weights():
    assert np.allclose(ahp_weights(PairwiseMatrix(np.ones((3, 3)))), [1 / 3] * 3)


def test_two_by_two_weights():
    assert np.allclose(ahp_weights(PairwiseMatrix([[1, 2], [0.5, 1]])), [2 / 3, 1 / 3])


def test_rounded_judgment_weights_near_eigenvector():
    m = PairwiseMatrix(ROUNDED_JUDGMENT)
    assert not m.reciprocal
    _, v = power_iteration(m.entries)
    assert np.max(np.abs(ahp_weights(m) - v)) < 0.02


def test_declared_reciprocal_rejects_rounded_matrix():
    with pytest.raises(InvalidMatrix):
        PairwiseMatrix(ROUNDED_JUDGMENT, declared_reciprocal=True)


def test_exact_reciprocal_accepted():
    assert PairwiseMatrix(EXAMPLE_JUDGMENT, declared_reciprocal=True).reciprocal


@pytest.mark.parametrize("bad", [[[1, 0], [1, 1]], [[1, -2], [0.5, 1]], [[2, 1], [1, 1]], [[1, 2, 3]]])
def test_invalid_matrices(bad):
    with pytest.raises(InvalidMatrix):
        PairwiseMatrix(bad)


def test_one_by_one_too_small():
    with pytest.raises(InstanceTooSmall):
        ahp_weights(PairwiseMatrix([[1.0]]))


def test_consistent_matrix_lambda_equals_n():
    w = np.array([0.1, 0.2, 0.3, 0.4])
    m = PairwiseMatrix(w[:, None] / w[None, :])
    rep = consistency_ratio(m, ahp_weights(m))
    assert rep.lambda_max == pytest.approx(4.0, abs=1e-12)
    assert rep.cr <= 1e-12 and rep.consistent


def test_two_by_two_ri_degenerate():
    m = PairwiseMatrix([[1, 5], [0.2, 1]])
    rep = consistency_ratio(m, ahp_weights(m))
    assert rep.cr == 0.0 and rep.ri_degenerate


def test_weight_count_mismatch():
    with pytest.raises(DimensionError):
        consistency_ratio(PairwiseMatrix(np.ones((3, 3))), [0.5, 0.5])


def test_lambda_max_is_arithmetic_mean_of_ratios():
    m = PairwiseMatrix(ROUNDED_JUDGMENT)
    w = ahp_weights(m)
    expected = np.mean((np.array(ROUNDED_JUDGMENT) @ w) / w)
    rep = consistency_ratio(m, w)
    assert rep.lambda_max == pytest.approx(expected, rel=1e-14)
    assert rep.cr == pytest.approx((expected - 4) / (3 * 0.90), rel=1e-12)
    assert rep.consistent


def test_geometric_weights_approach_eigenvalue_on_random_matrices():
    # loose agreement: both estimates bracket the same principal eigenvalue
    rng = np.random.default_rng(5)
    for _ in range(20):
        n = int(rng.integers(3, 8))
        a = random_reciprocal(rng, n)
        m = PairwiseMatrix(a, declared_reciprocal=True)
        lam_gm = consistency_ratio(m, ahp_weights(m)).lambda_max
        lam_eig, _ = power_iteration(a)
        assert lam_gm >= n - 1e-9
        assert lam_gm == pytest.approx(lam_eig, rel=0.25)


def test_grey_identity_series():
    assert np.all(grey_relational([1, 2, 3], [1, 2, 3]) == 1)


def test_grey_extreme_point():
    lam = grey_relational([0.0, 1.0], [0.0, 0.0], rho=0.5)
    assert lam[0] == 1.0
    assert lam[1] == pytest.approx(1 / 3)


def test_grey_hand_example():
    # deltas (0.3, 0.3): dmin = dmax, every coefficient is 1
    assert np.allclose(grey_relational([0.2, 0.8], [0.5, 0.5]), [1.0, 1.0])
    lam = grey_relational([0.2, 0.4, 0.5], [0.5, 0.5, 0.5])
    d = np.array([0.3, 0.1, 0.0])
    assert np.allclose(lam, (0.0 + 0.5 * 0.3) / (d + 0.5 * 0.3))


def test_grey_bad_rho_and_length():
    with pytest.raises(ValueError):
        grey_relational([1], [1], rho=0)
    with pytest.raises(DimensionError):
        grey_relational([1, 2], [1])


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=10), st.floats(0.01, 1))
@settings(max_examples=200, deadline=None)
def test_grey_coefficients_in_unit_interval(vals, rho):
    ref = np.full(len(vals), max(vals))
    lam = grey_relational(vals, ref, rho)
    assert np.all(lam > 0) and np.all(lam <= 1 + 1e-12)


def test_composite_examples():
    assert composite_index([0, 1, 0], [0.2, 0.7, 0.9]) == 0.7
    assert composite_index([0.25, 0.75], [1, 1]) == pytest.approx(1.0)
    assert composite_index([0.5, 0.5], [0.2, 0.6]) == pytest.approx(0.4)
    with pytest.raises(DimensionError):
        composite_index([1.0], [0.1, 0.2])


def test_efficiency_examples():
    assert efficiency_score(1.0) == 1.0
    assert efficiency_score(0.0, "negative") == 1.0
    assert efficiency_score(0.3) == pytest.approx(0.3)
    with pytest.raises(DegenerateRange):
        efficiency_score(0.5, alpha=1, beta=1)
    assert efficiency(1.4).clamped


def test_coupling_examples():
    assert coupling_degree([1, 1]) == pytest.approx(0.5)
    assert coupling_degree([0.0, 0.7, 0.9]) == 0.0
    assert coupling_degree([1, 1, 1], "unordered") == pytest.approx(1 / math.sqrt(8))
    assert coupling_degree([1, 1, 1]) == pytest.approx(1 / 8)
    assert coupling_degree([1, 1], "unordered") == pytest.approx(1 / math.sqrt(2))
    with pytest.raises(InstanceTooSmall):
        coupling_degree([0.5])


def test_coupling_direct_formula():
    u = np.array([0.6, 0.8, 0.9, 0.7])
    denom = math.prod(u[i] + u[j] for i in range(4) for j in range(i + 1, 4))
    assert coupling_degree(u, "unordered") == pytest.approx(u.prod() / math.sqrt(denom), rel=1e-12)
    assert coupling_degree(u) == pytest.approx(u.prod() / denom, rel=1e-12)


@given(st.lists(st.floats(0.01, 1), min_size=2, max_size=6), st.randoms(use_true_random=False))
@settings(max_examples=200, deadline=None)
def test_coupling_symmetric_and_monotone(u, rnd):
    perm = list(u)
    rnd.shuffle(perm)
    assert coupling_degree(perm) == pytest.approx(coupling_degree(u), rel=1e-12)


@given(st.lists(st.floats(0.01, 1), min_size=2, max_size=3), st.floats(0.0, 0.5))
@settings(max_examples=300, deadline=None)
def test_coupling_monotone_where_derivative_is_positive(u, step):
    # d log C / dU_1 = 1/U_1 - k * sum_j 1/(U_1 + U_j) with k = 1 (ordered) or 1/2 (unordered):
    # positive for m = 2 under both, and for m = 3 unordered
    bumped = list(u)
    bumped[0] = min(1.0, bumped[0] + step)
    conventions = ("ordered", "unordered") if len(u) == 2 else ("unordered",)
    for conv in conventions:
        assert coupling_degree(bumped, conv) >= coupling_degree(u, conv) * (1 - 1e-12)


def test_ordered_coupling_not_monotone_for_three_systems():
    # documented counterexample: the formula itself decreases here
    assert coupling_degree([0.55, 0.25, 1.0]) < coupling_degree([0.5, 0.25, 1.0])


@given(st.lists(st.floats(0.05, 20), min_size=2, max_size=7))
@settings(max_examples=200, deadline=None)
def test_consistent_matrix_recovers_weights(w):
    w = np.array(w)
    m = PairwiseMatrix(w[:, None] / w[None, :])
    got = ahp_weights(m)
    assert np.allclose(got, w / w.sum(), atol=1e-9)
    assert got.sum() == pytest.approx(1.0)
    assert consistency_ratio(m, got).cr <= 1e-6
    perm = np.random.default_rng(len(w)).permutation(len(w))
    permuted = PairwiseMatrix(m.entries[np.ix_(perm, perm)])
    assert np.allclose(ahp_weights(permuted), got[perm])


def test_analyze_example_bundle(example_dir):
    m = PairwiseMatrix.from_csv(example_dir / "judgment.csv")
    names, indicators, series = read_series_csv(example_dir / "series.csv")
    assert indicators == ["intensity", "population", "property", "disaster_level"]
    rep = analyze(m, names, series)
    assert rep.consistent
    assert 0 < rep.coupling_degree <= 1
    pair = analyze(m, names, series, active=["flood", "mudslide"])
    assert 0 < pair.coupling_degree <= 0.5
    assert pair.pair_convention == "ordered"
    with pytest.raises(KeyError):
        analyze(m, names, series, active=["volcano", "flood"])
