import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from relief_layout.classify import (CONVENIENCE_LEVELS, FuzzyProfile, MaterialProfile, SimilarityResult,
                                    TriangularFuzzySet, cluster_materials, comprehensive_evaluation,
                                    dispersion_weights, group_by_threshold, membership, min_max_normalize,
                                    read_catalog_csv, similarity)
from relief_layout.errors import DimensionError, EmptyInput

TRI = TriangularFuzzySet(0.2, 0.5, 0.8, d_scale=0.9)


def test_normalize_examples():
    out, const = min_max_normalize([[2.0], [4.0], [6.0]])
    assert out.ravel().tolist() == [0, 0.5, 1] and const == []
    out, const = min_max_normalize([[5.0, 1.0], [5.0, 3.0], [5.0, 2.0]])
    assert out[:, 0].tolist() == [0, 0, 0] and const == [0]
    assert out[1, 1] == 1.0
    with pytest.raises(EmptyInput):
        min_max_normalize([])


@given(arrays(float, st.tuples(st.integers(2, 8), st.integers(1, 5)), elements=st.floats(-1e3, 1e3)))
@settings(max_examples=200, deadline=None)
def test_normalize_idempotent(x):
    once, const = min_max_normalize(x)
    twice, const2 = min_max_normalize(once)
    assert const2 == const
    assert np.allclose(once, twice, atol=1e-12)


def test_membership_standard():
    assert membership(0.5, TRI) == (0.9, pytest.approx(0.1 * 0.9))
    mu, nu = membership(0.1, TRI)
    assert mu == 0 and nu == pytest.approx(0.9)
    assert membership(0.35, TRI)[0] == pytest.approx(0.9 * 0.5)
    assert membership(0.65, TRI)[0] == pytest.approx(0.9 * 0.5)
    assert membership(0.9, TRI)[0] == 0


def test_membership_inverted():
    s = TriangularFuzzySet(0.2, 0.5, 0.8)
    assert membership(0.2, s, "inverted")[0] == 1.0
    assert membership(0.5, s, "inverted")[0] == pytest.approx(0.0)
    assert membership(0.35, s, "inverted")[0] == pytest.approx(0.5)


def test_membership_half_triangles():
    left = TriangularFuzzySet(0.0, 0.0, 0.2)
    assert membership(0.0, left)[0] == 1.0
    assert membership(0.1, left)[0] == pytest.approx(0.5)
    right = TriangularFuzzySet(0.3, 0.6, 0.6)
    assert membership(0.45, right)[0] == pytest.approx(0.5)
    for x in np.linspace(-0.5, 1.5, 41):
        for s in (left, right):
            for variant in ("standard", "inverted"):
                mu, nu = membership(float(x), s, variant)
                assert 0 <= mu <= 1 and mu + nu <= 1 + 1e-12


def test_trapezoid_level_is_degenerate_triangle():
    inconvenient = CONVENIENCE_LEVELS[-1]
    assert (inconvenient.a, inconvenient.b, inconvenient.c) == (0.76, 0.96, 1.16)
    with pytest.raises(ValueError):
        TriangularFuzzySet.from_points((0, 1, 2, 3))


def test_dispersion_examples():
    w, flag = dispersion_weights([[0, 0], [1, 1], [2, 2]])
    assert np.allclose(w, [0.5, 0.5]) and not flag
    w, _ = dispersion_weights([[3, 0], [3, 1], [3, 2]])
    assert np.allclose(w, [0, 1])
    w, _ = dispersion_weights([[0, 0], [1, 2], [2, 4]])
    x = np.array([[0, 0], [1, 2], [2, 4]], dtype=float)
    s = np.sqrt(((x - x.mean(axis=0)) ** 2).mean(axis=0))
    assert np.allclose(w, s / s.sum()) and np.allclose(w, [1 / 3, 2 / 3])
    w, flag = dispersion_weights([[1, 1], [1, 1]])
    assert flag and np.allclose(w, [0.5, 0.5])
    with pytest.raises(EmptyInput):
        dispersion_weights([[1, 2]])


def test_dispersion_scale_covariance():
    rng = np.random.default_rng(0)
    x = rng.random((10, 3))
    scaled = x.copy()
    scaled[:, 1] *= 4.0
    s = x.std(axis=0)
    s2 = s.copy()
    s2[1] *= 4.0
    assert np.allclose(dispersion_weights(scaled)[0], s2 / s2.sum())


def test_similarity_examples():
    a = FuzzyProfile([1, 0], [0, 1])
    b = FuzzyProfile([0.5, 0], [0.5, 1])
    # mu channel 0.25 / 0.5, nu channel 0.5 / 0.75
    assert similarity(a, b, [0.5, 0.5]).value == pytest.approx(0.5 * (0.5 + 2 / 3))
    assert similarity(a, a, [0.5, 0.5]).value == 1.0
    z = FuzzyProfile([0, 0], [0, 0])
    assert similarity(z, z, [0.5, 0.5]).value == 1.0
    with pytest.raises(DimensionError):
        similarity(a, FuzzyProfile([1], [0]), [1.0])


def test_profile_rejects_non_intuitionistic():
    with pytest.raises(ValueError):
        FuzzyProfile([0.7], [0.5])


@st.composite
def profiles(draw, k):
    mu = np.array(draw(st.lists(st.floats(0, 1), min_size=k, max_size=k)))
    slack = np.array(draw(st.lists(st.floats(0, 1), min_size=k, max_size=k)))
    return FuzzyProfile(mu, (1 - mu) * slack)


@st.composite
def profile_pairs(draw):
    k = draw(st.integers(1, 6))
    w = np.array(draw(st.lists(st.floats(0.01, 1), min_size=k, max_size=k)))
    return draw(profiles(k)), draw(profiles(k)), w / w.sum()


@given(profile_pairs())
@settings(max_examples=1000, deadline=None)
def test_similarity_reflexive_symmetric_bounded(triple):
    a, b, w = triple
    assert similarity(a, a, w).value == pytest.approx(1.0)
    ab, ba = similarity(a, b, w).value, similarity(b, a, w).value
    assert ab == ba
    assert 0.0 <= ab <= 1.0


def test_comprehensive_examples():
    assert comprehensive_evaluation([0.3, 0.8, 0.5], [0, 1, 0]) == 0.8
    assert comprehensive_evaluation([SimilarityResult(1.0), SimilarityResult(1.0)], [0.4, 0.6]) == pytest.approx(1)
    assert comprehensive_evaluation([0.6, 0.8], [0.25, 0.75]) == pytest.approx(0.75)
    with pytest.raises(DimensionError):
        comprehensive_evaluation([0.5], [0.5, 0.5])


def test_grouping_examples():
    sim = np.array([[1, 0.9, 0.2], [0.9, 1, 0.2], [0.2, 0.2, 1]])
    assert group_by_threshold(sim, 0.8) == [[0, 1], [2]]
    assert group_by_threshold(sim, 0.0) == [[0, 1, 2]]
    assert group_by_threshold(sim, 1.01) == [[0], [1], [2]]
    # single-link chaining
    chain = np.array([[1, 0.9, 0.1], [0.9, 1, 0.9], [0.1, 0.9, 1]])
    assert group_by_threshold(chain, 0.8) == [[0, 1, 2]]


def _catalog(n, seed):
    rng = np.random.default_rng(seed)
    return [MaterialProfile(f"m{i}", "special" if i % 3 == 0 else "general", tuple(rng.random(4)))
            for i in range(n)]


def test_cluster_partition_and_monotone():
    cat = _catalog(12, 4)
    prev = None
    for t in np.linspace(0, 1.05, 15):
        res = cluster_materials(cat, threshold=float(t))
        members = sorted(m for g in res.groups for m in g)
        assert members == sorted(m.material_id for m in cat)
        if prev is not None:
            # higher thresholds only split groups
            for g in res.groups:
                assert any(set(g) <= set(p) for p in prev)
        prev = res.groups
    assert len(cluster_materials(cat, 0).groups) == 1
    assert len(cluster_materials(cat, 1.01).groups) == 12
    with pytest.raises(EmptyInput):
        cluster_materials([])


def test_cluster_similarity_matrix_properties():
    res = cluster_materials(_catalog(8, 9), 0.8)
    s = res.similarity
    assert np.allclose(s, s.T) and np.allclose(np.diag(s), 1)
    assert np.all((s >= 0) & (s <= 1))
    assert res.factor_weights.sum() == pytest.approx(1)


def test_group_kind_follows_hints():
    cat = [MaterialProfile("a", "special", (0.0, 1.0)), MaterialProfile("b", "general", (1.0, 0.0))]
    res = cluster_materials(cat, threshold=1.01)
    assert res.kind_of() == {"a": "special", "b": "general"}


def test_example_catalog(example_dir):
    cat = read_catalog_csv(example_dir / "catalog.csv")
    assert len(cat) == 22
    res = cluster_materials(cat)
    kinds = res.kind_of()
    assert set(kinds.values()) <= {"special", "general"}
    assert {"members", "kind"} <= set(res.to_dict()["groups"][0])
