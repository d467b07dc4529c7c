import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fwavekit.stats import (HIGHER, LOWER, RocCurve, RocThresholdClassifier, mann_whitney_u,
                            median_iqr, optimal_threshold, roc_curve)


def enumerated_p(a, b):
    """Two-sided exact p by listing every assignment of the pooled values."""
    pooled = np.concatenate([a, b])
    m, n = len(a), len(b)
    ranks = pooled.argsort().argsort() + 1.0

    def u_of(idx):
        return ranks[list(idx)].sum() - m * (m + 1) / 2

    dev = abs(2 * u_of(range(m)) - m * n)
    combos = list(itertools.combinations(range(m + n), m))
    hits = sum(abs(2 * u_of(c) - m * n) >= dev for c in combos)
    return hits / len(combos)


def concordance_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    return total / (len(pos) * len(neg))


def test_median_iqr_examples():
    assert median_iqr([1, 2, 3, 4, 5]) == (3.0, 2.0)
    assert median_iqr([7]) == (7.0, 0.0)
    assert median_iqr([1, 1, 1, 1]) == (1.0, 0.0)
    with pytest.raises(ValueError):
        median_iqr([])


def test_mwu_examples():
    u, p = mann_whitney_u([1, 2, 3], [10, 11, 12])
    assert u == 0.0 and p == pytest.approx(0.1, abs=1e-15)
    assert mann_whitney_u([5, 5], [5, 5])[1] == 1.0
    rng = np.random.default_rng(0)
    assert mann_whitney_u(rng.normal(0, 1, 50), rng.normal(1.5, 1, 50))[1] < 0.001
    with pytest.raises(ValueError):
        mann_whitney_u([], [1])


@settings(max_examples=200, deadline=None)
@given(m=st.integers(1, 5), n=st.integers(1, 5), seed=st.integers(0, 2**32 - 1))
def test_mwu_exact_matches_enumeration(m, n, seed):
    x = np.random.default_rng(seed).permutation(m + n).astype(float) * 0.37 - 1.0
    a, b = x[:m], x[m:]
    assert mann_whitney_u(a, b)[1] == enumerated_p(a, b)


@settings(max_examples=50, deadline=None)
@given(a=st.lists(st.integers(0, 6), min_size=9, max_size=30),
       b=st.lists(st.integers(0, 6), min_size=9, max_size=30))
def test_mwu_normal_path_matches_scipy(a, b):
    from scipy.stats import mannwhitneyu
    ref = mannwhitneyu(a, b, alternative="two-sided", method="asymptotic", use_continuity=True)
    u, p = mann_whitney_u(a, b)
    assert u == pytest.approx(ref.statistic)
    assert p == pytest.approx(ref.pvalue, rel=1e-9, abs=1e-12)


def test_mwu_symmetric_in_groups():
    a, b = [1.0, 4.0, 2.5], [3.0, 7.0, 8.0, 0.5]
    ua, pa = mann_whitney_u(a, b)
    ub, pb = mann_whitney_u(b, a)
    assert pa == pb and ua + ub == 12


def test_roc_examples():
    assert roc_curve([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]).auc == 1.0
    assert roc_curve([3, 3, 3, 3], [0, 1, 0, 1]).auc == 0.5
    roc = roc_curve([0.1, 0.4, 0.35, 0.8], ["SR", "SR", "AF", "AF"], HIGHER)
    assert roc.auc == pytest.approx(0.75, abs=1e-15)
    assert roc.points[0] == (math.inf, 0.0, 1.0)


def test_roc_lower_direction_mirrors_higher():
    s, y = [0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]
    assert roc_curve(s, y, LOWER).auc == pytest.approx(1 - roc_curve(s, y, HIGHER).auc)
    assert roc_curve([-v for v in s], y, LOWER).auc == roc_curve(s, y, HIGHER).auc


def test_roc_errors():
    with pytest.raises(ValueError):
        roc_curve([1, 2], [1, 1])
    with pytest.raises(ValueError):
        roc_curve([1, 2], [0, 1], direction="up")


@settings(max_examples=500, deadline=None)
@given(data=st.data())
def test_auc_matches_concordance(data):
    n = data.draw(st.integers(2, 30))
    labels = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)
                       .filter(lambda v: 0 < sum(v) < len(v)))
    scores = data.draw(st.lists(st.integers(-5, 5) | st.floats(-1, 1), min_size=n, max_size=n))
    roc = roc_curve(scores, labels, HIGHER)
    assert abs(roc.auc - concordance_auc(scores, labels)) <= 1e-12
    thr = roc.thresholds
    assert np.all(np.diff(thr) < 0)
    assert np.all(np.diff(roc.sensitivity) >= 0) and np.all(np.diff(roc.specificity) <= 0)


def _roc(points):
    thr, se, sp = (np.array(v, dtype=float) for v in zip(*points))
    return RocCurve(thr, se, sp, auc=0.5)


def test_optimal_threshold_examples():
    assert optimal_threshold(_roc([(1, 0.9, 0.5), (2, 0.7, 0.7), (3, 0.5, 0.9)]))[1:] == (0.7, 0.7)
    perfect = roc_curve([0, 0, 1, 1], [0, 0, 1, 1])
    assert optimal_threshold(perfect)[1:] == (1.0, 1.0)
    assert optimal_threshold(_roc([(3, 0.7, 0.7), (2, 0.7, 0.7)]))[0] == 2.0


@settings(max_examples=100, deadline=None)
@given(data=st.data())
def test_optimal_threshold_invariant_to_monotone_transform(data):
    n = data.draw(st.integers(4, 25))
    labels = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)
                       .filter(lambda v: 0 < sum(v) < len(v)))
    scores = np.array(data.draw(st.lists(st.integers(-20, 20), min_size=n, max_size=n)), float)
    _, se, sp = optimal_threshold(roc_curve(scores, labels))
    _, se2, sp2 = optimal_threshold(roc_curve(np.exp(scores / 7.0) * 3 + 1, labels))
    assert (se, sp) == (se2, sp2)


def test_threshold_classifier():
    X = np.array([[1.0], [2.0], [3.0], [10.0], [11.0], [12.0]])
    y = np.array([1, 1, 1, 0, 0, 0])
    clf = RocThresholdClassifier(direction="auto").fit(X, y)
    assert clf.direction_ == LOWER
    np.testing.assert_array_equal(clf.predict(X), y)
    assert clf.score(X, y) == 1.0
    assert clf.get_params() == {"direction": "auto"}
    with pytest.raises(ValueError):
        RocThresholdClassifier().fit(np.ones((4, 2)), [0, 1, 0, 1])
