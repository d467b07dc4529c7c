import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fwavekit.tree import SplitBudgetTreeClassifier, best_split, train_decision_tree


def count_internal(node):
    if node.is_leaf:
        return 0
    assert node.left is not None and node.right is not None
    assert np.isfinite(node.threshold)
    return 1 + count_internal(node.left) + count_internal(node.right)


def test_single_separating_feature():
    X = np.array([[1.0], [2.0], [3.0], [4.0]])
    y = np.array([0, 0, 1, 1])
    tree = train_decision_tree(X, y)
    assert tree.split_count == 1
    assert tree.root.threshold == 2.5
    np.testing.assert_array_equal(tree.predict(X), y)


def test_xor_is_learned():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    y = np.array([0, 0, 1, 1])
    tree = train_decision_tree(X, y)
    assert tree.split_count <= 3
    np.testing.assert_array_equal(tree.predict(X), y)


def test_single_class_rejected():
    with pytest.raises(ValueError):
        train_decision_tree(np.ones((3, 1)), [1, 1, 1])


def test_leaf_tie_goes_to_sr():
    tree = train_decision_tree(np.ones((4, 1)), [0, 1, 0, 1])
    assert tree.split_count == 0
    assert tree.predict([[1.0]])[0] == 0


def test_best_split_prefers_earlier_feature():
    X = np.array([[0.0, 0.0], [1.0, 1.0]])
    assert best_split(X, np.array([0, 1]))[1] == 0


def test_adjacent_double_threshold_keeps_both_children():
    lo = 1.0
    hi = np.nextafter(lo, 2.0)
    tree = train_decision_tree(np.array([[lo], [hi]]), [0, 1])
    np.testing.assert_array_equal(tree.predict([[lo], [hi]]), [0, 1])
    assert tree.root.left.n_samples == 1 and tree.root.right.n_samples == 1


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(4, 60), budget=st.integers(0, 7))
def test_budget_and_structure(seed, n, budget):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 6, size=(n, 3)).astype(float)
    y = rng.integers(0, 2, size=n)
    y[:2] = [0, 1]
    tree = train_decision_tree(X, y, max_splits=budget)
    assert tree.split_count <= budget
    assert count_internal(tree.root) == tree.split_count


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(4, 40))
def test_monotone_transform_keeps_training_decisions(seed, n):
    # midpoints move under the transform but every training point stays
    # on the same side of every split
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    y = rng.integers(0, 2, size=n)
    y[:2] = [0, 1]
    g = np.column_stack([np.exp(X[:, 0]), X[:, 1] ** 3 + 2 * X[:, 1]])
    a = train_decision_tree(X, y).predict(X)
    b = train_decision_tree(g, y).predict(g)
    np.testing.assert_array_equal(a, b)


def test_describe_uses_feature_ids():
    X = np.array([[1.0, 0], [2.0, 0], [3.0, 0], [4.0, 0]])
    d = train_decision_tree(X, [0, 0, 1, 1], feature_ids=["df_hz", "c0_a2"]).describe()
    assert d["feature"] == "df_hz"
    assert d["left"]["label"] == "SR" and d["right"]["label"] == "AF"


def test_estimator_wrapper():
    X = np.array([[1.0], [2.0], [3.0], [4.0]])
    clf = SplitBudgetTreeClassifier(max_splits=2).fit(X, [0, 0, 1, 1])
    assert clf.score(X, [0, 0, 1, 1]) == 1.0
    np.testing.assert_allclose(clf.predict_proba(X)[:, 1], [0, 0, 1, 1])
    assert clf.get_params() == {"max_splits": 2, "min_samples_split": 2}
