import numpy as np
import pytest
from sklearn.base import clone

from fwavekit.evaluation import (SequentialForwardSelector, holdout_evaluate,
                                 sequential_forward_selection, stratified_split)
from fwavekit.stats import RocThresholdClassifier
from fwavekit.tree import SplitBudgetTreeClassifier


def balanced(n=40, seed=0):
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], n // 2)
    return rng, y


def test_perfect_feature():
    _, y = balanced()
    rep = holdout_evaluate(y[:, None].astype(float), y, RocThresholdClassifier("higher"),
                           repetitions=20)
    assert rep.mean_acc == 100.0 and rep.mean_auc == 100.0


def test_uninformative_feature_near_chance():
    rng, y = balanced(80, seed=3)
    X = rng.normal(size=(80, 1))
    rep = holdout_evaluate(X, y, RocThresholdClassifier("higher"), repetitions=100, seed=1)
    assert 40.0 <= rep.mean_acc <= 60.0


def test_report_is_reproducible():
    rng, y = balanced(30)
    X = rng.normal(size=(30, 2)) + y[:, None]
    a = holdout_evaluate(X, y, SplitBudgetTreeClassifier(), repetitions=100, seed=9)
    b = holdout_evaluate(X, y, SplitBudgetTreeClassifier(), repetitions=100, seed=9)
    assert a.to_dict() == b.to_dict()
    assert a.repetitions == 100 == len(a.to_dict()["per_repetition"])
    for v in (a.mean_se, a.mean_sp, a.mean_acc, a.mean_auc):
        assert 0.0 <= v <= 100.0


def test_repetitions_independent_of_count():
    rng, y = balanced(30)
    X = rng.normal(size=(30, 1)) + y[:, None]
    short = holdout_evaluate(X, y, RocThresholdClassifier("higher"), repetitions=5, seed=2)
    long = holdout_evaluate(X, y, RocThresholdClassifier("higher"), repetitions=10, seed=2)
    assert long.acc[:5] == short.acc


def test_stratified_split_proportions():
    y = np.array([0] * 55 + [1] * 19)
    tr, te = stratified_split(y, 2 / 3, np.random.default_rng(0))
    assert np.bincount(y[tr]).tolist() == [37, 13]
    assert np.bincount(y[te]).tolist() == [18, 6]
    assert set(tr).isdisjoint(te) and len(tr) + len(te) == 74


def test_impossible_stratification():
    with pytest.raises(ValueError, match="stratification"):
        holdout_evaluate(np.zeros((3, 1)), [0, 0, 1], RocThresholdClassifier(), repetitions=1)


def test_holdout_argument_errors():
    X, y = np.zeros((6, 1)), [0, 0, 0, 1, 1, 1]
    with pytest.raises(ValueError):
        holdout_evaluate(X, [1] * 6, RocThresholdClassifier())
    with pytest.raises(ValueError):
        holdout_evaluate(X, y, RocThresholdClassifier(), repetitions=0)
    with pytest.raises(ValueError):
        holdout_evaluate(X, y, RocThresholdClassifier(), train_fraction=1.0)


def test_sfs_keeps_informative_feature():
    rng, y = balanced(60, seed=4)
    X = np.column_stack([rng.normal(size=60), y * 4.0 + rng.normal(size=60)])
    assert sequential_forward_selection(X, y, ["noise", "signal"], seed=0) == ["signal"]


def test_sfs_finds_complementary_pair():
    rng = np.random.default_rng(5)
    X = rng.uniform(size=(120, 3))
    y = (X[:, 0] + X[:, 1] > 1.0).astype(int)
    X[:, 2] = rng.uniform(size=120)
    selected = sequential_forward_selection(X, y, ["a", "b", "noise"], seed=0)
    assert sorted(selected) == ["a", "b"]


def test_sfs_stops_without_gain():
    _, y = balanced(20)
    assert sequential_forward_selection(np.ones((20, 2)), y, seed=0) == []


def test_sfs_deterministic_and_selector():
    rng, y = balanced(40, seed=6)
    X = np.column_stack([rng.normal(size=40) + y, rng.normal(size=40) + 0.5 * y,
                         rng.normal(size=40)])
    a = sequential_forward_selection(X, y, seed=3)
    assert a == sequential_forward_selection(X, y, seed=3)
    sel = SequentialForwardSelector(random_state=3).fit(X, y)
    assert sel.selected_ == a
    assert sel.transform(X).shape == (40, len(a))
    assert clone(sel).get_params()["random_state"] == 3


def test_sfs_argument_errors():
    _, y = balanced(20)
    with pytest.raises(ValueError):
        sequential_forward_selection(np.ones((20, 2)), y, ["only-one"])
    with pytest.raises(ValueError):
        sequential_forward_selection(np.ones((20, 1)), [0] * 20)
