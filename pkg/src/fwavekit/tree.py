"""Binary classification tree grown best-first under a total split budget."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_binary_labels


@dataclass
class Node:
    n_samples: int
    n_positive: int
    feature: int | None = None
    threshold: float | None = None
    left: "Node | None" = None
    right: "Node | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    @property
    def label(self) -> int:
        # ties go to SR (0), the larger class in the reference cohort
        return int(2 * self.n_positive > self.n_samples)

    @property
    def proba(self) -> float:
        return self.n_positive / self.n_samples


@dataclass
class DecisionTree:
    """Fitted tree. Samples with ``x[feature] <= threshold`` go left."""

    root: Node
    feature_ids: list
    split_count: int
    max_splits: int = 5
    direction: str = field(default="le", repr=False)

    def _leaf(self, row):
        node = self.root
        while not node.is_leaf:
            node = node.left if row[node.feature] <= node.threshold else node.right
        return node

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        return np.array([self._leaf(r).label for r in X], dtype=int)

    def predict_proba(self, X):
        X = np.asarray(X, dtype=float)
        return np.array([self._leaf(r).proba for r in X], dtype=float)

    def describe(self):
        """Nested-dict form with feature ids, suitable for JSON."""
        def walk(node):
            if node.is_leaf:
                return {"label": "AF" if node.label else "SR",
                        "n": node.n_samples, "n_af": node.n_positive}
            return {"feature": self.feature_ids[node.feature], "threshold": node.threshold,
                    "rule": "<= goes left", "left": walk(node.left), "right": walk(node.right)}
        return walk(self.root)


def _gini_sum(n, pos):
    """n * Gini impurity, vectorized; zero for empty nodes."""
    n = np.asarray(n, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(n > 0, pos / n, 0.0)
    return 2.0 * n * p * (1.0 - p)


def best_split(X, y):
    """Best Gini split over all features and midpoints.

    Returns ``(gain, feature, threshold)`` with gain the decrease in
    sample-weighted impurity, or ``None`` when every feature is constant.
    Ties go to the earlier feature, then the lower threshold.
    """
    n = y.size
    parent = _gini_sum(n, y.sum())
    best = None
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="mergesort")
        xs, ys = X[order, f], y[order]
        cut = np.nonzero(xs[1:] > xs[:-1])[0]
        if cut.size == 0:
            continue
        n_left = cut + 1
        pos_left = np.cumsum(ys)[cut]
        child = _gini_sum(n_left, pos_left) + _gini_sum(n - n_left, ys.sum() - pos_left)
        gains = parent - child
        k = int(np.argmax(gains))
        gain = float(gains[k])
        if best is None or gain > best[0] + 1e-12:
            lo, hi = xs[cut[k]], xs[cut[k] + 1]
            mid = (lo + hi) / 2.0
            # adjacent doubles: the midpoint may round up to hi
            best = (gain, f, float(mid if mid < hi else lo))
    return best


def train_decision_tree(X, y, feature_ids=None, max_splits=5, min_samples_split=2) -> DecisionTree:
    """Grow a Gini tree with at most ``max_splits`` internal nodes.

    Among the splittable leaves, the one whose best split removes the most
    weighted impurity is split next (earliest-created first on ties).
    Leaves stop splitting when pure, when smaller than
    ``min_samples_split`` or when all features are constant there.
    Zero-gain splits are allowed, so interactions such as XOR can be reached.
    """
    X = check_array(X)
    y = check_binary_labels(y)
    if X.shape[0] != y.size:
        raise ValueError("X and y differ in length")
    if max_splits < 0:
        raise ValueError("max_splits must be >= 0")
    feature_ids = list(range(X.shape[1])) if feature_ids is None else list(feature_ids)
    if len(feature_ids) != X.shape[1]:
        raise ValueError("feature_ids must name every column of X")

    counter = itertools.count()
    heap = []

    def consider(node, idx):
        if node.n_samples < min_samples_split or node.n_positive in (0, node.n_samples):
            return
        split = best_split(X[idx], y[idx])
        if split is not None:
            gain, f, thr = split
            heapq.heappush(heap, (-gain, next(counter), node, idx, f, thr))

    idx = np.arange(y.size)
    root = Node(y.size, int(y.sum()))
    consider(root, idx)
    splits = 0
    while heap and splits < max_splits:
        _, _, node, idx, f, thr = heapq.heappop(heap)
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        node.feature, node.threshold = f, thr
        node.left = Node(li.size, int(y[li].sum()))
        node.right = Node(ri.size, int(y[ri].sum()))
        splits += 1
        consider(node.left, li)
        consider(node.right, ri)
    return DecisionTree(root, feature_ids, splits, max_splits)


class SplitBudgetTreeClassifier(ClassifierMixin, BaseEstimator):
    """Estimator wrapper around :func:`train_decision_tree`."""

    def __init__(self, max_splits=5, min_samples_split=2):
        self.max_splits = max_splits
        self.min_samples_split = min_samples_split

    def fit(self, X, y):
        X = check_array(X)
        self.tree_ = train_decision_tree(X, y, max_splits=self.max_splits,
                                         min_samples_split=self.min_samples_split)
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "tree_")
        return self.tree_.predict(check_array(X))

    def predict_proba(self, X):
        check_is_fitted(self, "tree_")
        p = self.tree_.predict_proba(check_array(X))
        return np.column_stack([1.0 - p, p])
