"""Repeated stratified hold-out evaluation and forward feature selection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, clone
from sklearn.feature_selection import SelectorMixin
from sklearn.model_selection import StratifiedKFold
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_binary_labels
from .stats import HIGHER, roc_curve
from .tree import SplitBudgetTreeClassifier


@dataclass
class EvaluationReport:
    """Validation metrics per hold-out repetition (fractions) and their means."""

    name: str
    seed: int
    train_fraction: float
    se: list = field(default_factory=list)
    sp: list = field(default_factory=list)
    acc: list = field(default_factory=list)
    auc: list = field(default_factory=list)
    thresholds: list = field(default_factory=list)
    model: dict | None = None

    @property
    def repetitions(self) -> int:
        return len(self.acc)

    def _mean_percent(self, values):
        return 100.0 * float(np.mean(values)) if values else float("nan")

    @property
    def mean_se(self):
        return self._mean_percent(self.se)

    @property
    def mean_sp(self):
        return self._mean_percent(self.sp)

    @property
    def mean_acc(self):
        return self._mean_percent(self.acc)

    @property
    def mean_auc(self):
        return self._mean_percent(self.auc)

    def to_dict(self):
        return {
            "name": self.name,
            "seed": self.seed,
            "repetitions": self.repetitions,
            "train_fraction": self.train_fraction,
            "mean_percent": {"Se": self.mean_se, "Sp": self.mean_sp,
                             "Acc": self.mean_acc, "AUC": self.mean_auc},
            "per_repetition": [
                {"Se": s, "Sp": p, "Acc": a, "AUC": u, "threshold": t}
                for s, p, a, u, t in zip(self.se, self.sp, self.acc, self.auc,
                                         self.thresholds)
            ],
            "model": self.model,
        }


def stratified_split(y, train_fraction, rng):
    """Per-class random split keeping class proportions (rounded).

    Every class keeps at least one sample on each side.
    """
    train, test = [], []
    for c in (0, 1):
        idx = np.flatnonzero(y == c)
        if idx.size < 2:
            raise ValueError(
                "impossible stratification: each class needs at least 2 patients")
        k = int(np.clip(round(train_fraction * idx.size), 1, idx.size - 1))
        perm = rng.permutation(idx)
        train.append(perm[:k])
        test.append(perm[k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def _scores(model, X):
    if hasattr(model, "decision_function"):
        return model.decision_function(X)
    return model.predict_proba(X)[:, 1]


def holdout_evaluate(X, y, estimator, repetitions=100, train_fraction=2 / 3, seed=0,
                     name="model") -> EvaluationReport:
    """Fit on a stratified ``train_fraction`` split, score on the rest, repeat.

    Repetition ``k`` draws from ``numpy.random.default_rng([seed, k])`` so
    the result does not depend on execution order.
    """
    X = check_array(X)
    y = check_binary_labels(y)
    if X.shape[0] != y.size:
        raise ValueError("X and y differ in length")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    report = EvaluationReport(name=name, seed=int(seed), train_fraction=float(train_fraction))
    for k in range(int(repetitions)):
        rng = np.random.default_rng([int(seed), k])
        tr, te = stratified_split(y, train_fraction, rng)
        model = clone(estimator).fit(X[tr], y[tr])
        pred = model.predict(X[te])
        yt = y[te]
        report.se.append(float(np.mean(pred[yt == 1] == 1)))
        report.sp.append(float(np.mean(pred[yt == 0] == 0)))
        report.acc.append(float(np.mean(pred == yt)))
        report.auc.append(roc_curve(_scores(model, X[te]), yt, HIGHER).auc)
        thr = getattr(model, "threshold_", None)
        report.thresholds.append(None if thr is None else float(thr))
    return report


def _cv_error(X, y, cols, folds, estimator):
    wrong = 0
    for tr, te in folds:
        if not cols:
            # majority of the training fold, SR on ties
            guess = int(2 * y[tr].sum() > tr.size)
            wrong += int(np.sum(y[te] != guess))
            continue
        model = clone(estimator).fit(X[np.ix_(tr, cols)], y[tr])
        wrong += int(np.sum(model.predict(X[np.ix_(te, cols)]) != y[te]))
    return wrong / y.size


def sequential_forward_selection(X, y, candidate_ids=None, seed=0, estimator=None,
                                 n_folds=10):
    """Greedy forward selection minimizing cross-validated misclassification.

    Starts from the empty set (majority-class baseline) and adds, one at a
    time, the candidate that lowers the stratified ``n_folds`` CV error the
    most; stops as soon as no candidate strictly lowers it. Earlier
    candidates win ties. Folds are drawn once from ``seed``.

    Returns the selected entries of ``candidate_ids`` in selection order.
    """
    X = check_array(X)
    y = check_binary_labels(y)
    candidate_ids = list(range(X.shape[1])) if candidate_ids is None else list(candidate_ids)
    if not candidate_ids:
        raise ValueError("need at least one candidate feature")
    if len(candidate_ids) != X.shape[1]:
        raise ValueError("candidate_ids must name every column of X")
    estimator = SplitBudgetTreeClassifier(max_splits=5) if estimator is None else estimator
    k = int(min(n_folds, np.bincount(y, minlength=2).min()))
    if k < 2:
        raise ValueError("each class needs at least 2 samples for cross-validation")
    folds = list(StratifiedKFold(n_splits=k, shuffle=True, random_state=seed).split(X, y))

    selected = []
    current = _cv_error(X, y, selected, folds, estimator)
    while len(selected) < X.shape[1]:
        best = None
        for j in range(X.shape[1]):
            if j in selected:
                continue
            err = _cv_error(X, y, selected + [j], folds, estimator)
            if best is None or err < best[0]:
                best = (err, j)
        if best is None or not best[0] < current:
            break
        current, j = best
        selected.append(j)
    return [candidate_ids[j] for j in selected]


class SequentialForwardSelector(SelectorMixin, BaseEstimator):
    """Estimator form of :func:`sequential_forward_selection`."""

    def __init__(self, estimator=None, n_folds=10, random_state=0):
        self.estimator = estimator
        self.n_folds = n_folds
        self.random_state = random_state

    def fit(self, X, y):
        X = check_array(X)
        self.selected_ = sequential_forward_selection(
            X, y, seed=self.random_state, estimator=self.estimator, n_folds=self.n_folds)
        self.n_features_in_ = X.shape[1]
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "selected_")
        mask = np.zeros(self.n_features_in_, dtype=bool)
        mask[self.selected_] = True
        return mask
