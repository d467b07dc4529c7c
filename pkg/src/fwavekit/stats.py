"""Group statistics and ROC analysis for single predictors.

Relapse to AF is the positive class throughout: sensitivity is the share
of AF patients flagged, specificity the share of SR patients cleared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import Outcome, check_binary_labels

HIGHER = "higher"
LOWER = "lower"

EXACT_MAX_PRODUCT = 64


def median_iqr(values):
    """Median and Q3 - Q1 with linearly interpolated quantiles."""
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("median_iqr of an empty sequence")
    q1, med, q3 = np.percentile(x, [25, 50, 75])
    return float(med), float(q3 - q1)


def _u_counts(m, n):
    """Number of rank arrangements giving each U in 0..m*n, for tie-free samples."""
    # counts[j] for samples (i, j): distribution of U for i first-group items
    # among i + j; built row by row with f(i, j) = f(i-1, j) shifted by j + f(i, j-1)
    prev = [np.ones(1, dtype=np.int64) for _ in range(n + 1)]
    for i in range(1, m + 1):
        cur = [np.zeros(1, dtype=np.int64)] * (n + 1)
        cur[0] = np.ones(1, dtype=np.int64)
        for j in range(1, n + 1):
            dist = np.zeros(i * j + 1, dtype=np.int64)
            a = prev[j]
            dist[j:j + a.size] += a
            b = cur[j - 1]
            dist[:b.size] += b
            cur[j] = dist
        prev = cur
    return prev[n]


def mann_whitney_u(group_a, group_b):
    """Two-sided Mann-Whitney U test.

    Returns ``(u, p)`` where ``u`` is the statistic of ``group_a``. Without
    ties and with ``len(a) * len(b) <= 64`` the p-value is the exact share
    of rank arrangements at least as far from ``m*n/2`` as the observed one;
    otherwise a tie-corrected normal approximation with continuity
    correction is used.
    """
    a = np.asarray(group_a, dtype=float).ravel()
    b = np.asarray(group_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("both groups must be non-empty")
    m, n = a.size, b.size
    pooled = np.concatenate([a, b])
    ranks = _rankdata(pooled)
    u = float(ranks[:m].sum() - m * (m + 1) / 2.0)
    has_ties = np.unique(pooled).size < pooled.size

    if not has_ties and m * n <= EXACT_MAX_PRODUCT:
        counts = _u_counts(m, n)
        dev = abs(2 * int(round(u)) - m * n)
        us = np.arange(counts.size)
        extreme = int(counts[np.abs(2 * us - m * n) >= dev].sum())
        return u, extreme / math.comb(m + n, m)

    N = m + n
    _, tie_sizes = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(tie_sizes ** 3 - tie_sizes))
    var = m * n / 12.0 * ((N + 1) - tie_term / (N * (N - 1)))
    if var <= 0:
        return u, 1.0
    z = max(abs(u - m * n / 2.0) - 0.5, 0.0) / math.sqrt(var)
    return u, min(1.0, math.erfc(z / math.sqrt(2.0)))


def _rankdata(x):
    """Average ranks (1-based), ties share the mean rank."""
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(x.size, dtype=float)
    sx = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


@dataclass(frozen=True)
class RocCurve:
    """Operating points ordered by increasing false-positive rate.

    With ``direction="higher"`` a score is called AF when ``score >= threshold``
    (thresholds descend along the curve); with ``"lower"`` when
    ``score <= threshold`` (thresholds ascend). The first point is the
    all-negative endpoint at an infinite threshold.
    """

    thresholds: np.ndarray = field(repr=False)
    sensitivity: np.ndarray = field(repr=False)
    specificity: np.ndarray = field(repr=False)
    auc: float
    direction: str = HIGHER
    positive_class: Outcome = Outcome.AF

    @property
    def points(self):
        return list(zip(self.thresholds.tolist(), self.sensitivity.tolist(),
                        self.specificity.tolist()))


def _check_direction(direction):
    if direction not in (HIGHER, LOWER):
        raise ValueError(f"direction must be {HIGHER!r} or {LOWER!r}, got {direction!r}")
    return direction


def roc_curve(scores, labels, direction=HIGHER) -> RocCurve:
    """Empirical ROC with one point per distinct score, AUC by trapezoids."""
    _check_direction(direction)
    s = np.asarray(scores, dtype=float).ravel()
    y = check_binary_labels(labels)
    if s.size != y.size:
        raise ValueError("scores and labels differ in length")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    key = s if direction == HIGHER else -s
    order = np.argsort(-key, kind="mergesort")
    ks, ys = key[order], y[order]
    # last index of each run of equal scores
    ends = np.r_[np.nonzero(np.diff(ks))[0], ks.size - 1]
    tp = np.cumsum(ys)[ends]
    fp = np.cumsum(1 - ys)[ends]
    P, N = tp[-1], fp[-1]
    tpr = np.r_[0.0, tp / P]
    fpr = np.r_[0.0, fp / N]
    thr = np.r_[np.inf, ks[ends]]
    if direction == LOWER:
        thr = -thr
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(thr, tpr, 1.0 - fpr, auc, direction)


def optimal_threshold(roc: RocCurve):
    """Point maximizing min(Se, Sp); ties go to larger Se + Sp, then the lower threshold."""
    se, sp, thr = roc.sensitivity, roc.specificity, roc.thresholds
    best = None
    for i in range(thr.size):
        key = (min(se[i], sp[i]), se[i] + sp[i], -thr[i])
        if best is None or key > best[0]:
            best = (key, i)
    i = best[1]
    return float(thr[i]), float(se[i]), float(sp[i])


class RocThresholdClassifier(ClassifierMixin, BaseEstimator):
    """Single-feature classifier thresholded at the balanced ROC operating point.

    Parameters
    ----------
    direction : {"auto", "higher", "lower"}
        Which side of the threshold is AF. ``"auto"`` picks the side with
        training AUC >= 0.5.
    """

    def __init__(self, direction="auto"):
        self.direction = direction

    def fit(self, X, y):
        X = check_array(X, ensure_2d=False).reshape(-1, 1) if np.ndim(X) == 1 else check_array(X)
        if X.shape[1] != 1:
            raise ValueError("RocThresholdClassifier takes exactly one feature")
        y = check_binary_labels(y)
        direction = self.direction
        if direction == "auto":
            direction = HIGHER if roc_curve(X[:, 0], y, HIGHER).auc >= 0.5 else LOWER
        self.direction_ = _check_direction(direction)
        self.roc_ = roc_curve(X[:, 0], y, self.direction_)
        self.threshold_, self.train_se_, self.train_sp_ = optimal_threshold(self.roc_)
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = 1
        return self

    def _score(self, X):
        check_is_fitted(self, "threshold_")
        X = check_array(X, ensure_2d=False).reshape(-1, 1) if np.ndim(X) == 1 else check_array(X)
        return X[:, 0]

    def decision_function(self, X):
        s = self._score(X)
        return s if self.direction_ == HIGHER else -s

    def predict(self, X):
        s = self._score(X)
        hit = s >= self.threshold_ if self.direction_ == HIGHER else s <= self.threshold_
        return hit.astype(int)
