"""Accuracy, stratified k-fold splits, ROC/AUC and Spearman correlation."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ValidationError


@dataclass
class EvalReport:
    accuracy: float = float("nan")
    balanced_accuracy: float = float("nan")
    per_group_accuracy: dict = field(default_factory=dict)
    fold_results: list = field(default_factory=list)
    auc: float = float("nan")
    roc_points: list = field(default_factory=list)
    spearman: float = float("nan")

    def to_dict(self):
        def clean(x):
            if isinstance(x, float) and math.isnan(x):
                return None
            return x
        return {
            "accuracy": clean(self.accuracy),
            "balanced_accuracy": clean(self.balanced_accuracy),
            "per_group_accuracy": {k: clean(v) for k, v in self.per_group_accuracy.items()},
            "fold_results": self.fold_results,
            "auc": clean(self.auc),
            "roc_points": [list(p) for p in self.roc_points],
            "spearman": clean(self.spearman),
        }


def accuracy(pred, truth, eval_set):
    """Plain accuracy, balanced accuracy and per-group accuracy.

    ``truth`` is a boolean ``n x m`` membership matrix.  A prediction is right
    when the predicted group is one of the node's true groups.  For the
    balanced variant a multi-group node counts toward every one of its groups;
    groups with no evaluated members are left out of the average.
    """
    eval_set = np.asarray(eval_set)
    if eval_set.dtype == bool:
        eval_set = np.flatnonzero(eval_set)
    if eval_set.size == 0:
        raise DomainError("accuracy over an empty evaluation set")
    truth = np.asarray(truth, dtype=bool)
    pred = np.asarray(pred)
    if not truth[eval_set].any(axis=1).all():
        raise ValidationError("evaluation set contains unlabelled nodes")
    p = pred[eval_set]
    t = truth[eval_set]
    valid = (p >= 0) & (p < t.shape[1])
    hit = np.zeros(p.size, dtype=bool)
    hit[valid] = t[np.flatnonzero(valid), p[valid]]
    acc = float(hit.mean())
    members = t.sum(axis=0)
    correct = (t & hit[:, None]).sum(axis=0)
    per_group = {}
    for i in range(t.shape[1]):
        per_group[i] = float(correct[i] / members[i]) if members[i] else float("nan")
    present = members > 0
    balanced = float(np.mean(correct[present] / members[present]))
    return acc, balanced, per_group


def kfold(labeled, truth, k=10, rng_seed=0):
    """Stratified random partition of ``labeled`` into ``k`` (train, test) splits.

    Strata are primary groups (lowest group index of each node).  Members of
    a stratum are shuffled and dealt round-robin, continuing the dealing
    position across strata so fold sizes differ by at most one.  Strata
    smaller than ``k`` are pooled and dealt unstratified, with a warning.
    """
    labeled = np.asarray(labeled)
    if labeled.dtype == bool:
        labeled = np.flatnonzero(labeled)
    labeled = np.sort(labeled)
    if labeled.size < k:
        raise DomainError(f"{labeled.size} labelled nodes cannot form {k} folds")
    truth = np.asarray(truth, dtype=bool)
    primary = np.argmax(truth[labeled], axis=1)
    rng = np.random.default_rng(rng_seed)
    fold_of = np.empty(labeled.size, dtype=np.int64)
    pos = 0
    pooled = []
    for grp in np.unique(primary).tolist():
        members = np.flatnonzero(primary == grp)
        if members.size < k:
            pooled.append(members)
            continue
        members = rng.permutation(members)
        fold_of[members] = (pos + np.arange(members.size)) % k
        pos = (pos + members.size) % k
    if pooled:
        small = np.concatenate(pooled)
        warnings.warn(f"{small.size} node(s) in groups smaller than k={k} split unstratified",
                      stacklevel=2)
        small = rng.permutation(small)
        fold_of[small] = (pos + np.arange(small.size)) % k
    splits = []
    for f in range(k):
        splits.append((labeled[fold_of != f], labeled[fold_of == f]))
    return splits


def roc_auc(scores, positives):
    """Tie-aware ROC curve and AUC for ranking positives above negatives.

    ``scores`` is per group (NaN = undefined, excluded with a warning);
    ``positives`` is a boolean mask or index collection.  Groups with equal
    scores move together, giving a diagonal ROC segment; AUC is the
    probability that a random positive outscores a random negative with ties
    counted half.
    """
    s = np.asarray(scores, dtype=float)
    pos = np.zeros(s.size, dtype=bool)
    pidx = np.asarray(positives)
    if pidx.dtype == bool:
        pos[:] = pidx
    else:
        pos[pidx.astype(np.int64)] = True
    defined = ~np.isnan(s)
    if not defined.all():
        warnings.warn(f"{int((~defined).sum())} group(s) with undefined score excluded",
                      stacklevel=2)
    s, pos = s[defined], pos[defined]
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise DomainError("ROC needs at least one positive and one negative")

    # rank statistic with average ranks
    ranks = average_ranks(s)
    auc = (ranks[pos].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)

    order = np.argsort(-s, kind="stable")
    s_sorted, p_sorted = s[order], pos[order]
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < s_sorted.size:
        j = i
        while j < s_sorted.size and s_sorted[j] == s_sorted[i]:
            j += 1
        tp += int(p_sorted[i:j].sum())
        fp += int((~p_sorted[i:j]).sum())
        points.append((fp / n_neg, tp / n_pos))
        i = j
    return float(auc), points


def trapezoid_area(points):
    xs = np.array([p[0] for p in points])
    ys = np.array([p[1] for p in points])
    return float(np.sum((xs[1:] - xs[:-1]) * (ys[1:] + ys[:-1]) / 2))


def average_ranks(x):
    """1-based ranks with ties sharing the mean of their positions."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ranks = np.empty(x.size)
    i = 0
    while i < xs.size:
        j = i
        while j + 1 < xs.size and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def spearman(x, y):
    """Pearson correlation of average ranks; NaN if either side is constant.

    Pairs where either value is NaN are dropped first.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValidationError("spearman inputs differ in length")
    keep = ~(np.isnan(x) | np.isnan(y))
    x, y = x[keep], y[keep]
    if x.size < 3:
        raise DomainError("spearman needs at least three paired values")
    rx = average_ranks(x) - (x.size + 1) / 2
    ry = average_ranks(y) - (y.size + 1) / 2
    den = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if den == 0:
        return float("nan")
    return float(rx @ ry) / den


def write_roc_csv(points, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("fpr,tpr\n")
        for fpr, tpr in points:
            fh.write(f"{fpr!r},{tpr!r}\n")
