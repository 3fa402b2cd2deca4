"""Threshold metrics, rank-based AUC and the exact Wilcoxon signed-rank test."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import norm, rankdata

METRIC_NAMES = ("accuracy", "precision", "recall", "f1", "gmean", "auc")


@dataclass(frozen=True)
class MetricRecord:
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    gmean: float
    auc: float | None
    undefined: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        d = asdict(self)
        d["undefined"] = list(self.undefined)
        return d


def roc_auc(scores, labels) -> float | None:
    """Mann-Whitney AUC with tied scores counted as one half. ``None`` for a single-class input."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores)
    # rank sums are multiples of 1/2, so the numerator is exact
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def compute_metrics(scores, labels, threshold: float = 0.5, ranking=None) -> MetricRecord:
    """Confusion-matrix metrics at ``scores >= threshold``; AUC from ``ranking`` (default ``scores``).

    Precision with no predicted positives, and recall with no actual
    positives, are reported as 0 and listed in ``undefined``.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    if scores.size == 0 or scores.shape != labels.shape:
        raise ValueError("scores and labels must be non-empty and of equal length")
    pred = scores >= threshold
    tp = int(np.sum(pred & labels))
    fp = int(np.sum(pred & ~labels))
    tn = int(np.sum(~pred & ~labels))
    fn = int(np.sum(~pred & labels))
    undefined = []
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if tp + fp == 0:
        undefined.append("precision")
    if tp + fn == 0:
        undefined.append("recall")
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    auc = roc_auc(scores if ranking is None else ranking, labels)
    if auc is None:
        undefined.append("auc")
        warnings.warn("single-class fold: AUC is undefined", RuntimeWarning, stacklevel=2)
    return MetricRecord(
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        accuracy=(tp + tn) / scores.size,
        precision=precision,
        recall=recall,
        f1=f1,
        gmean=gmean(precision, recall),
        auc=auc,
        undefined=tuple(undefined),
    )


def gmean(precision: float, recall: float) -> float:
    return math.sqrt(precision * recall)


# -- Wilcoxon signed-rank ----------------------------------------------------

EXACT_MAX_N = 25


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # sum of ranks of the positive differences
    pvalue: float
    n: int
    exact: bool


def _null_distribution(doubled_ranks: np.ndarray) -> np.ndarray:
    """Counts of every attainable doubled positive-rank sum over all 2**n sign patterns."""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    for r in doubled_ranks:
        r = int(r)
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(a, b) -> WilcoxonResult:
    """Two-sided paired test of ``a - b``; zero differences are dropped.

    Exact for up to 25 non-zero pairs (tied magnitudes take average ranks),
    normal approximation with tie correction beyond that.
    """
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if d.ndim != 1 or len(a) != len(b):
        raise ValueError("paired samples must be 1-D and of equal length")
    d = d[d != 0]
    n = d.size
    if n == 0:
        return WilcoxonResult(0.0, 1.0, 0, True)
    ranks = rankdata(np.abs(d))
    w = float(ranks[d > 0].sum())
    if n <= EXACT_MAX_N:
        doubled = np.rint(2 * ranks).astype(np.int64)
        counts = _null_distribution(doubled)
        k = int(round(2 * w))
        total = 2 ** n
        lower = int(sum(counts[: k + 1]))
        upper = int(sum(counts[k:]))
        p = min(1.0, 2 * min(lower, upper) / total)
        return WilcoxonResult(w, p, n, True)
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts**3 - tie_counts) / 48.0
    z = (w - mean) / math.sqrt(var)
    return WilcoxonResult(w, float(min(1.0, 2 * norm.sf(abs(z)))), n, False)
