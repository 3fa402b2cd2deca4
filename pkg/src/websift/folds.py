"""Stratified k-fold splitting."""

from __future__ import annotations

import numpy as np

from .errors import ProtocolError


def stratified_kfold(labels, k: int = 10, seed: int = 0) -> list[np.ndarray]:
    """Split row indices into ``k`` disjoint test folds with per-class counts
    within one of ``n_class / k``.

    Each class is shuffled, the classes are laid end to end, and positions
    are dealt round-robin, so fold sizes also differ by at most one.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise ProtocolError("need at least 2 folds")
    classes, counts = np.unique(labels, return_counts=True)
    if classes.size < 2:
        raise ProtocolError("stratified cross-validation needs both classes present")
    if counts.min() < k:
        raise ProtocolError(f"class {classes[counts.argmin()]!r} has {counts.min()} members, fewer than {k} folds")
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(np.flatnonzero(labels == c)) for c in classes])
    assignment = np.empty(labels.size, dtype=np.int64)
    assignment[order] = np.arange(order.size) % k
    return [np.flatnonzero(assignment == f) for f in range(k)]


def train_test_pairs(folds: list[np.ndarray], n: int):
    for test in folds:
        mask = np.ones(n, dtype=bool)
        mask[test] = False
        yield np.flatnonzero(mask), test
