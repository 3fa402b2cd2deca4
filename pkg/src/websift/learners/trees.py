"""Binary decision trees grown on pre-binned features.

One compiled grower serves both tree flavours:

* ``GINI`` -- classification trees for the forest. Row statistics are the
  bootstrap count and count-weighted label; splits maximize the decrease in
  count-weighted Gini impurity; leaves hold the positive fraction.
* ``NEWTON`` -- regression trees for boosting. Row statistics are the
  gradient and hessian of the logistic loss; splits maximize the
  second-order gain; leaves hold ``-G / (H + l2)``.

Candidate thresholds are midpoints between consecutive distinct training
values (quantile cuts once a column has more than ``max_bins`` values). Rows
with ``x <= threshold`` go left. Among equal gains the lowest feature index,
then the lowest threshold, wins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

GINI = 0
NEWTON = 1

DEFAULT_MAX_BINS = 256


@dataclass
class BinnedMatrix:
    codes: np.ndarray  # (n, p) int32, bin index per cell
    cuts: np.ndarray  # (p, max_cuts) float64, padded with +inf
    n_cuts: np.ndarray  # (p,) int64


def bin_features(X: np.ndarray, max_bins: int = DEFAULT_MAX_BINS) -> BinnedMatrix:
    n, p = X.shape
    cut_lists = []
    for j in range(p):
        u = np.unique(X[:, j])
        if u.size <= max_bins:
            cuts = (u[:-1] + u[1:]) / 2.0
        else:
            q = np.quantile(X[:, j], np.linspace(0, 1, max_bins + 1)[1:-1], method="lower")
            q = np.unique(q)
            # cut just above a data value so ties stay on the left
            hi = u[np.minimum(np.searchsorted(u, q, side="right"), u.size - 1)]
            cuts = np.unique((q + hi) / 2.0)
            cuts = cuts[cuts < u[-1]]
        cut_lists.append(cuts)
    width = max([c.size for c in cut_lists], default=0)
    cuts = np.full((p, max(width, 1)), np.inf)
    codes = np.zeros((n, p), dtype=np.int32)
    n_cuts = np.zeros(p, dtype=np.int64)
    for j, c in enumerate(cut_lists):
        cuts[j, : c.size] = c
        n_cuts[j] = c.size
        codes[:, j] = np.searchsorted(c, X[:, j], side="left")
    return BinnedMatrix(codes, cuts, n_cuts)


@numba.njit(cache=True)
def _grow(codes, cuts, n_cuts, rows, s1, s2, mode, max_depth, min_leaf, l2, mtry, seed):
    n_rows = rows.shape[0]
    p = codes.shape[1]
    cap = 2 * n_rows + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap)
    weight = np.zeros(cap)
    importance = np.zeros(p)

    np.random.seed(seed)
    perm = np.arange(p)
    max_bins = 1
    for j in range(p):
        if n_cuts[j] + 1 > max_bins:
            max_bins = n_cuts[j] + 1
    h1 = np.zeros(max_bins)
    h2 = np.zeros(max_bins)
    hc = np.zeros(max_bins, np.int64)

    st_node = np.zeros(cap, np.int64)
    st_lo = np.zeros(cap, np.int64)
    st_hi = np.zeros(cap, np.int64)
    st_depth = np.zeros(cap, np.int64)
    top = 0
    st_node[0] = 0
    st_lo[0] = 0
    st_hi[0] = n_rows
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = st_node[top]
        lo = st_lo[top]
        hi = st_hi[top]
        depth = st_depth[top]

        S1 = 0.0
        S2 = 0.0
        for t in range(lo, hi):
            r = rows[t]
            S1 += s1[r]
            S2 += s2[r]
        if mode == 0:
            value[node] = S2 / S1 if S1 > 0 else 0.0
            weight[node] = S1
            pure = S2 <= 1e-12 * S1 or S2 >= S1 * (1.0 - 1e-12)
            stop = pure or S1 < 2.0 * min_leaf
        else:
            value[node] = -S1 / (S2 + l2)
            weight[node] = S2
            stop = S2 < 2.0 * min_leaf
        if max_depth >= 0 and depth >= max_depth:
            stop = True
        if stop or hi - lo < 2:
            continue

        # partial Fisher-Yates: perm[:mtry] is a uniform feature subset
        k = mtry if mtry < p else p
        for a in range(k):
            b = a + np.random.randint(p - a)
            tmp = perm[a]
            perm[a] = perm[b]
            perm[b] = tmp
        chosen = np.sort(perm[:k].copy())

        best_gain = -np.inf
        best_j = -1
        best_b = -1
        if mode == 0:
            parent = S2 * (S1 - S2) / S1
        else:
            parent = S1 * S1 / (S2 + l2)
        for ci in range(k):
            j = chosen[ci]
            nb = n_cuts[j] + 1
            if nb < 2:
                continue
            for b in range(nb):
                h1[b] = 0.0
                h2[b] = 0.0
                hc[b] = 0
            for t in range(lo, hi):
                r = rows[t]
                c = codes[r, j]
                h1[c] += s1[r]
                h2[c] += s2[r]
                hc[c] += 1
            L1 = 0.0
            L2 = 0.0
            Lc = 0
            n_here = hi - lo
            for b in range(nb - 1):
                L1 += h1[b]
                L2 += h2[b]
                Lc += hc[b]
                if hc[b] == 0:
                    continue  # same partition as a lower cut
                if Lc == 0 or Lc == n_here:
                    continue
                R1 = S1 - L1
                R2 = S2 - L2
                if mode == 0:
                    if L1 < min_leaf or R1 < min_leaf:
                        continue
                    gain = parent - L2 * (L1 - L2) / L1 - R2 * (R1 - R2) / R1
                    gain *= 2.0
                else:
                    if L2 < min_leaf or R2 < min_leaf:
                        continue
                    gain = 0.5 * (L1 * L1 / (L2 + l2) + R1 * R1 / (R2 + l2) - parent)
                if gain > best_gain + 1e-12:
                    best_gain = gain
                    best_j = j
                    best_b = b
        if best_j < 0:
            continue
        if mode == 1 and best_gain <= 1e-12:
            continue

        # partition rows[lo:hi] on code <= best_b
        i = lo
        e = hi - 1
        while i <= e:
            if codes[rows[i], best_j] <= best_b:
                i += 1
            else:
                tmp = rows[i]
                rows[i] = rows[e]
                rows[e] = tmp
                e -= 1
        mid = i
        feature[node] = best_j
        threshold[node] = cuts[best_j, best_b]
        importance[best_j] += best_gain
        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        left[node] = lnode
        right[node] = rnode
        st_node[top] = rnode
        st_lo[top] = mid
        st_hi[top] = hi
        st_depth[top] = depth + 1
        top += 1
        st_node[top] = lnode
        st_lo[top] = lo
        st_hi[top] = mid
        st_depth[top] = depth + 1
        top += 1

    return (
        feature[:n_nodes],
        threshold[:n_nodes],
        left[:n_nodes],
        right[:n_nodes],
        value[:n_nodes],
        weight[:n_nodes],
        importance,
    )


@numba.njit(cache=True)
def _predict(X, feature, threshold, left, right, value, roots):
    n = X.shape[0]
    out = np.empty((roots.shape[0], n))
    for t in range(roots.shape[0]):
        for i in range(n):
            node = roots[t]
            while left[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            out[t, i] = value[node]
    return out


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    weight: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.left[node] >= 0:
                depth[self.left[node]] = depth[node] + 1
                depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def splits(self) -> list[tuple[int, int, float]]:
        """``(node, feature, threshold)`` for every internal node, in node order."""
        return [(i, int(self.feature[i]), float(self.threshold[i])) for i in range(self.n_nodes) if self.left[i] >= 0]

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _predict(X, self.feature, self.threshold, self.left, self.right, self.value, np.zeros(1, np.int64))[0]

    def scaled(self, factor: float) -> "Tree":
        return Tree(self.feature, self.threshold, self.left, self.right, self.value * factor, self.weight)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "weight": self.weight.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "Tree":
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["value"], dtype=np.float64),
            np.asarray(d["weight"], dtype=np.float64),
        )


def grow_tree(
    binned: BinnedMatrix,
    s1: np.ndarray,
    s2: np.ndarray,
    mode: int = GINI,
    rows: np.ndarray | None = None,
    max_depth: int = -1,
    min_leaf: float = 1.0,
    l2: float = 0.0,
    mtry: int | None = None,
    seed: int = 0,
) -> tuple[Tree, np.ndarray]:
    """Grow one tree; returns the tree and its per-feature gain totals.

    ``rows`` restricts growth to those row indices (default: rows with
    positive ``s1`` for Gini, all rows for Newton). ``max_depth < 0`` means
    unlimited. ``min_leaf`` bounds the child weight (Gini) or hessian sum
    (Newton).
    """
    n, p = binned.codes.shape
    if rows is None:
        rows = np.flatnonzero(s1 > 0) if mode == GINI else np.arange(n)
    rows = np.ascontiguousarray(rows, dtype=np.int64).copy()
    mtry = p if mtry is None else int(mtry)
    feature, threshold, left, right, value, weight, importance = _grow(
        binned.codes,
        binned.cuts,
        binned.n_cuts,
        rows,
        np.ascontiguousarray(s1, dtype=np.float64),
        np.ascontiguousarray(s2, dtype=np.float64),
        mode,
        max_depth,
        float(min_leaf),
        float(l2),
        mtry,
        seed,
    )
    return Tree(feature, threshold, left, right, value, weight), importance


def fit_tree(X, y, max_depth: int = -1, min_leaf: int = 1, mtry: int | None = None, seed: int = 0, max_bins: int = DEFAULT_MAX_BINS) -> Tree:
    """A single Gini classification tree on unit-weight rows."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    w = np.ones(X.shape[0])
    tree, _ = grow_tree(bin_features(X, max_bins), w, w * np.asarray(y, dtype=float), GINI, None, max_depth, min_leaf, 0.0, mtry, seed)
    return tree


class TreeStack:
    """Several trees flattened into shared arrays for one compiled prediction pass."""

    def __init__(self, trees: list[Tree]):
        sizes = [t.n_nodes for t in trees]
        offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64) if trees else np.zeros(0, np.int64)
        self.roots = offsets

        def shifted(arr, off):
            return np.where(arr >= 0, arr + off, -1)

        if trees:
            self.feature = np.concatenate([t.feature for t in trees])
            self.threshold = np.concatenate([t.threshold for t in trees])
            self.left = np.concatenate([shifted(t.left, o) for t, o in zip(trees, offsets)])
            self.right = np.concatenate([shifted(t.right, o) for t, o in zip(trees, offsets)])
            self.value = np.concatenate([t.value for t in trees])

    def predict_all(self, X) -> np.ndarray:
        """``(n_trees, n_rows)`` matrix of leaf values."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        if self.roots.size == 0:
            return np.zeros((0, X.shape[0]))
        return _predict(X, self.feature, self.threshold, self.left, self.right, self.value, self.roots)
