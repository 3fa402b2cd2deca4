"""Random forest whose trees are weighted by their out-of-bag accuracy."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError
from ._common import check_xy
from .trees import DEFAULT_MAX_BINS, GINI, Tree, TreeStack, bin_features, grow_tree

logger = logging.getLogger(__name__)


@dataclass
class ForestParams:
    n_trees: int = 500
    mtry: int = 50
    min_leaf: int = 1
    max_bins: int = DEFAULT_MAX_BINS
    weighted: bool = True


@dataclass
class ForestModel:
    """Bagged Gini trees.

    The score is ``sum(w_i * f_i(x)) / n_trees`` with ``f_i`` the positive
    fraction of the reached leaf and ``w_i`` the tree's OOB accuracy rescaled
    so the weights average 1.
    """

    params: ForestParams = field(default_factory=ForestParams)
    seed: int = 0
    trees: list[Tree] = field(default_factory=list)
    weights: np.ndarray | None = None
    oob_accuracy: np.ndarray | None = None
    oob_rows: list[np.ndarray] = field(default_factory=list)
    importances: np.ndarray | None = None
    oob_score: float | None = None
    degenerate: bool = False
    n_features: int = 0
    _stack: TreeStack | None = field(default=None, repr=False)

    kind = "rf"

    def fit(self, X, y) -> "ForestModel":
        X, y = check_xy(X, y)
        n, p = X.shape
        prm = self.params
        if prm.n_trees < 1:
            raise ParameterError("n_trees must be >= 1")
        if prm.mtry < 1:
            raise ParameterError("mtry must be >= 1")
        mtry = min(prm.mtry, p)
        self.n_features = p
        self.degenerate = bool(y.min() == y.max())
        if self.degenerate:
            logger.warning("random forest trained on a single class; the model is constant")

        binned = bin_features(X, prm.max_bins)
        yf = y.astype(float)
        seeds = np.random.SeedSequence(self.seed).generate_state(prm.n_trees * 2, dtype=np.uint32).reshape(-1, 2)
        self.trees, self.oob_rows = [], []
        acc = np.full(prm.n_trees, np.nan)
        importances = np.zeros(p)
        oob_sum = np.zeros(n)
        oob_cnt = np.zeros(n)
        for t in range(prm.n_trees):
            rng = np.random.default_rng(int(seeds[t, 0]))
            counts = np.bincount(rng.integers(0, n, n), minlength=n).astype(float)
            tree, gains = grow_tree(binned, counts, counts * yf, GINI, mtry=mtry, min_leaf=prm.min_leaf, seed=int(seeds[t, 1]))
            importances += gains
            oob = np.flatnonzero(counts == 0)
            self.trees.append(tree)
            self.oob_rows.append(oob)
            if oob.size:
                pred = tree.predict(X[oob])
                acc[t] = np.mean((pred >= 0.5) == (y[oob] == 1))
                oob_sum[oob] += pred
                oob_cnt[oob] += 1

        self.oob_accuracy = acc
        self.weights = self._weights_from_accuracy(acc) if prm.weighted else np.ones(prm.n_trees)
        total = importances.sum()
        self.importances = importances / total if total > 0 else np.zeros(p)
        seen = oob_cnt > 0
        self.oob_score = float(np.mean((oob_sum[seen] / oob_cnt[seen] >= 0.5) == (y[seen] == 1))) if seen.any() else None
        self._stack = None
        return self

    @staticmethod
    def _weights_from_accuracy(acc: np.ndarray) -> np.ndarray:
        w = acc.copy()
        known = ~np.isnan(w)
        if not known.any() or w[known].mean() <= 0:
            return np.ones_like(w)
        w[~known] = w[known].mean()
        return w / w.mean()

    def _tree_stack(self) -> TreeStack:
        if self._stack is None:
            self._stack = TreeStack(self.trees)
        return self._stack

    def tree_outputs(self, X) -> np.ndarray:
        return self._tree_stack().predict_all(check_xy(X))

    def predict_proba(self, X) -> np.ndarray:
        leaves = self.tree_outputs(X)
        score = (self.weights[:, None] * leaves).sum(axis=0) / len(self.trees)
        return np.clip(score, 0.0, 1.0)

    decision_function = predict_proba

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": vars(self.params).copy(),
            "seed": self.seed,
            "n_features": self.n_features,
            "weights": self.weights.tolist(),
            "oob_accuracy": [None if np.isnan(a) else float(a) for a in self.oob_accuracy],
            "importances": self.importances.tolist(),
            "oob_score": self.oob_score,
            "degenerate": self.degenerate,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d) -> "ForestModel":
        m = cls(ForestParams(**d["params"]), d["seed"])
        m.n_features = d["n_features"]
        m.trees = [Tree.from_dict(t) for t in d["trees"]]
        m.weights = np.asarray(d["weights"], dtype=float)
        m.oob_accuracy = np.array([np.nan if a is None else a for a in d["oob_accuracy"]], dtype=float)
        m.importances = np.asarray(d["importances"], dtype=float)
        m.oob_score = d["oob_score"]
        m.degenerate = d["degenerate"]
        return m


def fit_forest(X, y, n_trees: int = 500, mtry: int = 50, seed: int = 0, **kw) -> ForestModel:
    return ForestModel(ForestParams(n_trees=n_trees, mtry=mtry, **kw), seed).fit(X, y)
