"""Second-order gradient boosting of regression trees under logistic loss."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError, TrainingError
from ._common import check_xy, logit, sigmoid
from .trees import DEFAULT_MAX_BINS, NEWTON, Tree, TreeStack, bin_features, grow_tree


@dataclass
class BoostParams:
    n_learners: int = 200
    depth: int = 6
    learning_rate: float = 0.3
    l2_reg: float = 1.0
    min_child_weight: float = 1.0
    subsample: float = 1.0
    colsample: float = 1.0
    max_bins: int = DEFAULT_MAX_BINS
    max_halvings: int = 30


def logistic_loss(margin, y) -> float:
    """Mean negative log-likelihood of 0/1 labels under ``sigmoid(margin)``."""
    return float(np.mean(np.logaddexp(0.0, margin) - y * margin))


@dataclass
class BoostModel:
    """``score(x) = sigmoid(base_margin + sum_i f_i(x))``.

    Each stage fits a tree to the logistic gradients and hessians, with leaf
    weights ``-G / (H + l2_reg)`` shrunk by the learning rate. Should a stage
    raise the training loss, its step is halved until it no longer does.
    """

    params: BoostParams = field(default_factory=BoostParams)
    seed: int = 0
    base_margin: float = 0.0
    learners: list[Tree] = field(default_factory=list)
    loss_history: list[float] = field(default_factory=list)
    n_features: int = 0
    _stack: TreeStack | None = field(default=None, repr=False)

    kind = "boost"

    def fit(self, X, y) -> "BoostModel":
        X, y = check_xy(X, y)
        prm = self.params
        if prm.n_learners < 0:
            raise ParameterError("n_learners must be >= 0")
        if not 0 < prm.subsample <= 1 or not 0 < prm.colsample <= 1:
            raise ParameterError("subsample and colsample must lie in (0, 1]")
        n, p = X.shape
        self.n_features = p
        prior = np.clip(y.mean(), 1e-6, 1 - 1e-6)
        self.base_margin = logit(prior)
        binned = bin_features(X, prm.max_bins)
        rng = np.random.default_rng(self.seed)
        margin = np.full(n, self.base_margin)
        yf = y.astype(float)
        loss = logistic_loss(margin, yf)
        self.loss_history = [loss]
        self.learners = []
        mtry = max(1, int(round(prm.colsample * p)))
        for stage in range(prm.n_learners):
            prob = sigmoid(margin)
            g = prob - yf
            h = prob * (1.0 - prob)
            if not (np.all(np.isfinite(g)) and np.all(np.isfinite(h))):
                raise TrainingError(f"non-finite gradients at stage {stage}")
            rows = None
            if prm.subsample < 1:
                rows = np.sort(rng.choice(n, max(1, int(round(prm.subsample * n))), replace=False))
            tree, _ = grow_tree(
                binned, g, h, NEWTON, rows=rows, max_depth=prm.depth, min_leaf=prm.min_child_weight,
                l2=prm.l2_reg, mtry=mtry, seed=int(rng.integers(2**31 - 1)),
            )
            step = tree.predict(X)
            eta = prm.learning_rate
            for _ in range(prm.max_halvings):
                new_loss = logistic_loss(margin + eta * step, yf)
                if new_loss <= loss:
                    break
                eta /= 2.0
            else:
                eta = 0.0
                new_loss = loss
            margin = margin + eta * step
            loss = new_loss
            self.learners.append(tree.scaled(eta))
            self.loss_history.append(loss)
        self._stack = None
        return self

    def margin(self, X) -> np.ndarray:
        X = check_xy(X)
        if not self.learners:
            return np.full(X.shape[0], self.base_margin)
        if self._stack is None:
            self._stack = TreeStack(self.learners)
        return self.base_margin + self._stack.predict_all(X).sum(axis=0)

    def predict_proba(self, X) -> np.ndarray:
        return sigmoid(self.margin(X))

    decision_function = predict_proba

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": vars(self.params).copy(),
            "seed": self.seed,
            "n_features": self.n_features,
            "base_margin": self.base_margin,
            "loss_history": list(self.loss_history),
            "learners": [t.to_dict() for t in self.learners],
        }

    @classmethod
    def from_dict(cls, d) -> "BoostModel":
        m = cls(BoostParams(**d["params"]), d["seed"])
        m.n_features = d["n_features"]
        m.base_margin = d["base_margin"]
        m.loss_history = list(d["loss_history"])
        m.learners = [Tree.from_dict(t) for t in d["learners"]]
        return m


def fit_boost(X, y, n_learners: int = 200, depth: int = 6, learning_rate: float = 0.3, l2_reg: float = 1.0, seed: int = 0, **kw) -> BoostModel:
    params = BoostParams(n_learners=n_learners, depth=depth, learning_rate=learning_rate, l2_reg=l2_reg, **kw)
    return BoostModel(params, seed).fit(X, y)
