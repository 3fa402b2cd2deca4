"""Feature selection by information gain, LASSO coefficients or forest importance."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .learners import ForestModel, ForestParams, LassoModel

logger = logging.getLogger(__name__)

SELECTORS = ("none", "ig", "lasso", "rf")
DEFAULT_BINS = 10
LASSO_THRESHOLD = 1e-4


@dataclass(frozen=True)
class FeatureScore:
    name: str
    score: float
    retained: bool


@dataclass
class Selection:
    method: str
    scores: list[FeatureScore]
    fallback: bool = False
    details: dict = field(default_factory=dict)

    @property
    def mask(self) -> np.ndarray:
        return np.array([s.retained for s in self.scores], dtype=bool)

    @property
    def retained_names(self) -> list[str]:
        return [s.name for s in self.scores if s.retained]

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "fallback": self.fallback,
            "retained_count": int(self.mask.sum()),
            "features": [{"name": s.name, "score": s.score, "retained": s.retained} for s in self.scores],
            **({"details": self.details} if self.details else {}),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


# -- entropy ---------------------------------------------------------------

def entropy(values) -> float:
    """Shannon entropy in bits of a discrete column."""
    values = np.asarray(values)
    if values.size == 0:
        raise ValueError("entropy of an empty column is undefined")
    _, counts = np.unique(values, return_counts=True, axis=0)
    p = counts / counts.sum()
    return float(max(0.0, -np.sum(p * np.log2(p))))


def joint_entropy(a, b) -> float:
    pairs = np.column_stack([np.asarray(a, dtype=float), np.asarray(b, dtype=float)])
    return entropy(pairs)


def discretize(column, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Equal-frequency bin codes; columns with at most ``bins`` distinct values keep them as-is."""
    column = np.asarray(column, dtype=float)
    uniq = np.unique(column)
    if uniq.size <= bins:
        return np.searchsorted(uniq, column)
    edges = np.unique(np.quantile(column, np.linspace(0, 1, bins + 1)[1:-1]))
    return np.searchsorted(edges, column, side="right")


def information_gain_scores(X, y, bins: int = DEFAULT_BINS) -> np.ndarray:
    """``H(y) + H(X_j) - H(y, X_j)`` per column, on binned columns."""
    X = np.asarray(X, dtype=float)
    hy = entropy(y)
    out = np.zeros(X.shape[1])
    for j in range(X.shape[1]):
        codes = discretize(X[:, j], bins)
        out[j] = max(0.0, hy + entropy(codes) - joint_entropy(y, codes))
    return out


# -- retention rules -------------------------------------------------------

def _above_mean(scores: np.ndarray) -> np.ndarray:
    return scores > scores.mean() if scores.size else np.zeros(0, dtype=bool)


def _finish(method, names, scores, retained, details=None) -> Selection:
    fallback = False
    if scores.size and not retained.any():
        # never hand an empty feature set to a classifier
        retained = np.zeros_like(retained)
        retained[int(np.argmax(scores))] = True
        fallback = True
        logger.warning("%s selection retained no feature; keeping the top-scoring one", method)
    feats = [FeatureScore(n, float(s), bool(r)) for n, s, r in zip(names, scores, retained)]
    return Selection(method, feats, fallback, details or {})


def information_gain(X, y, names, bins: int = DEFAULT_BINS) -> Selection:
    scores = information_gain_scores(X, y, bins)
    return _finish("ig", names, scores, _above_mean(scores), {"bins": bins})


def lasso_select(X, y, names, threshold: float = LASSO_THRESHOLD, model: LassoModel | None = None, seed: int = 0, **lasso_kw) -> Selection:
    """Keep features with ``|beta_j| >= threshold`` (standardized scale)."""
    if model is None:
        model = LassoModel(seed=seed, **lasso_kw).fit(X, y)
    scores = np.abs(model.beta)
    return _finish("lasso", names, scores, scores >= threshold, {"lambda": model.lam, "threshold": threshold})


def rf_importance_select(X, y, names, model: ForestModel | None = None, params: ForestParams | None = None, seed: int = 0) -> Selection:
    """Keep features whose normalized mean impurity decrease exceeds the mean (``1/p``)."""
    if model is None:
        model = ForestModel(params or ForestParams(), seed).fit(X, y)
    scores = np.asarray(model.importances, dtype=float)
    return _finish("rf", names, scores, _above_mean(scores))


def no_selection(names) -> Selection:
    return Selection("none", [FeatureScore(n, 1.0, True) for n in names])


def select_features(method: str, X, y, names, seed: int = 0, bins: int = DEFAULT_BINS,
                    lasso_threshold: float = LASSO_THRESHOLD, hp=None) -> Selection:
    if method == "none":
        return no_selection(names)
    if method == "ig":
        return information_gain(X, y, names, bins)
    if method == "lasso":
        kw = {}
        if hp is not None:
            kw = {"lambda_grid": None if hp.lasso_lambda_grid is None else tuple(hp.lasso_lambda_grid),
                  "inner_folds": hp.lasso_inner_folds}
        return lasso_select(X, y, names, lasso_threshold, seed=seed, **kw)
    if method == "rf":
        return rf_importance_select(X, y, names, params=None if hp is None else hp.rf, seed=seed)
    raise ValueError(f"unknown selector {method!r}; expected one of {SELECTORS}")
