"""Offline hyperparameter study on a random subset of an encoded dataset."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .evaluation import derive_seed
from .features import Dataset
from .folds import stratified_kfold, train_test_pairs
from .learners import ForestParams, Hyperparameters, make_classifier
from .metrics import roc_auc

logger = logging.getLogger(__name__)


@dataclass
class TuneGrid:
    svm_gamma: list[float] = field(default_factory=lambda: [0.001, 0.005, 0.015, 0.05, 0.1])
    svm_cost: list[float] = field(default_factory=lambda: [1.0, 10.0, 100.0, 1000.0, 3000.0])
    knn_k: list[int] = field(default_factory=lambda: [1, 3, 5, 10, 20])
    rf_mtry: list[int] = field(default_factory=lambda: [5, 10, 25, 50])
    rf_trees: int = 100


@dataclass(frozen=True)
class TunePoint:
    classifier: str
    params: dict
    auc_mean: float
    auc_std: float

    def to_dict(self) -> dict:
        return {"classifier": self.classifier, "params": self.params, "auc_mean": self.auc_mean, "auc_std": self.auc_std}


def random_subset(labels, fraction: float, seed: int) -> np.ndarray:
    """Stratified random subset, at least two rows per class when available."""
    if not 0 < fraction <= 1:
        raise ValueError("subset fraction must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    labels = np.asarray(labels)
    rows = []
    for c in (0, 1):
        idx = np.flatnonzero(labels == c)
        take = min(len(idx), max(2, int(round(fraction * len(idx)))))
        rows.append(rng.choice(idx, size=take, replace=False))
    return np.sort(np.concatenate(rows))


def _cv_auc(data: Dataset, name: str, hp: Hyperparameters, folds: int, seed: int) -> tuple[float, float]:
    aucs = []
    for k, (tr, te) in enumerate(train_test_pairs(stratified_kfold(data.y, folds, seed), len(data.y))):
        model = make_classifier(name, hp, derive_seed(seed, "tune", name, k)).fit(data.X[tr], data.y[tr])
        auc = roc_auc(model.decision_function(data.X[te]), data.y[te])
        if auc is not None:
            aucs.append(auc)
    return float(np.mean(aucs)), float(np.std(aucs, ddof=1)) if len(aucs) > 1 else 0.0


def tune(data: Dataset, grid: TuneGrid | None = None, base: Hyperparameters | None = None,
         subset_fraction: float = 0.2, folds: int = 5, seed: int = 0, classifiers=("svm", "knn", "rf")) -> list[TunePoint]:
    """AUC surface over the SVM (gamma, C) grid, kNN's k and the forest's mtry.

    ``base`` is copied for every grid point and never modified.
    """
    grid = grid or TuneGrid()
    base = base or Hyperparameters()
    sub = data.subset(random_subset(data.y, subset_fraction, derive_seed(seed, "subset")))
    points = []
    if "svm" in classifiers:
        for gamma, cost in itertools.product(grid.svm_gamma, grid.svm_cost):
            hp = replace(base, svm_gamma=float(gamma), svm_cost=float(cost))
            points.append(TunePoint("svm", {"gamma": gamma, "cost": cost}, *_cv_auc(sub, "svm", hp, folds, seed)))
    if "knn" in classifiers:
        for k in grid.knn_k:
            hp = replace(base, knn_k=int(k))
            points.append(TunePoint("knn", {"k": k}, *_cv_auc(sub, "knn", hp, folds, seed)))
    if "rf" in classifiers:
        for mtry in grid.rf_mtry:
            hp = replace(base, rf=ForestParams(**{**vars(base.rf), "mtry": int(mtry), "n_trees": grid.rf_trees}))
            points.append(TunePoint("rf", {"mtry": mtry}, *_cv_auc(sub, "rf", hp, folds, seed)))
    for p in points:
        logger.info("tune %s %s auc=%.4f", p.classifier, p.params, p.auc_mean)
    return points


def best_points(points: list[TunePoint]) -> dict[str, TunePoint]:
    """Highest mean AUC per classifier; ties keep the first grid point."""
    best: dict[str, TunePoint] = {}
    for p in points:
        if p.classifier not in best or p.auc_mean > best[p.classifier].auc_mean:
            best[p.classifier] = p
    return best
