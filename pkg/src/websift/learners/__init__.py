"""The five classifiers behind one fit / predict_proba / decision_function surface."""

from __future__ import annotations

from dataclasses import dataclass, field, fields

from .boost import BoostModel, BoostParams, fit_boost
from .forest import ForestModel, ForestParams, fit_forest
from .knn import KnnModel, fit_knn
from .lasso import LassoModel, fit_lasso
from .svm import SvmModel, fit_svm
from .trees import Tree, fit_tree

BASELINES = ("lasso", "knn", "svm")
ENSEMBLES = ("rf", "boost")
CLASSIFIERS = BASELINES + ENSEMBLES

DISPLAY_NAMES = {"lasso": "LASSO", "knn": "kNN", "svm": "SVM", "rf": "RF", "boost": "XGBoost"}


@dataclass
class Hyperparameters:
    """Per-classifier settings used by the experiment grid."""

    lasso_lambda_grid: list[float] | None = None
    lasso_inner_folds: int = 5
    knn_k: int = 10
    svm_cost: float = 3000.0
    svm_gamma: float = 0.015
    svm_tol: float = 1e-3
    svm_max_iter: int = 1_000_000
    rf: ForestParams = field(default_factory=ForestParams)
    boost: BoostParams = field(default_factory=BoostParams)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name not in ("rf", "boost")}
        d["rf"] = vars(self.rf).copy()
        d["boost"] = vars(self.boost).copy()
        return d

    @classmethod
    def from_dict(cls, d) -> "Hyperparameters":
        d = dict(d or {})
        rf = ForestParams(**d.pop("rf", {}))
        boost = BoostParams(**d.pop("boost", {}))
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown hyperparameters: {sorted(unknown)}")
        return cls(rf=rf, boost=boost, **d)


def make_classifier(name: str, hp: Hyperparameters | None = None, seed: int = 0):
    hp = hp or Hyperparameters()
    if name == "lasso":
        grid = None if hp.lasso_lambda_grid is None else tuple(hp.lasso_lambda_grid)
        return LassoModel(grid, hp.lasso_inner_folds, seed)
    if name == "knn":
        return KnnModel(hp.knn_k)
    if name == "svm":
        return SvmModel(hp.svm_cost, hp.svm_gamma, hp.svm_tol, hp.svm_max_iter)
    if name == "rf":
        return ForestModel(ForestParams(**vars(hp.rf)), seed)
    if name == "boost":
        return BoostModel(BoostParams(**vars(hp.boost)), seed)
    raise ValueError(f"unknown classifier {name!r}; expected one of {CLASSIFIERS}")


_KINDS = {m.kind: m for m in (LassoModel, KnnModel, SvmModel, ForestModel, BoostModel)}


def model_from_dict(d: dict):
    try:
        cls = _KINDS[d["kind"]]
    except KeyError as exc:
        raise ValueError(f"unknown model kind {d.get('kind')!r}") from exc
    return cls.from_dict(d)


__all__ = [
    "BASELINES", "CLASSIFIERS", "DISPLAY_NAMES", "ENSEMBLES", "BoostModel", "BoostParams", "ForestModel",
    "ForestParams", "Hyperparameters", "KnnModel", "LassoModel", "SvmModel", "Tree", "fit_boost", "fit_forest",
    "fit_knn", "fit_lasso", "fit_svm", "fit_tree", "make_classifier", "model_from_dict",
]
