"""Stratified cross-validation over the selector x classifier grid."""

from __future__ import annotations

import logging
import warnings
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import LeakageError, ProtocolError
from .features import Dataset, FeatureConfig, SessionEncoder
from .folds import stratified_kfold, train_test_pairs
from .ingest import Session
from .learners import BASELINES, CLASSIFIERS, ENSEMBLES, Hyperparameters, make_classifier
from .metrics import METRIC_NAMES, MetricRecord, compute_metrics, wilcoxon_signed_rank
from .selection import DEFAULT_BINS, LASSO_THRESHOLD, SELECTORS, select_features

logger = logging.getLogger(__name__)


def derive_seed(seed: int, *parts: object) -> int:
    """Stable per-task seed, identical across serial and parallel runs."""
    tag = zlib.crc32("/".join(map(str, parts)).encode("utf-8"))
    return int(np.random.SeedSequence([int(seed), tag]).generate_state(1)[0])


@dataclass
class ExperimentConfig:
    selectors: tuple[str, ...] = SELECTORS
    classifiers: tuple[str, ...] = CLASSIFIERS
    folds: int = 10
    seed: int = 0
    ig_bins: int = DEFAULT_BINS
    lasso_threshold: float = LASSO_THRESHOLD
    alpha: float = 0.05
    threshold: float = 0.5
    jobs: int = 1
    hyperparameters: Hyperparameters = field(default_factory=Hyperparameters)

    def __post_init__(self):
        self.selectors = tuple(self.selectors)
        self.classifiers = tuple(self.classifiers)
        if not self.selectors or not self.classifiers:
            raise ProtocolError("the selector x classifier grid is empty")
        for s in self.selectors:
            if s not in SELECTORS:
                raise ValueError(f"unknown selector {s!r}")
        for c in self.classifiers:
            if c not in CLASSIFIERS:
                raise ValueError(f"unknown classifier {c!r}")

    def to_dict(self) -> dict:
        return {
            "selectors": list(self.selectors),
            "classifiers": list(self.classifiers),
            "folds": self.folds,
            "seed": self.seed,
            "ig_bins": self.ig_bins,
            "lasso_threshold": self.lasso_threshold,
            "alpha": self.alpha,
            "threshold": self.threshold,
            "hyperparameters": self.hyperparameters.to_dict(),
        }


@dataclass(frozen=True)
class FoldResult:
    fold_index: int
    selector: str
    classifier: str
    retained_count: int
    n_test: int
    metrics: MetricRecord
    selection_fallback: bool = False

    def to_dict(self) -> dict:
        return {
            "fold": self.fold_index,
            "selector": self.selector,
            "classifier": self.classifier,
            "retained_count": self.retained_count,
            "n_test": self.n_test,
            "selection_fallback": self.selection_fallback,
            **self.metrics.as_dict(),
        }


class LeakageAudit:
    """Records which rows fed every fit and checks them against the test fold."""

    def __init__(self):
        self.entries: list[tuple[int, str, frozenset]] = []

    def record(self, fold: int, stage: str, row_ids) -> None:
        self.entries.append((fold, stage, frozenset(row_ids)))

    def extend(self, entries) -> None:
        self.entries.extend(entries)

    def verify(self, test_ids: dict[int, set]) -> None:
        for fold, stage, ids in self.entries:
            leaked = ids & test_ids[fold]
            if leaked:
                raise LeakageError(f"fold {fold}: {stage} was fit on {len(leaked)} test row(s)")

    def stages(self) -> list[str]:
        return sorted({stage for _, stage, _ in self.entries})


@dataclass
class CellSummary:
    selector: str
    classifier: str
    retained_mean: float
    mean: dict[str, float]
    std: dict[str, float]
    n_folds: int
    starred: bool = False


@dataclass
class ExperimentReport:
    config: dict
    seed: int
    fold_sizes: list[int]
    results: list[FoldResult]
    significance: dict = field(default_factory=dict)
    audit_stages: list[str] = field(default_factory=list)

    def cell(self, selector: str, classifier: str) -> list[FoldResult]:
        return sorted(
            (r for r in self.results if r.selector == selector and r.classifier == classifier),
            key=lambda r: r.fold_index,
        )

    def metric_values(self, selector: str, classifier: str, metric: str) -> np.ndarray:
        vals = [getattr(r.metrics, metric) for r in self.cell(selector, classifier)]
        return np.array([np.nan if v is None else v for v in vals], dtype=float)

    def cells(self) -> list[tuple[str, str]]:
        return [(s, c) for s in self.config["selectors"] for c in self.config["classifiers"]]

    def summary(self, selector: str, classifier: str) -> CellSummary:
        """Fold means and sample standard deviations (ddof=1); folds without an AUC are skipped for AUC."""
        rows = self.cell(selector, classifier)
        mean, std = {}, {}
        for m in METRIC_NAMES:
            v = self.metric_values(selector, classifier, m)
            v = v[~np.isnan(v)]
            if v.size < len(rows):
                warnings.warn(f"{selector}/{classifier}: {len(rows) - v.size} fold(s) without {m}", RuntimeWarning)
            mean[m] = float(v.mean()) if v.size else float("nan")
            std[m] = float(v.std(ddof=1)) if v.size > 1 else 0.0
        starred = bool(self.significance.get(selector, {}).get(classifier, {}).get("starred", False))
        return CellSummary(
            selector, classifier, float(np.mean([r.retained_count for r in rows])), mean, std, len(rows), starred
        )

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "config": self.config,
            "fold_sizes": self.fold_sizes,
            "audit_stages": self.audit_stages,
            "significance": self.significance,
            "folds": [r.to_dict() for r in sorted(self.results, key=lambda r: (r.selector, r.classifier, r.fold_index))],
        }


def _fit_fold(fold, train, test, data, config: ExperimentConfig, feature_config):
    """Everything fitted for one outer fold; only ``train`` rows reach a fit."""
    audit: list[tuple[int, str, frozenset]] = []
    if isinstance(data, Dataset):
        d_tr, d_te = data.subset(train), data.subset(test)
    else:
        tr_sessions = [data[i] for i in train]
        encoder = SessionEncoder(feature_config).fit(tr_sessions)
        audit.append((fold, "vocabulary", frozenset(s.session_id for s in tr_sessions)))
        d_tr, d_te = encoder.transform(tr_sessions), encoder.transform([data[i] for i in test])

    results = []
    for selector in config.selectors:
        sel = select_features(
            selector, d_tr.X, d_tr.y, d_tr.columns, seed=derive_seed(config.seed, selector, fold),
            bins=config.ig_bins, lasso_threshold=config.lasso_threshold, hp=config.hyperparameters,
        )
        audit.append((fold, f"select:{selector}", frozenset(d_tr.ids)))
        mask = sel.mask
        X_tr, X_te = d_tr.X[:, mask], d_te.X[:, mask]
        for clf_name in config.classifiers:
            model = make_classifier(clf_name, config.hyperparameters, derive_seed(config.seed, selector, clf_name, fold))
            model.fit(X_tr, d_tr.y)
            audit.append((fold, f"fit:{selector}/{clf_name}", frozenset(d_tr.ids)))
            proba = model.predict_proba(X_te)
            ranking = model.decision_function(X_te)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                metrics = compute_metrics(proba, d_te.y, config.threshold, ranking=ranking)
            if metrics.auc is None:
                logger.warning("fold %d %s/%s: single-class test fold, AUC undefined", fold, selector, clf_name)
            results.append(FoldResult(fold, selector, clf_name, int(mask.sum()), len(test), metrics, sel.fallback))
            logger.info("fold %d %s/%s auc=%s", fold, selector, clf_name, metrics.auc)
    return results, audit


def _row_ids(data, rows) -> set:
    if isinstance(data, Dataset):
        return {data.ids[i] for i in rows}
    return {data[i].session_id for i in rows}


def run_experiment(
    data: Sequence[Session] | Dataset,
    config: ExperimentConfig | None = None,
    feature_config: FeatureConfig | None = None,
    splitter: Callable[[np.ndarray, int, int], list[tuple[np.ndarray, np.ndarray]]] | None = None,
) -> ExperimentReport:
    """Stratified k-fold evaluation of every (selector, classifier) cell.

    ``data`` is either raw sessions, in which case the vocabulary is refit on
    each training split, or an already encoded :class:`Dataset`. ``splitter``
    may replace the default stratified folds; it returns (train, test) index
    pairs. A fit that touched a test row raises :class:`LeakageError`.
    """
    config = config or ExperimentConfig()
    feature_config = feature_config or FeatureConfig()
    labels = data.y if isinstance(data, Dataset) else np.array([s.label for s in data])
    ids = data.ids if isinstance(data, Dataset) else [s.session_id for s in data]
    if len(set(ids)) != len(ids):
        raise ProtocolError("row identifiers must be unique for the leakage audit")
    if splitter is None:
        pairs = list(train_test_pairs(stratified_kfold(labels, config.folds, config.seed), len(labels)))
    else:
        pairs = list(splitter(labels, config.folds, config.seed))

    jobs = [(k, tr, te) for k, (tr, te) in enumerate(pairs)]
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            outputs = list(pool.map(_fit_fold, *zip(*jobs), *[[x] * len(jobs) for x in (data, config, feature_config)]))
    else:
        outputs = [_fit_fold(k, tr, te, data, config, feature_config) for k, tr, te in jobs]

    audit = LeakageAudit()
    results: list[FoldResult] = []
    for res, entries in outputs:
        results.extend(res)
        audit.extend(entries)
    audit.verify({k: _row_ids(data, te) for k, _, te in jobs})

    report = ExperimentReport(
        config=config.to_dict(),
        seed=config.seed,
        fold_sizes=[int(len(te)) for _, _, te in jobs],
        results=results,
        audit_stages=audit.stages(),
    )
    report.significance = significance_flags(report, config.alpha)
    return report


def significance_flags(report: ExperimentReport, alpha: float = 0.05) -> dict:
    """Per selector, Wilcoxon tests of each ensemble's fold AUCs against each baseline's.

    An ensemble is starred when it is significantly better than every
    baseline present in the grid.
    """
    out: dict = {}
    selectors = report.config["selectors"]
    classifiers = report.config["classifiers"]
    baselines = [c for c in classifiers if c in BASELINES]
    for sel in selectors:
        per = {}
        for ens in (c for c in classifiers if c in ENSEMBLES):
            a = report.metric_values(sel, ens, "auc")
            tests = {}
            for base in baselines:
                b = report.metric_values(sel, base, "auc")
                ok = ~(np.isnan(a) | np.isnan(b))
                res = wilcoxon_signed_rank(a[ok], b[ok])
                better = bool(res.pvalue < alpha and a[ok].mean() > b[ok].mean()) if ok.any() else False
                tests[base] = {"pvalue": res.pvalue, "statistic": res.statistic, "better": better}
            per[ens] = {"tests": tests, "starred": bool(tests) and all(t["better"] for t in tests.values())}
        if per:
            out[sel] = per
    return out
