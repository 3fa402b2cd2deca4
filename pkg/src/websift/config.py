"""Run configuration: file loading, flag overrides and snapshots."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from .errors import ParameterError
from .evaluation import ExperimentConfig
from .features import DEFAULT_URL_BASE, FeatureConfig
from .ingest import LABEL_RULES
from .learners import CLASSIFIERS, Hyperparameters
from .selection import DEFAULT_BINS, LASSO_THRESHOLD, SELECTORS

SEED_ENV = "WEBSIFT_SEED"


@dataclass
class RunConfig:
    inputs: list[str] = field(default_factory=list)
    format: str = "csv"
    columns: dict[str, str] = field(default_factory=dict)
    delimiter: str = ","
    url_base: str = DEFAULT_URL_BASE
    passthrough: list[str] = field(default_factory=list)
    label_rule: str = "any-attack"
    selectors: list[str] = field(default_factory=lambda: list(SELECTORS))
    classifiers: list[str] = field(default_factory=lambda: list(CLASSIFIERS))
    hyperparameters: Hyperparameters = field(default_factory=Hyperparameters)
    folds: int = 10
    seed: int | None = None
    ig_bins: int = DEFAULT_BINS
    lasso_threshold: float = LASSO_THRESHOLD
    alpha: float = 0.05
    threshold: float = 0.5
    out_dir: str = "out"
    jobs: int | None = None  # None: every available core

    def __post_init__(self):
        if isinstance(self.hyperparameters, dict):
            self.hyperparameters = Hyperparameters.from_dict(self.hyperparameters)
        if self.label_rule not in LABEL_RULES:
            raise ParameterError(f"label_rule must be one of {LABEL_RULES}")
        if self.format not in ("csv", "jsonl"):
            raise ParameterError("format must be csv or jsonl")
        if self.folds < 2:
            raise ParameterError("folds must be at least 2")
        if self.jobs is not None and self.jobs < 1:
            raise ParameterError("jobs must be positive")

    def resolved_seed(self) -> int:
        """Explicit seed, else ``$WEBSIFT_SEED``, else 0."""
        if self.seed is not None:
            return int(self.seed)
        env = os.environ.get(SEED_ENV)
        if env is not None and env.strip():
            try:
                return int(env)
            except ValueError as exc:
                raise ParameterError(f"{SEED_ENV} must be an integer, got {env!r}") from exc
        return 0

    def resolved_jobs(self) -> int:
        return int(self.jobs) if self.jobs is not None else os.cpu_count() or 1

    def feature_config(self) -> FeatureConfig:
        return FeatureConfig(url_base=self.url_base, passthrough=tuple(self.passthrough))

    def experiment_config(self) -> ExperimentConfig:
        return ExperimentConfig(
            selectors=tuple(self.selectors),
            classifiers=tuple(self.classifiers),
            folds=self.folds,
            seed=self.resolved_seed(),
            ig_bins=self.ig_bins,
            lasso_threshold=self.lasso_threshold,
            alpha=self.alpha,
            threshold=self.threshold,
            jobs=self.resolved_jobs(),
            hyperparameters=self.hyperparameters,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hyperparameters"] = self.hyperparameters.to_dict()
        return d

    @classmethod
    def from_dict(cls, d) -> "RunConfig":
        d = dict(d or {})
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def with_overrides(self, **overrides) -> "RunConfig":
        """Copy with every non-``None`` override applied."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def snapshot(self) -> dict:
        """Serializable form with the seed pinned, so a reload reproduces the run."""
        d = self.to_dict()
        d["seed"] = self.resolved_seed()
        return d


def load_config(path) -> RunConfig:
    """Read a YAML or JSON run configuration (JSON is valid YAML)."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        raise ParameterError(f"{path}: not valid YAML/JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParameterError(f"{path}: top level must be a mapping")
    return RunConfig.from_dict(data)


def save_config(config: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.snapshot(), fh, indent=2, sort_keys=True)
        fh.write("\n")
