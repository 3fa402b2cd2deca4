"""k-nearest-neighbour scoring on standardized features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError
from ._common import Standardizer, check_xy

_CHUNK = 64


@dataclass
class KnnModel:
    """Score = fraction of positives among the ``k`` Euclidean-nearest training rows.

    Equal distances are resolved in favour of the lower training row index.
    """

    k: int = 10
    metric: str = "euclidean"
    scaler: Standardizer | None = None
    reference: np.ndarray | None = None
    labels: np.ndarray | None = None

    kind = "knn"

    def fit(self, X, y) -> "KnnModel":
        X, y = check_xy(X, y)
        if self.k <= 0:
            raise ParameterError("k must be positive")
        if self.k > X.shape[0]:
            raise ParameterError(f"k={self.k} exceeds the {X.shape[0]} training rows")
        if self.metric != "euclidean":
            raise ParameterError(f"unsupported metric {self.metric!r}")
        self.scaler = Standardizer.fit(X)
        self.reference = self.scaler.transform(X)
        self.labels = y
        return self

    def neighbors(self, X) -> np.ndarray:
        """Indices of the ``k`` nearest training rows for each query, nearest first."""
        Q = self.scaler.transform(check_xy(X))
        out = np.empty((Q.shape[0], self.k), dtype=np.int64)
        for start in range(0, Q.shape[0], _CHUNK):
            q = Q[start : start + _CHUNK]
            d2 = ((q[:, None, :] - self.reference[None, :, :]) ** 2).sum(axis=2)
            out[start : start + _CHUNK] = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        return out

    def predict_proba(self, X) -> np.ndarray:
        return self.labels[self.neighbors(X)].mean(axis=1)

    decision_function = predict_proba

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "k": self.k,
            "metric": self.metric,
            "standardization": self.scaler.to_dict(),
            "reference": self.reference.tolist(),
            "labels": self.labels.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "KnnModel":
        m = cls(d["k"], d["metric"])
        m.scaler = Standardizer.from_dict(d["standardization"])
        m.reference = np.asarray(d["reference"], dtype=float)
        m.labels = np.asarray(d["labels"], dtype=np.int64)
        return m


def fit_knn(X, y, k: int = 10) -> KnnModel:
    return KnnModel(k).fit(X, y)
