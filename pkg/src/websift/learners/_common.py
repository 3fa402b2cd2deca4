"""Pieces shared by the learners: standardization, input checks, links."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError


def check_xy(X, y=None):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"expected a 2-D feature matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DataError("feature matrix contains non-finite values")
    if y is None:
        return X
    y = np.asarray(y)
    if y.shape != (X.shape[0],):
        raise DataError("labels must be a vector with one entry per row")
    if not np.all((y == 0) | (y == 1)):
        raise DataError("labels must be 0/1")
    return X, y.astype(np.int64)


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logit(p: float) -> float:
    return float(np.log(p) - np.log1p(-p))


@dataclass
class Standardizer:
    """Per-column mean and scale from the training rows; constant columns keep scale 1."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X) -> "Standardizer":
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale <= 1e-12] = 1.0
        return cls(mean, scale)

    def transform(self, X):
        return (X - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d) -> "Standardizer":
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["scale"], dtype=float))
