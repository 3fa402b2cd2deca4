"""L1-penalized logistic regression by proximal Newton with coordinate-descent steps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from ..errors import DataError
from ..folds import stratified_kfold, train_test_pairs
from ..metrics import roc_auc
from ._common import Standardizer, check_xy, logit, sigmoid


@numba.njit(cache=True)
def _gram_cd(H, c, beta, lam, tol, max_sweeps):
    """Minimize 0.5 b'Hb - c'b + lam |b|_1 in place by covariance-update sweeps; returns sweeps used."""
    p = c.shape[0]
    q = H @ beta
    for sweep in range(max_sweeps):
        dmax = 0.0
        for j in range(p):
            a = H[j, j]
            if a <= 0.0:
                continue
            g = c[j] - q[j] + a * beta[j]
            if g > lam:
                new = (g - lam) / a
            elif g < -lam:
                new = (g + lam) / a
            else:
                new = 0.0
            d = new - beta[j]
            if d != 0.0:
                for k in range(p):
                    q[k] += H[k, j] * d
                beta[j] = new
                if abs(d) > dmax:
                    dmax = abs(d)
        if dmax < tol:
            return sweep + 1
    return max_sweeps


def _weighted_lasso(X, z, w, beta, lam, tol, max_sweeps):
    """Minimize (1/2n) sum w (z - b0 - X b)^2 + lam |b|_1; the intercept is profiled out by weighted centering."""
    n = X.shape[0]
    xm = w @ X / w.sum()
    zm = float(w @ z / w.sum())
    Xc = X - xm
    Xw = Xc * w[:, None]
    H = Xw.T @ Xc / n
    c = Xw.T @ (z - zm) / n
    _gram_cd(H, c, beta, lam, tol, max_sweeps)
    return zm - float(xm @ beta)


def penalized_objective(X, y, beta0, beta, lam) -> float:
    eta = beta0 + X @ beta
    return float(np.mean(np.logaddexp(0.0, eta) - y * eta) + lam * np.abs(beta).sum())


def loss_gradient(X, y, beta0, beta) -> tuple[float, np.ndarray]:
    """Gradient of the mean logistic loss w.r.t. (intercept, coefficients)."""
    resid = sigmoid(beta0 + X @ beta) - y
    return float(resid.mean()), X.T @ resid / X.shape[0]


def lambda_max(X, y) -> float:
    """Smallest penalty at which every coefficient is zero (for standardized ``X``)."""
    return float(np.max(np.abs(X.T @ (y - y.mean()))) / X.shape[0]) if X.shape[1] else 0.0


def solve_lasso(X, y, lam, beta0=None, beta=None, tol=1e-6, max_iter=200, inner_tol=1e-9, max_sweeps=2000):
    """Proximal Newton outer loop with backtracking; stops when no parameter moves by ``tol``."""
    n, p = X.shape
    yf = y.astype(float)
    if beta is None:
        beta = np.zeros(p)
        beta0 = logit(np.clip(yf.mean(), 1e-6, 1 - 1e-6))
    beta = beta.astype(float).copy()
    f_old = penalized_objective(X, yf, beta0, beta, lam)
    converged = False
    for it in range(max_iter):
        prob = sigmoid(beta0 + X @ beta)
        w = np.maximum(prob * (1 - prob), 1e-5)
        z = beta0 + X @ beta + (yf - prob) / w
        nb = beta.copy()
        nb0 = _weighted_lasso(X, z, w, nb, lam, inner_tol, max_sweeps)
        d0, d = nb0 - beta0, nb - beta
        t = 1.0
        while True:
            f_new = penalized_objective(X, yf, beta0 + t * d0, beta + t * d, lam)
            if f_new <= f_old + 1e-13 or t < 1e-8:
                break
            t *= 0.5
        step = t * max(abs(d0), np.max(np.abs(d)) if p else 0.0)
        beta0, beta, f_old = beta0 + t * d0, beta + t * d, f_new
        if step < tol:
            converged = True
            break
    return beta0, beta, converged


@dataclass
class LassoModel:
    """``score(x) = sigmoid(intercept + beta . standardize(x))``.

    ``beta`` lives on the standardized scale, so its magnitudes are
    comparable across features.
    """

    lambda_grid: tuple[float, ...] | None = None
    inner_folds: int = 5
    seed: int = 0
    beta: np.ndarray | None = None
    intercept: float = 0.0
    lam: float = 0.0
    scaler: Standardizer | None = None
    cv_auc: list[float] = field(default_factory=list)
    converged: bool = True

    kind = "lasso"

    def fit(self, X, y) -> "LassoModel":
        X, y = check_xy(X, y)
        if np.bincount(y, minlength=2).min() < 2:
            raise DataError("LASSO needs at least 2 samples of each class")
        self.scaler = Standardizer.fit(X)
        Xs = self.scaler.transform(X)
        grid = self.lambda_grid
        if grid is None:
            grid = default_lambda_grid(Xs, y)
        grid = tuple(sorted((float(g) for g in grid), reverse=True))
        self.lambda_grid = grid
        if len(grid) == 1:
            self.lam = grid[0]
            self.cv_auc = []
        else:
            self.cv_auc = self._inner_cv(Xs, y, grid)
            best = max(self.cv_auc)
            # ties go to the larger penalty
            self.lam = grid[self.cv_auc.index(best)]
        self.intercept, self.beta, self.converged = _path_to(Xs, y, grid, self.lam)
        return self

    def _inner_cv(self, Xs, y, grid) -> list[float]:
        k = min(self.inner_folds, int(np.bincount(y).min()))
        if k < 2:
            return [0.0] * len(grid)
        folds = stratified_kfold(y, k, self.seed)
        aucs = np.zeros(len(grid))
        for tr, te in train_test_pairs(folds, len(y)):
            b0, b = None, None
            for i, lam in enumerate(grid):
                b0, b, _ = solve_lasso(Xs[tr], y[tr], lam, b0, b)
                auc = roc_auc(Xs[te] @ b + b0, y[te])
                aucs[i] += 0.5 if auc is None else auc
        return (aucs / len(folds)).tolist()

    def decision_function(self, X) -> np.ndarray:
        return self.intercept + self.scaler.transform(check_xy(X)) @ self.beta

    def predict_proba(self, X) -> np.ndarray:
        return sigmoid(self.decision_function(X))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "lambda_grid": list(self.lambda_grid),
            "inner_folds": self.inner_folds,
            "seed": self.seed,
            "lambda": self.lam,
            "intercept": self.intercept,
            "beta": self.beta.tolist(),
            "standardization": self.scaler.to_dict(),
            "cv_auc": list(self.cv_auc),
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d) -> "LassoModel":
        m = cls(tuple(d["lambda_grid"]), d["inner_folds"], d["seed"])
        m.lam = d["lambda"]
        m.intercept = d["intercept"]
        m.beta = np.asarray(d["beta"], dtype=float)
        m.scaler = Standardizer.from_dict(d["standardization"])
        m.cv_auc = list(d["cv_auc"])
        m.converged = d["converged"]
        return m


def default_lambda_grid(Xs, y, n: int = 20, ratio: float = 1e-3) -> tuple[float, ...]:
    top = lambda_max(Xs, y)
    if top <= 0:
        return (1e-4,)
    return tuple(top * np.logspace(0, np.log10(ratio), n))


def _path_to(Xs, y, grid, lam):
    """Warm-started fits down the grid until ``lam``."""
    b0, b, conv = None, None, True
    for g in grid:
        if g < lam:
            break
        b0, b, conv = solve_lasso(Xs, y, g, b0, b)
    return b0, b, conv


def fit_lasso(X, y, lambda_grid=None, inner_folds: int = 5, seed: int = 0) -> LassoModel:
    return LassoModel(None if lambda_grid is None else tuple(lambda_grid), inner_folds, seed).fit(X, y)
