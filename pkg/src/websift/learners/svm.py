"""Soft-margin RBF support vector machine trained by SMO."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numba
import numpy as np
from scipy.optimize import minimize_scalar

from ..errors import ParameterError
from ._common import Standardizer, check_xy, sigmoid

logger = logging.getLogger(__name__)

# full kernel matrix up to this many rows, kernel rows on demand beyond it
PRECOMPUTE_LIMIT = 6000


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    d2 = (A**2).sum(1)[:, None] + (B**2).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(d2, 0.0))


@numba.njit(cache=True)
def _kernel_row(X, i, gamma, out):
    n, p = X.shape
    for t in range(n):
        s = 0.0
        for c in range(p):
            d = X[i, c] - X[t, c]
            s += d * d
        out[t] = np.exp(-gamma * s)


@numba.njit(cache=True)
def _smo(K, X, gamma, precomputed, y, C, eps, max_iter):
    """Dual solver with second-order working-set selection.

    Minimizes 0.5 a'Qa - sum(a), 0 <= a <= C, y'a = 0, Q_ij = y_i y_j K_ij.
    Returns (alpha, rho, iterations, final violation gap).
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    tau = 1e-12
    Ki = np.empty(n)
    Kj = np.empty(n)
    diag = np.ones(n)  # RBF kernel has unit diagonal
    gap = np.inf
    it = 0
    while it < max_iter:
        # i: maximal violating index in the "up" set
        Gmax = -np.inf
        i = -1
        for t in range(n):
            if (y[t] == 1 and alpha[t] < C) or (y[t] == -1 and alpha[t] > 0):
                v = -y[t] * G[t]
                if v >= Gmax:
                    Gmax = v
                    i = t
        if i < 0:
            gap = 0.0
            break
        if precomputed:
            for t in range(n):
                Ki[t] = K[i, t]
        else:
            _kernel_row(X, i, gamma, Ki)
        Gmax2 = -np.inf
        j = -1
        obj_min = np.inf
        for t in range(n):
            if (y[t] == 1 and alpha[t] > 0) or (y[t] == -1 and alpha[t] < C):
                v = y[t] * G[t]
                if v >= Gmax2:
                    Gmax2 = v
                diff = Gmax + v
                if diff > 0:
                    quad = diag[i] + diag[t] - 2.0 * Ki[t]
                    if quad <= 0:
                        quad = tau
                    obj = -(diff * diff) / quad
                    if obj <= obj_min:
                        obj_min = obj
                        j = t
        gap = Gmax + Gmax2
        if gap < eps or j < 0:
            break
        it += 1
        if precomputed:
            for t in range(n):
                Kj[t] = K[j, t]
        else:
            _kernel_row(X, j, gamma, Kj)

        old_i = alpha[i]
        old_j = alpha[j]
        quad = diag[i] + diag[j] - 2.0 * Ki[j]
        if quad <= 0:
            quad = tau
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / quad
            d = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if d > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = d
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -d
            if d > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - d
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + d
        else:
            delta = (G[i] - G[j]) / quad
            s = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if s > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = s - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = s
            if s > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = s - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = s
        di = alpha[i] - old_i
        dj = alpha[j] - old_j
        for t in range(n):
            G[t] += y[t] * (y[i] * Ki[t] * di + y[j] * Kj[t] * dj)

    # bias from free multipliers, else the midpoint of the feasible interval
    ub = np.inf
    lb = -np.inf
    nfree = 0
    sfree = 0.0
    for t in range(n):
        yG = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] == -1:
                ub = min(ub, yG)
            else:
                lb = max(lb, yG)
        elif alpha[t] <= 0:
            if y[t] == 1:
                ub = min(ub, yG)
            else:
                lb = max(lb, yG)
        else:
            nfree += 1
            sfree += yG
    if nfree > 0:
        rho = sfree / nfree
    else:
        rho = (ub + lb) / 2.0
    return alpha, rho, it, gap


@dataclass
class SvmModel:
    """Decision value ``f(x) = sum a_i y_i K(x_i, x) - rho`` on standardized inputs.

    ``predict_proba`` is ``sigmoid(platt_slope * f(x))`` with the slope fitted
    on training decision values, so 0.5 sits exactly on the margin.
    """

    cost: float = 3000.0
    gamma: float = 0.015
    tol: float = 1e-3
    max_iter: int = 1_000_000
    scaler: Standardizer | None = None
    support_vectors: np.ndarray | None = None
    dual_coef: np.ndarray | None = None  # a_i * y_i for the support vectors
    alphas: np.ndarray | None = None
    support_labels: np.ndarray | None = None
    rho: float = 0.0
    platt_slope: float = 1.0
    iterations: int = 0
    kkt_gap: float = 0.0
    converged: bool = True

    kind = "svm"

    def fit(self, X, y) -> "SvmModel":
        X, y = check_xy(X, y)
        if self.cost <= 0 or self.gamma < 0:
            raise ParameterError("cost must be positive and gamma non-negative")
        self.scaler = Standardizer.fit(X)
        Xs = self.scaler.transform(X)
        ys = np.where(y == 1, 1, -1).astype(np.int64)
        n = Xs.shape[0]
        if n <= PRECOMPUTE_LIMIT:
            K, pre = rbf_kernel(Xs, Xs, self.gamma), True
        else:
            K, pre = np.zeros((1, 1)), False
        alpha, rho, it, gap = _smo(K, Xs, float(self.gamma), pre, ys, float(self.cost), float(self.tol), int(self.max_iter))
        self.iterations, self.kkt_gap = int(it), float(gap)
        self.converged = gap < self.tol
        if not self.converged:
            logger.warning("SMO stopped after %d iterations with KKT gap %.3g", it, gap)
        sv = alpha > 0
        self.support_vectors = Xs[sv]
        self.alphas = alpha[sv]
        self.support_labels = ys[sv]
        self.dual_coef = alpha[sv] * ys[sv]
        self.rho = float(rho)
        self.platt_slope = _fit_platt_slope(self._decision_std(Xs), y)
        return self

    def _decision_std(self, Xs) -> np.ndarray:
        if self.dual_coef.size == 0:
            return np.full(Xs.shape[0], -self.rho)
        out = np.empty(Xs.shape[0])
        for start in range(0, Xs.shape[0], 2048):
            K = rbf_kernel(Xs[start : start + 2048], self.support_vectors, self.gamma)
            out[start : start + 2048] = K @ self.dual_coef - self.rho
        return out

    def decision_function(self, X) -> np.ndarray:
        return self._decision_std(self.scaler.transform(check_xy(X)))

    def predict_proba(self, X) -> np.ndarray:
        return sigmoid(self.platt_slope * self.decision_function(X))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "cost": self.cost,
            "gamma": self.gamma,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "standardization": self.scaler.to_dict(),
            "support_vectors": self.support_vectors.tolist(),
            "alphas": self.alphas.tolist(),
            "support_labels": self.support_labels.tolist(),
            "rho": self.rho,
            "platt_slope": self.platt_slope,
            "iterations": self.iterations,
            "kkt_gap": self.kkt_gap,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d) -> "SvmModel":
        m = cls(d["cost"], d["gamma"], d["tol"], d["max_iter"])
        m.scaler = Standardizer.from_dict(d["standardization"])
        m.support_vectors = np.asarray(d["support_vectors"], dtype=float).reshape(len(d["alphas"]), -1)
        m.alphas = np.asarray(d["alphas"], dtype=float)
        m.support_labels = np.asarray(d["support_labels"], dtype=np.int64)
        m.dual_coef = m.alphas * m.support_labels
        m.rho = d["rho"]
        m.platt_slope = d["platt_slope"]
        m.iterations = d["iterations"]
        m.kkt_gap = d["kkt_gap"]
        m.converged = d["converged"]
        return m


def _fit_platt_slope(f, y) -> float:
    """Slope ``A >= 0`` of ``sigmoid(A f)`` under Platt's smoothed targets."""
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    target = np.where(y == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    def nll(a):
        z = a * f
        return float(np.sum(np.logaddexp(0.0, z) - target * z))

    res = minimize_scalar(nll, bounds=(0.0, 1e3), method="bounded", options={"xatol": 1e-8})
    return float(res.x)


def fit_svm(X, y, cost: float = 3000.0, gamma: float = 0.015, **kw) -> SvmModel:
    return SvmModel(cost, gamma, **kw).fit(X, y)
