import numpy as np
import pytest
from scipy.optimize import minimize

from websift.errors import ParameterError
from websift.learners._common import Standardizer
from websift.learners.svm import SvmModel, _smo, rbf_kernel


def kkt_residual(K, y, alpha, rho, C):
    """Largest violation of the box-constrained dual optimality conditions."""
    f = K @ (alpha * y) - rho
    m = y * f
    tol = 1e-8 * C
    free = (alpha > tol) & (alpha < C - tol)
    r = np.zeros_like(m)
    r[alpha <= tol] = np.maximum(0, 1 - m[alpha <= tol])
    r[alpha >= C - tol] = np.maximum(0, m[alpha >= C - tol] - 1)
    r[free] = np.abs(m[free] - 1)
    return max(r.max(), abs(alpha @ y))


def dual_objective(K, y, a):
    Q = K * np.outer(y, y)
    return 0.5 * a @ Q @ a - a.sum()


def qp_oracle(K, y, C):
    """The same dual solved by a general-purpose constrained optimizer."""
    n = len(y)
    Q = K * np.outer(y, y)
    res = minimize(lambda a: 0.5 * a @ Q @ a - a.sum(), np.full(n, 0.1), jac=lambda a: Q @ a - 1,
                   bounds=[(0, C)] * n, constraints=[{"type": "eq", "fun": lambda a: a @ y, "jac": lambda a: y.astype(float)}],
                   method="SLSQP", options={"ftol": 1e-12, "maxiter": 500})
    return res.x


class TestKkt:
    def test_separable_blobs(self, blobs):
        X, y = blobs
        Xs = Standardizer.fit(X).transform(X)
        ys = np.where(y == 1, 1, -1).astype(np.int64)
        K = rbf_kernel(Xs, Xs, 0.5)
        alpha, rho, it, gap = _smo(K, Xs, 0.5, True, ys, 10.0, 1e-3, 100000)
        assert gap < 1e-3
        assert kkt_residual(K, ys, alpha, rho, 10.0) <= 1e-2

    def test_model_separates_blobs(self, blobs):
        X, y = blobs
        m = SvmModel(cost=10.0, gamma=0.5).fit(X, y)
        assert m.converged and np.array_equal(m.decision_function(X) > 0, y == 1)
        p = m.predict_proba(X)
        assert np.array_equal(p > 0.5, y == 1) and m.platt_slope > 0


class TestXor:
    X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    y = np.array([0, 0, 1, 1])

    def test_solved_exactly(self):
        m = SvmModel(cost=100.0, gamma=1.0, tol=1e-6).fit(self.X, self.y)
        assert np.array_equal(m.decision_function(self.X) > 0, self.y == 1)

    def test_matches_qp_oracle(self):
        C, gamma = 100.0, 1.0
        Xs = Standardizer.fit(self.X).transform(self.X)
        ys = np.where(self.y == 1, 1, -1).astype(np.int64)
        K = rbf_kernel(Xs, Xs, gamma)
        alpha, rho, _, _ = _smo(K, Xs, gamma, True, ys, C, 1e-8, 100000)
        ref = qp_oracle(K, ys, C)
        assert dual_objective(K, ys, alpha) <= dual_objective(K, ys, ref) + 1e-8
        assert np.allclose(alpha, ref, atol=1e-4)
        # symmetric problem: every point is a support vector with equal weight
        assert np.allclose(alpha, alpha[0]) and abs(rho) < 1e-8


class TestModelPlumbing:
    def test_streamed_kernel_matches_precomputed(self, blobs):
        X, y = blobs
        Xs = Standardizer.fit(X).transform(X)
        ys = np.where(y == 1, 1, -1).astype(np.int64)
        a1, r1, _, _ = _smo(rbf_kernel(Xs, Xs, 0.3), Xs, 0.3, True, ys, 5.0, 1e-4, 100000)
        a2, r2, _, _ = _smo(np.zeros((1, 1)), Xs, 0.3, False, ys, 5.0, 1e-4, 100000)
        assert np.allclose(a1, a2) and r1 == pytest.approx(r2)

    def test_roundtrip(self, blobs):
        X, y = blobs
        m = SvmModel(cost=1.0, gamma=0.2).fit(X, y)
        m2 = SvmModel.from_dict(m.to_dict())
        assert np.allclose(m.predict_proba(X), m2.predict_proba(X))

    def test_bad_parameters(self, blobs):
        with pytest.raises(ParameterError):
            SvmModel(cost=0).fit(*blobs)
