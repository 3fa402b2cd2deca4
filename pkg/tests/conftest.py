import io
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", parent=settings.get_profile("default"), max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

from websift.ingest import parse_trace_file  # noqa: E402

GOLDEN_PAYLOAD = "provincia=Zaragoza&B2=Vaciar+carrito&cantidad=49"
GOLDEN_URL = "http://localhost:8080/tienda1/miembros/editar.jsp"


def trace_bytes(rows, header=("method", "url", "payload", "cookie", "label")) -> io.BytesIO:
    lines = [",".join(header)] + [",".join(r) for r in rows]
    return io.BytesIO(("\n".join(lines) + "\n").encode("utf-8"))


def parse_rows(rows, **kw):
    return parse_trace_file(trace_bytes(rows), **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def blobs(rng):
    """Two well separated Gaussian clouds in 2-D."""
    a = rng.normal([-3.0, -3.0], 0.6, size=(40, 2))
    b = rng.normal([3.0, 3.0], 0.6, size=(40, 2))
    X = np.vstack([a, b])
    y = np.r_[np.zeros(40, int), np.ones(40, int)]
    return X, y



def fast_hyperparameters():
    """Small grids that keep protocol tests quick."""
    from websift.learners import BoostParams, ForestParams, Hyperparameters

    return Hyperparameters(lasso_lambda_grid=[0.05, 0.01], knn_k=5, svm_cost=10.0, svm_gamma=0.05,
                           rf=ForestParams(n_trees=15, mtry=10), boost=BoostParams(n_learners=15, depth=3))


@pytest.fixture(scope="session")
def small_sessions():
    from websift.ingest import group_sessions, parse_trace_file
    from websift.synth import trace_text

    return group_sessions(parse_trace_file(io.BytesIO(trace_text(150, 0.6, seed=3).encode())).records)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
