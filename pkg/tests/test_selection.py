import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from websift.learners.forest import ForestParams
from websift.selection import (
    discretize,
    entropy,
    information_gain,
    information_gain_scores,
    joint_entropy,
    lasso_select,
    no_selection,
    rf_importance_select,
    select_features,
)


def sum_entropy(values):
    n = len(values)
    return -sum(c / n * math.log2(c / n) for c in Counter(values).values())


def sum_ig(x, y):
    """Direct summation of mutual information over the joint table."""
    n = len(x)
    pxy = Counter(zip(x, y))
    px, py = Counter(x), Counter(y)
    return sum(c / n * math.log2((c / n) / (px[a] / n * py[b] / n)) for (a, b), c in pxy.items())


small = st.lists(st.integers(0, 4), min_size=1, max_size=60)


class TestEntropyOracles:
    @given(small)
    def test_entropy(self, v):
        assert abs(entropy(v) - sum_entropy(v)) <= 1e-9

    @given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 1)), min_size=1, max_size=60))
    def test_information_gain(self, pairs):
        x = [p[0] for p in pairs]
        y = [p[1] for p in pairs]
        got = information_gain_scores(np.array(x, float)[:, None], np.array(y), bins=10)[0]
        assert abs(got - sum_ig(x, y)) <= 1e-9

    @given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=60))
    def test_symmetry_and_bounds(self, pairs):
        """IG(x;y) = IG(y;x), and 0 <= IG <= min(H(x), H(y))."""
        x = np.array([p[0] for p in pairs])
        y = np.array([p[1] for p in pairs])
        ig_xy = entropy(x) + entropy(y) - joint_entropy(x, y)
        ig_yx = entropy(y) + entropy(x) - joint_entropy(y, x)
        assert abs(ig_xy - ig_yx) <= 1e-12
        assert -1e-12 <= ig_xy <= min(entropy(x), entropy(y)) + 1e-12

    def test_empty_entropy_raises(self):
        with pytest.raises(ValueError):
            entropy([])


class TestDiscretize:
    def test_few_values_kept(self):
        assert list(discretize([5, 1, 5, 3], bins=10)) == [2, 0, 2, 1]

    @given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=200), st.integers(2, 12))
    def test_codes_monotone(self, col, bins):
        col = np.array(col)
        codes = discretize(col, bins)
        order = np.argsort(col, kind="stable")
        assert np.all(np.diff(codes[order]) >= 0)
        assert len(np.unique(codes)) <= max(bins, 1)


class TestSelectors:
    def setup_method(self):
        rng = np.random.default_rng(0)
        n = 300
        self.y = rng.integers(0, 2, n)
        signal = self.y * 2.0 + rng.normal(0, 0.5, n)
        self.X = np.column_stack([signal, rng.normal(size=(n, 5))])
        self.names = [f"f{i}" for i in range(6)]

    def test_ig_keeps_signal(self):
        s = information_gain(self.X, self.y, self.names)
        assert s.retained_names == ["f0"]

    def test_lasso_keeps_signal(self):
        s = lasso_select(self.X, self.y, self.names)
        assert "f0" in s.retained_names
        assert s.scores[0].score == max(f.score for f in s.scores)

    def test_rf_keeps_signal(self):
        s = rf_importance_select(self.X, self.y, self.names, params=ForestParams(n_trees=30, mtry=3))
        assert "f0" in s.retained_names
        assert math.isclose(sum(f.score for f in s.scores), 1.0, abs_tol=1e-9)

    def test_fallback_keeps_top_feature(self):
        X = np.ones((20, 3))
        s = information_gain(X, np.arange(20) % 2, ["a", "b", "c"])
        assert s.fallback and s.mask.sum() == 1

    def test_none_and_unknown(self):
        assert no_selection(["a", "b"]).mask.all()
        with pytest.raises(ValueError):
            select_features("chi2", self.X, self.y, self.names)

    def test_serialization(self):
        d = information_gain(self.X, self.y, self.names).to_dict()
        assert d["retained_count"] == 1 and len(d["features"]) == 6


class TestRetentionRules:
    def test_lasso_boundary_is_inclusive(self):
        class Fixed:
            beta = np.array([1e-4, 9.99e-5, 0.0, -2.0])
            lam = 0.1
        s = lasso_select(None, None, list("abcd"), threshold=1e-4, model=Fixed())
        assert s.retained_names == ["a", "d"]

    def test_label_copy_has_full_gain(self):
        y = np.array([0, 1, 1, 0, 1, 1, 1, 0])
        assert information_gain_scores(y[:, None].astype(float), y)[0] == pytest.approx(entropy(y), abs=1e-12)

    def test_independent_table_has_zero_gain(self):
        x = np.array([0, 0, 1, 1])
        y = np.array([0, 1, 0, 1])
        assert abs(information_gain_scores(x[:, None].astype(float), y)[0]) <= 1e-12

    @given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 1)), min_size=1, max_size=60))
    def test_matches_conditional_entropy_oracle(self, pairs):
        """H(y) + H(x) - H(y,x) equals H(y) - H(y|x)."""
        x = [p[0] for p in pairs]
        y = [p[1] for p in pairs]
        n = len(x)
        cond = sum(x.count(v) / n * sum_entropy([b for a, b in pairs if a == v]) for v in set(x))
        got = information_gain_scores(np.array(x, float)[:, None], np.array(y))[0]
        assert abs(got - (sum_entropy(y) - cond)) <= 1e-9

    def test_tied_scores_fall_back_to_top_one(self):
        from websift.selection import _finish

        s = _finish("rf", ["a", "b", "c"], np.full(3, 1 / 3), np.zeros(3, bool))
        assert s.fallback and s.retained_names == ["a"]
