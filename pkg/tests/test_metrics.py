import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import rankdata

from websift.metrics import compute_metrics, gmean, roc_auc, wilcoxon_signed_rank


def brute_auc(scores, labels):
    """Fraction of (positive, negative) pairs ranked correctly, ties as one half."""
    pos = [s for s, l in zip(scores, labels) if l]
    neg = [s for s, l in zip(scores, labels) if not l]
    won = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    return won / (len(pos) * len(neg))


def brute_wilcoxon(d):
    """Two-sided exact p by enumerating every sign pattern."""
    d = [x for x in d if x != 0]
    ranks = rankdata(np.abs(d))
    w = sum(r for r, x in zip(ranks, d) if x > 0)
    sums = [sum(r for r, s in zip(ranks, signs) if s) for signs in itertools.product((0, 1), repeat=len(d))]
    lo = sum(1 for s in sums if s <= w + 1e-9)
    hi = sum(1 for s in sums if s >= w - 1e-9)
    return w, min(1.0, 2 * min(lo, hi) / len(sums))


# -- AUC ----------------------------------------------------------------------

class TestAuc:
    def test_thousand_fixtures_match_brute_force(self):
        """Rank formula equals pair enumeration on 1000 random fixtures with ties."""
        rng = np.random.default_rng(7)
        for _ in range(1000):
            n = int(rng.integers(2, 201))
            labels = rng.integers(0, 2, n)
            labels[0], labels[1] = 0, 1
            scores = rng.integers(0, int(rng.integers(2, 30)), n).astype(float)
            assert abs(roc_auc(scores, labels) - brute_auc(scores, labels)) < 1e-12

    def test_single_class_is_none(self):
        assert roc_auc([0.1, 0.2], [1, 1]) is None

    @given(st.lists(st.tuples(st.floats(-5, 5, allow_nan=False), st.booleans()), min_size=2, max_size=40))
    def test_bounds_and_complement(self, pairs):
        """AUC lies in [0,1] and negating scores gives 1 - AUC."""
        s = np.array([p[0] for p in pairs])
        y = np.array([p[1] for p in pairs])
        a = roc_auc(s, y)
        if a is None:
            return
        assert 0 <= a <= 1
        assert math.isclose(roc_auc(-s, y), 1 - a, abs_tol=1e-12)

    @given(st.lists(st.integers(-50, 50), min_size=4, max_size=30))
    def test_monotone_transform_invariance(self, s):
        s = np.array(s, dtype=float)
        y = np.arange(len(s)) % 2
        assert math.isclose(roc_auc(s, y), roc_auc(np.exp(s / 5), y), abs_tol=1e-12)


# -- threshold metrics -------------------------------------------------------

class TestThresholdMetrics:
    def test_gmean_golden(self):
        assert abs(gmean(0.831, 0.773) - 0.801) <= 5e-4

    def test_confusion_counts(self):
        m = compute_metrics([0.9, 0.6, 0.4, 0.1, 0.7], [1, 0, 1, 0, 1])
        assert (m.tp, m.fp, m.tn, m.fn) == (2, 1, 1, 1)
        assert m.precision == pytest.approx(2 / 3) and m.recall == pytest.approx(2 / 3)
        assert m.accuracy == pytest.approx(0.6)
        assert m.gmean == pytest.approx(2 / 3)

    def test_undefined_precision_reported(self):
        m = compute_metrics([0.1, 0.2], [0, 1])
        assert m.precision == 0 and "precision" in m.undefined

    def test_single_class_warns(self):
        with pytest.warns(RuntimeWarning):
            m = compute_metrics([0.1, 0.9], [1, 1])
        assert m.auc is None and "auc" in m.undefined

    def test_ranking_overrides_auc_source(self):
        m = compute_metrics([1, 1, 0, 0], [1, 0, 1, 0], ranking=[0.9, 0.1, 0.8, 0.2])
        assert m.auc == 1.0

    @given(st.lists(st.tuples(st.floats(0, 1), st.booleans()), min_size=1, max_size=50))
    def test_counts_partition(self, pairs):
        s = [p[0] for p in pairs]
        y = [p[1] for p in pairs]
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            m = compute_metrics(s, y)
        assert m.tp + m.fp + m.tn + m.fn == len(pairs)
        assert 0 <= m.gmean <= 1 and 0 <= m.f1 <= 1


# -- Wilcoxon -----------------------------------------------------------------

class TestWilcoxon:
    def test_all_positive_ten(self):
        r = wilcoxon_signed_rank(np.arange(1, 11) * 0.01 + 0.5, np.full(10, 0.5))
        assert r.exact and r.pvalue == 2 / 1024

    def test_duplicate_classifier(self):
        a = np.linspace(0.8, 0.9, 10)
        r = wilcoxon_signed_rank(a, a.copy())
        assert r.pvalue == 1.0 and r.n == 0

    def test_statistic_small_case(self):
        r = wilcoxon_signed_rank([1, -2, 3], [0, 0, 0])
        # 3 of the 8 sign patterns reach W >= 4
        assert r.statistic == 4 and r.pvalue == 0.75

    @given(st.lists(st.integers(-6, 6), min_size=1, max_size=10))
    def test_matches_enumeration(self, d):
        """Exact p equals sign-pattern enumeration, including tied magnitudes."""
        r = wilcoxon_signed_rank(d, [0] * len(d))
        if all(x == 0 for x in d):
            assert r.pvalue == 1.0
            return
        w, p = brute_wilcoxon(d)
        assert r.statistic == pytest.approx(w)
        assert r.pvalue == pytest.approx(p, abs=1e-12)

    def test_normal_approximation_large_n(self):
        rng = np.random.default_rng(0)
        d = rng.normal(0.3, 1, 60)
        r = wilcoxon_signed_rank(d, np.zeros(60))
        assert not r.exact and 0 < r.pvalue < 0.1

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            wilcoxon_signed_rank([1, 2], [1])
