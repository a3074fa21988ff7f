import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oatest.metrics import hybrid_score, metric_acc, metric_auc


def brute_force_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            total += 1.0 if p > n else 0.5 if p == n else 0.0
    return total / (len(pos) * len(neg))


class TestAccuracy:
    def test_all_right(self):
        assert metric_acc([0.9, 0.1], [1, 0]) == 1.0

    def test_all_wrong(self):
        assert metric_acc([0.9, 0.1], [0, 1]) == 0.0

    def test_half_counts_as_positive(self):
        labels = [1, 0, 1, 1, 0]
        assert metric_acc([0.5] * 5, labels) == pytest.approx(np.mean(labels))

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            metric_acc([0.1, 0.2], [1])


class TestAuc:
    def test_perfect_separation(self):
        assert metric_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0

    def test_single_class_is_undefined(self):
        assert metric_auc([0.1, 0.7, 0.4], [1, 1, 1]) is None
        assert metric_auc([0.1, 0.7, 0.4], [0, 0, 0]) is None

    def test_ties_count_half(self):
        assert metric_auc([0.5, 0.5], [1, 0]) == 0.5

    def test_matches_pair_enumeration(self, rng):
        scores = rng.random(200)
        labels = rng.integers(0, 2, 200)
        assert abs(metric_auc(scores, labels) - brute_force_auc(scores, labels)) < 1e-12

    def test_matches_pair_enumeration_with_ties(self, rng):
        scores = rng.integers(0, 5, 150) / 4.0
        labels = rng.integers(0, 2, 150)
        assert abs(metric_auc(scores, labels) - brute_force_auc(scores, labels)) < 1e-12

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            metric_auc([0.1], [1, 0])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.integers(-50, 50), st.integers(0, 1)), min_size=2, max_size=60))
    def test_invariant_under_monotone_maps(self, pairs):
        scores = np.array([p[0] for p in pairs], dtype=float)
        labels = np.array([p[1] for p in pairs])
        base = metric_auc(scores, labels)
        for transform in (lambda x: 3 * x + 1, lambda x: x ** 3, lambda x: 1 / (1 + np.exp(-x / 10))):
            assert metric_auc(transform(scores), labels) == base


class TestHybrid:
    def test_perfect(self):
        assert hybrid_score([0.9, 0.8, 0.2], [1, 1, 0]) == 1.0

    def test_single_class_falls_back_to_accuracy(self):
        assert hybrid_score([0.9, 0.8, 0.7], [1, 1, 1]) == 1.0
        assert hybrid_score([0.9, 0.2, 0.7], [1, 1, 1]) == pytest.approx(2 / 3)

    def test_average_of_parts(self):
        p, y = [0.9, 0.4, 0.6, 0.2], [1, 1, 0, 0]
        assert hybrid_score(p, y) == pytest.approx((metric_acc(p, y) + metric_auc(p, y)) / 2)
