import numpy as np
import pytest
from hypothesis import given, strategies as st

from linkprop.graphs import Partition, build_graph
from linkprop.ranking import (EvalResult, SplitSet, evaluate, items_by_user,
                              mean_result, metrics_at_k, score_user, top_k)
from linkprop.reference import metrics_scalar


def make_splits(part, train, val=(), test=()):
    to_arr = lambda pairs: np.asarray(list(pairs), dtype=int).reshape(-1, 2)
    return SplitSet(partition=part, train=to_arr(train), val=to_arr(val),
                    test=to_arr(test), ratios=(0.8, 0.1, 0.1), seed=0)


class TestTopK:
    def test_orders_by_score(self):
        assert list(top_k(np.array([3.0, 1.0, 2.0]), 2)) == [0, 2]

    def test_ties_break_by_index(self):
        assert list(top_k(np.array([1.0, 1.0, 2.0]), 3)) == [2, 0, 1]

    def test_filters_masked_scores(self):
        scores = np.array([-np.inf, 0.5, -np.inf, 0.1])
        assert list(top_k(scores, 4)) == [1, 3]

    def test_cutoff_validation(self):
        with pytest.raises(ValueError, match="cutoff"):
            top_k(np.array([1.0]), 0)

    @given(st.integers(0, 2**16), st.integers(1, 12))
    def test_property_matches_full_sort(self, seed, k):
        rng = np.random.default_rng(seed)
        scores = rng.normal(size=15)
        scores[rng.integers(0, 15, size=4)] = -np.inf
        expected = [i for i in sorted(range(15), key=lambda i: (-scores[i], i))
                    if np.isfinite(scores[i])][:k]
        assert list(top_k(scores, k)) == expected


class TestMetricsAtK:
    def test_single_hit_at_top(self):
        p, r, n = metrics_at_k(np.arange(20), np.array([0]), k=20)
        assert (p, r, n) == (0.05, 1.0, 1.0)

    def test_single_hit_at_second_place(self):
        _, _, n = metrics_at_k(np.arange(20), np.array([1]), k=20)
        assert n == pytest.approx(1.0 / np.log2(3.0))

    def test_no_hits(self):
        p, r, n = metrics_at_k(np.array([5, 6, 7]), np.array([0, 1]), k=3)
        assert (p, r, n) == (0.0, 0.0, 0.0)

    def test_short_list_still_divides_by_k(self):
        p, r, _ = metrics_at_k(np.array([0]), np.array([0]), k=10)
        assert p == 0.1
        assert r == 1.0

    def test_ideal_truncates_at_test_size(self):
        # two of three test items in the top 2: idcg uses ranks 1..2 only
        p, r, n = metrics_at_k(np.array([0, 1]), np.array([0, 1, 9]), k=2)
        assert n == 1.0
        assert r == pytest.approx(2.0 / 3.0)

    def test_empty_test_set(self):
        with pytest.raises(ValueError, match="empty test set"):
            metrics_at_k(np.array([0]), np.array([]), k=1)

    def test_perfect_prefix_is_unit_ndcg(self):
        ranked = np.array([3, 1, 4, 2])
        _, _, n = metrics_at_k(ranked, np.array([3, 1]), k=4)
        assert n == 1.0

    @given(st.integers(0, 2**16), st.integers(1, 15))
    def test_property_matches_scalar_oracle(self, seed, k):
        rng = np.random.default_rng(seed)
        ranked = rng.permutation(20)[: rng.integers(1, 21)]
        relevant = rng.choice(20, size=rng.integers(1, 6), replace=False)
        got = metrics_at_k(ranked, relevant, k)
        expected = metrics_scalar(ranked, relevant, k)
        assert got == expected

    @given(st.integers(0, 2**16), st.integers(1, 15))
    def test_property_counting_identity(self, seed, k):
        rng = np.random.default_rng(seed)
        ranked = rng.permutation(20)
        relevant = rng.choice(20, size=rng.integers(1, 6), replace=False)
        p, r, n = metrics_at_k(ranked, relevant, k)
        hits = len(set(ranked[:k].tolist()) & set(relevant.tolist()))
        assert p * k == pytest.approx(hits)
        assert r * len(relevant) == pytest.approx(hits)
        assert 0.0 <= n <= 1.0 + 1e-12


class TestScoreUser:
    def test_masks_train_interactions(self):
        part = Partition(2, 3)
        graph = build_graph([(0, 2), (0, 3), (1, 4)], partition=part)
        X = np.ones((5, 2))
        scores = score_user(X, 0, graph)
        assert scores[0] == -np.inf and scores[1] == -np.inf
        assert scores[2] == pytest.approx(2.0)

    def test_needs_partition(self):
        graph = build_graph([(0, 1)], num_nodes=2)
        with pytest.raises(ValueError, match="partition"):
            score_user(np.ones((2, 2)), 0, graph)


class TestItemsByUser:
    def test_groups_and_rebases(self):
        part = Partition(3, 3)
        edges = np.array([(2, 4), (0, 3), (0, 5), (2, 3)])
        groups = items_by_user(edges, part)
        assert sorted(groups) == [0, 2]
        assert list(groups[0]) == [0, 2]
        assert list(groups[2]) == [0, 1]

    def test_empty(self):
        assert items_by_user(np.empty((0, 2), dtype=int), Partition(2, 2)) == {}


class TestEvaluate:
    def test_perfect_model(self):
        part = Partition(2, 3)
        train = [(0, 2), (1, 3)]
        splits = make_splits(part, train, test=[(0, 3), (1, 4)])
        graph = build_graph(train, partition=part)
        X = np.array([[1.0, 0.0], [0.0, 1.0],
                      [0.6, 0.0], [1.0, 0.0], [0.0, 1.0]])
        result = evaluate(X, splits, graph, k=1)
        assert result.recall == 1.0
        assert result.precision == 1.0
        assert result.ndcg == 1.0
        assert result.users_evaluated == 2
        assert result.users_skipped == 0

    def test_users_without_test_edges_are_skipped(self):
        part = Partition(3, 3)
        train = [(0, 3), (1, 4), (2, 5)]
        splits = make_splits(part, train, test=[(0, 4)])
        graph = build_graph(train, partition=part)
        result = evaluate(np.ones((6, 2)), splits, graph, k=2)
        assert result.users_evaluated == 1
        assert result.users_skipped == 2

    def test_val_split_selection(self):
        part = Partition(2, 2)
        train = [(0, 2), (1, 3)]
        splits = make_splits(part, train, val=[(0, 3)], test=[(1, 2)])
        graph = build_graph(train, partition=part)
        X = np.ones((4, 2))
        val = evaluate(X, splits, graph, k=1, split="val")
        test = evaluate(X, splits, graph, k=1, split="test")
        assert val.users_evaluated == 1
        assert test.users_evaluated == 1

    def test_unknown_split(self):
        part = Partition(2, 2)
        splits = make_splits(part, [(0, 2)], test=[(1, 3)])
        graph = build_graph([(0, 2)], partition=part)
        with pytest.raises(ValueError, match="split"):
            evaluate(np.ones((4, 2)), splits, graph, split="train")

    def test_no_evaluable_users(self):
        part = Partition(2, 2)
        splits = make_splits(part, [(0, 2), (1, 3)])
        graph = build_graph([(0, 2), (1, 3)], partition=part)
        with pytest.raises(ValueError, match="no users"):
            evaluate(np.ones((4, 2)), splits, graph)


class TestMeanResult:
    def test_averages_fields(self):
        a = EvalResult(k=5, precision=0.2, recall=0.4, ndcg=0.5,
                       users_evaluated=10, users_skipped=0)
        b = EvalResult(k=5, precision=0.4, recall=0.2, ndcg=0.7,
                       users_evaluated=12, users_skipped=2)
        mean = mean_result([a, b])
        assert mean.precision == pytest.approx(0.3)
        assert mean.recall == pytest.approx(0.3)
        assert mean.ndcg == pytest.approx(0.6)
        assert mean.k == 5

    def test_rejects_mixed_cutoffs(self):
        a = EvalResult(k=5, precision=0, recall=0, ndcg=0,
                       users_evaluated=1, users_skipped=0)
        b = EvalResult(k=10, precision=0, recall=0, ndcg=0,
                       users_evaluated=1, users_skipped=0)
        with pytest.raises(ValueError, match="cutoffs"):
            mean_result([a, b])
