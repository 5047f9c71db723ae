"""Top-K recommendation evaluation on bipartite splits.

Scores are inner products between a user's embedding row and every item
row; items the user already interacted with in training are masked out, the
rest are ranked, and Precision/Recall/NDCG at a cutoff are averaged over
users that have at least one test item.  Ties rank lower item ids first so
results do not depend on sort internals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from linkprop.graphs import Graph, Partition


@dataclass(frozen=True, eq=False)
class SplitSet:
    """Per-user train/validation/test partition of a bipartite edge set.

    Edge arrays are canonical (user id first, rows sorted); `flagged` lists
    users left without test edges by the degenerate-degree policy.
    """

    partition: Partition
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    ratios: tuple[float, float, float]
    seed: int
    flagged: tuple = ()

    @property
    def num_edges(self) -> int:
        return self.train.shape[0] + self.val.shape[0] + self.test.shape[0]


def items_by_user(edges: np.ndarray, partition: Partition) -> dict:
    """user id -> sorted array of item indices (0-based on the item side)."""
    out: dict[int, np.ndarray] = {}
    if edges.size == 0:
        return out
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    users = edges[order, 0]
    items = edges[order, 1] - partition.num_users
    bounds = np.flatnonzero(np.diff(users)) + 1
    for chunk_users, chunk_items in zip(np.split(users, bounds),
                                        np.split(items, bounds)):
        out[int(chunk_users[0])] = chunk_items
    return out


def score_user(X: np.ndarray, user: int, graph: Graph) -> np.ndarray:
    """Scores of every item for one user, train-interacted items at -inf.

    `graph` must be the training graph; its partition defines the item
    block.  Pass propagated embeddings when the model scores with them.
    """
    if graph.partition is None:
        raise ValueError("scoring needs a bipartite partition")
    part = graph.partition
    scores = X[part.num_users:] @ X[user]
    interacted = graph.neighbors(user) - part.num_users
    scores[interacted] = -np.inf
    return scores


def top_k(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k best finite scores, ties broken by ascending index.

    Returns fewer than k entries when fewer candidates are scoreable.
    """
    if k < 1:
        raise ValueError("cutoff must be >= 1")
    order = np.argsort(-scores, kind="stable")
    order = order[np.isfinite(scores[order])]
    return order[:k]


def metrics_at_k(ranked: np.ndarray, test_items: np.ndarray,
                 k: int) -> tuple[float, float, float]:
    """(precision, recall, ndcg) of one ranked list against binary relevance.

    precision divides by the requested cutoff even when the list is short;
    the ideal DCG truncates at min(k, number of test items).
    """
    if len(test_items) == 0:
        raise ValueError("metrics undefined for an empty test set")
    hits = np.isin(ranked[:k], test_items)
    num_hits = int(hits.sum())
    precision = num_hits / k
    recall = num_hits / len(test_items)
    # sequential accumulation in rank order, matching the scalar definition
    # bit for bit (numpy's blocked summation would not)
    dcg = 0.0
    for rank in np.flatnonzero(hits):
        dcg += 1.0 / float(np.log2(rank + 2.0))
    idcg = 0.0
    for rank in range(min(k, len(test_items))):
        idcg += 1.0 / float(np.log2(rank + 2.0))
    return precision, recall, dcg / idcg


@dataclass(frozen=True)
class EvalResult:
    """Mean ranking metrics over all evaluable users of one trained model."""

    k: int
    precision: float
    recall: float
    ndcg: float
    users_evaluated: int
    users_skipped: int


def evaluate(X: np.ndarray, splits: SplitSet, train_graph: Graph,
             k: int = 20, split: str = "test") -> EvalResult:
    """Rank candidates for every user with held-out edges, average metrics.

    `split` picks the held-out edge set ("test" or "val"); candidates are
    always the items unseen in training.
    """
    if split not in ("test", "val"):
        raise ValueError("split must be 'test' or 'val'")
    held_out = splits.test if split == "test" else splits.val
    test_map = items_by_user(held_out, splits.partition)
    if not test_map:
        raise ValueError(f"no users have {split} edges")
    num_users = splits.partition.num_users
    sums = np.zeros(3)
    evaluated = 0
    for user in range(num_users):
        test_items = test_map.get(user)
        if test_items is None:
            continue
        ranked = top_k(score_user(X, user, train_graph), k)
        sums += metrics_at_k(ranked, test_items, k)
        evaluated += 1
    prec, rec, ndcg = sums / evaluated
    return EvalResult(k=k, precision=float(prec), recall=float(rec),
                      ndcg=float(ndcg), users_evaluated=evaluated,
                      users_skipped=num_users - evaluated)


def mean_result(results) -> EvalResult:
    """Average EvalResults across repetition seeds (same k required)."""
    results = list(results)
    ks = {r.k for r in results}
    if len(ks) != 1:
        raise ValueError("cannot average results at different cutoffs")
    return EvalResult(
        k=ks.pop(),
        precision=float(np.mean([r.precision for r in results])),
        recall=float(np.mean([r.recall for r in results])),
        ndcg=float(np.mean([r.ndcg for r in results])),
        users_evaluated=int(np.mean([r.users_evaluated for r in results])),
        users_skipped=int(np.mean([r.users_skipped for r in results])))
