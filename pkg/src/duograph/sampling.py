"""Per-node neighbor views and the consensus positive/negative sets.

Three views per node: k-NN under cosine similarity of each encoder's
embeddings, plus a topological k-NN by hop distance. Positives are the
three-way intersection; every other node is a negative. All orderings
break ties by smaller node index so rebuilds are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .numcore import l2_normalize_rows


@dataclass(frozen=True)
class NeighborSets:
    """The per-node view sets and the derived positive/negative split."""

    b_theta: tuple[frozenset[int], ...]
    b_phi: tuple[frozenset[int], ...]
    topo: tuple[frozenset[int], ...] | None
    positives: tuple[frozenset[int], ...]
    k: int

    @property
    def n(self) -> int:
        return len(self.positives)

    @cached_property
    def negatives(self) -> tuple[frozenset[int], ...]:
        """Complements of the positives: every other node is a negative."""
        all_nodes = frozenset(range(self.n))
        return tuple(
            all_nodes - pos - {i} for i, pos in enumerate(self.positives)
        )

    def positive_sizes(self) -> np.ndarray:
        return np.array([len(p) for p in self.positives])


def cosine_knn(h: np.ndarray, k: int) -> tuple[frozenset[int], ...]:
    """k most cosine-similar other nodes per node.

    Zero-norm rows are treated as similarity 0 to everything; exact
    similarity ties go to the smaller node index.
    """
    n = h.shape[0]
    if k >= n:
        raise ValueError(f"k={k} must be smaller than the node count {n}")
    normed = l2_normalize_rows(np.asarray(h, dtype=np.float64))
    sims = normed @ normed.T
    np.fill_diagonal(sims, -np.inf)
    sets = []
    order_tiebreak = np.arange(n)
    for i in range(n):
        # lexsort uses the last key as primary: similarity desc, index asc.
        order = np.lexsort((order_tiebreak, -sims[i]))
        sets.append(frozenset(int(j) for j in order[:k]))
    return tuple(sets)


def _adjacency_lists(a: np.ndarray) -> list[np.ndarray]:
    return [np.flatnonzero(a[i]) for i in range(a.shape[0])]


def _bfs_levels(adj: list[np.ndarray], n: int, source: int) -> np.ndarray:
    """Level-synchronous BFS over adjacency lists; inf marks unreachable."""
    dist = np.full(n, np.inf)
    dist[source] = 0.0
    frontier = np.array([source])
    level = 0
    while frontier.size:
        level += 1
        neighbors = np.concatenate([adj[u] for u in frontier])
        fresh = np.unique(neighbors[np.isinf(dist[neighbors])])
        dist[fresh] = level
        frontier = fresh
    return dist


def hop_distances(a: np.ndarray, source: int) -> np.ndarray:
    """BFS hop count from `source`; unreachable nodes get inf."""
    return _bfs_levels(_adjacency_lists(a), a.shape[0], source)


def topological_knn(a: np.ndarray, k: int) -> tuple[frozenset[int], ...]:
    """First k reachable other nodes by (hop distance asc, index asc).

    Truncated below k on disconnected graphs: unreachable nodes never
    qualify.
    """
    n = a.shape[0]
    if k >= n:
        raise ValueError(f"k={k} must be smaller than the node count {n}")
    adj = _adjacency_lists(a)
    order_tiebreak = np.arange(n)
    sets = []
    for i in range(n):
        dist = _bfs_levels(adj, n, i)
        dist[i] = np.inf  # self never qualifies
        order = np.lexsort((order_tiebreak, dist))
        ranked = order[np.isfinite(dist[order])]
        sets.append(frozenset(int(j) for j in ranked[:k]))
    return tuple(sets)


def build_pairs(
    b_theta: tuple[frozenset[int], ...],
    b_phi: tuple[frozenset[int], ...],
    topo: tuple[frozenset[int], ...] | None,
    k: int,
) -> NeighborSets:
    """Intersect the views into positives; everything else is negative.

    `topo=None` drops the topology view (the no-topology ablation), so
    positives are just the two-way embedding intersection.
    """
    n = len(b_theta)
    if len(b_phi) != n or (topo is not None and len(topo) != n):
        raise ValueError("view families cover different node universes")
    positives = []
    for i in range(n):
        p = b_theta[i] & b_phi[i]
        if topo is not None:
            p &= topo[i]
        positives.append(p)
    return NeighborSets(
        b_theta=b_theta,
        b_phi=b_phi,
        topo=topo,
        positives=tuple(positives),
        k=k,
    )


def positive_correct_ratio(
    positives: tuple[frozenset[int], ...], labels: np.ndarray
) -> float | None:
    """Fraction of positive pairs whose two nodes share a label.

    Returns None when every positive set is empty (ratio undefined).
    """
    matches = 0
    total = 0
    for i, pos in enumerate(positives):
        total += len(pos)
        matches += sum(1 for j in pos if labels[j] == labels[i])
    if total == 0:
        return None
    return matches / total
