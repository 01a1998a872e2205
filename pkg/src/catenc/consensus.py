"""Symmetric-difference distance between dominance relations, weak-order
consensus ranking (exhaustive for small condition sets, multi-start local
search otherwise), and complete-linkage clustering of relations."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .evaluation import Relation

EXHAUSTIVE_LIMIT = 6
LOCAL_SEARCH_RESTARTS = 50


@dataclass(frozen=True)
class WeakOrder:
    """Assignment of each condition to a rank tier 1..T (1 = best)."""

    labels: tuple
    tiers: tuple  # tier id per condition, contiguous 1..T

    def __post_init__(self):
        t = sorted(set(self.tiers))
        if t != list(range(1, len(t) + 1)):
            raise ValueError("tiers must be contiguous 1..T")

    def dominance(self) -> np.ndarray:
        m = len(self.tiers)
        tiers = np.asarray(self.tiers)
        return tiers[:, None] < tiers[None, :]


@dataclass(frozen=True)
class Dendrogram:
    """Merge sequence (cluster_a, cluster_b, height); leaves are 0..n-1 and
    merge k creates cluster n+k."""

    n_leaves: int
    merges: tuple


def symdiff_distance(a: Relation, b: Relation) -> int:
    """Number of ordered pairs (i, j) dominated in exactly one relation."""
    if a.labels != b.labels:
        raise ValueError("relations must share the same condition labels")
    return int(np.sum(a.beats != b.beats))


def _matrix_distance(dom: np.ndarray, beats: np.ndarray) -> int:
    return int(np.sum(dom != beats))


def _tier_vectors(m: int):
    """All weak orders on m items as contiguous tier vectors, lexicographic."""

    def gen(prefix, n_tiers):
        if len(prefix) == m:
            if len(set(prefix)) == n_tiers:
                yield tuple(prefix)
            return
        remaining = m - len(prefix)
        for t in range(1, n_tiers + 1):
            # prune: remaining items must still be able to fill unused tiers
            missing = n_tiers - len(set(prefix) | {t})
            if missing <= remaining - 1:
                yield from gen(prefix + [t], n_tiers)

    for n_tiers in range(1, m + 1):
        yield from gen([], n_tiers)


def enumerate_weak_orders(m: int):
    """Contiguous tier vectors of every weak order on m items."""
    yield from _tier_vectors(m)


def _total_distance(tiers, relations) -> int:
    tiers = np.asarray(tiers)
    dom = tiers[:, None] < tiers[None, :]
    return sum(_matrix_distance(dom, r.beats) for r in relations)


def _canonical(tiers) -> tuple:
    """Relabel tier ids to contiguous 1..T preserving order."""
    ranks = sorted(set(tiers))
    remap = {t: i + 1 for i, t in enumerate(ranks)}
    return tuple(remap[t] for t in tiers)


def _local_search(relations, m, rng):
    tiers = list(_canonical(tuple(rng.integers(1, m + 1, size=m))))
    best_d = _total_distance(tiers, relations)
    improved = True
    while improved:
        improved = False
        best_move = None
        n_tiers = max(tiers)
        # single-item tier moves, including a new tier before/between/after
        for i in range(m):
            for t in range(1, n_tiers + 1):
                if t == tiers[i]:
                    continue
                cand = list(tiers)
                cand[i] = t
                cand = list(_canonical(tuple(cand)))
                d = _total_distance(cand, relations)
                if d < best_d:
                    best_d, best_move = d, cand
            for pos in range(n_tiers + 1):
                cand = [t + 1 if t > pos else t for t in tiers]
                cand[i] = pos + 1
                cand = list(_canonical(tuple(cand)))
                d = _total_distance(cand, relations)
                if d < best_d:
                    best_d, best_move = d, cand
        # adjacent-tier merges
        for t in range(1, max(tiers)):
            cand = [x - 1 if x > t else x for x in tiers]
            cand = list(_canonical(tuple(cand)))
            d = _total_distance(cand, relations)
            if d < best_d:
                best_d, best_move = d, cand
        if best_move is not None:
            tiers = best_move
            improved = True
    return tuple(tiers), best_d


def consensus_weak_order(relations, seed: int = 0,
                         restarts: int = LOCAL_SEARCH_RESTARTS,
                         force_local: bool = False
                         ) -> tuple[WeakOrder, int, bool]:
    """Weak order minimizing the summed symmetric-difference distance.

    Exhaustive (exact) up to 6 conditions, seeded multi-start local search
    beyond. Ties break to the lexicographically smallest tier vector.
    """
    if not relations:
        raise ValueError("need at least one relation")
    labels = relations[0].labels
    for r in relations[1:]:
        if r.labels != labels:
            raise ValueError("relations must share the same condition labels")
    m = len(labels)
    if m <= EXHAUSTIVE_LIMIT and not force_local:
        best_tiers, best_d = None, None
        for tiers in enumerate_weak_orders(m):
            d = _total_distance(tiers, relations)
            if best_d is None or d < best_d or (d == best_d
                                                and tiers < best_tiers):
                best_tiers, best_d = tiers, d
        return WeakOrder(tuple(labels), best_tiers), best_d, True
    rng = np.random.default_rng(seed)
    best_tiers, best_d = None, None
    for _ in range(restarts):
        tiers, d = _local_search(relations, m, rng)
        if best_d is None or d < best_d or (d == best_d
                                            and tiers < best_tiers):
            best_tiers, best_d = tiers, d
    return WeakOrder(tuple(labels), best_tiers), best_d, False


def complete_linkage(relations) -> Dendrogram:
    """Agglomerative clustering with cluster distance equal to the maximum
    pairwise symmetric-difference distance; merge ties break toward the
    smallest contained leaf index."""
    n = len(relations)
    if n < 2:
        raise ValueError("need at least 2 relations")
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = dist[j, i] = symdiff_distance(relations[i],
                                                       relations[j])
    clusters = {i: {"id": i, "leaves": [i]} for i in range(n)}
    merges = []
    next_id = n
    while len(clusters) > 1:
        best = None
        keys = sorted(clusters, key=lambda k: min(clusters[k]["leaves"]))
        for a, b in itertools.combinations(keys, 2):
            d = max(dist[x, y] for x in clusters[a]["leaves"]
                    for y in clusters[b]["leaves"])
            key = (d, min(clusters[a]["leaves"]), min(clusters[b]["leaves"]))
            if best is None or key < best[0]:
                best = (key, a, b)
        (d, _, _), a, b = best
        merges.append((clusters[a]["id"], clusters[b]["id"], float(d)))
        leaves = clusters[a]["leaves"] + clusters[b]["leaves"]
        del clusters[a], clusters[b]
        clusters[next_id] = {"id": next_id, "leaves": leaves}
        next_id += 1
    return Dendrogram(n, tuple(merges))
