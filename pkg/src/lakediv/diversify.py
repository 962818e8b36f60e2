"""Diverse tuple selection from a pool of unionable-tuple embeddings.

The main routine prunes the pool per source table, clusters the survivors and
keeps each cluster's medoid as a candidate, then re-ranks candidates by their
minimum distance to the query tuples (mean distance breaks ties). Baselines
(greedy marginal contribution, its randomized variant, plain cluster medoids,
random sampling, top-similarity) and an exhaustive-enumeration optimum are
provided for comparison at desk scale.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.cluster.hierarchy import linkage
from scipy.spatial.distance import pdist

from .distances import ZeroVectorError, pairwise_distances
from .embedding import EmbeddingMatrix
from .metrics import DiversityScore, diversity_score
from .tables import TupleRef


class DiversifyError(ValueError):
    pass


@dataclass
class DiversifyParams:
    """k: output size; s: prune budget (None = no pruning); p: candidate
    multiplier (the clustering step builds k*p candidates)."""

    k: int
    s: int | None = None
    p: int = 2
    seed: int = 0
    objective: str = "max-sum"

    def __post_init__(self) -> None:
        if self.k < 1:
            raise DiversifyError(f"k must be >= 1, got {self.k}")
        if self.p < 1:
            raise DiversifyError(f"p must be >= 1, got {self.p}")
        if self.objective not in ("max-sum", "max-min"):
            raise DiversifyError(f"objective must be max-sum or max-min, got {self.objective!r}")
        if self.s is not None:
            if self.s < self.k * self.p:
                raise DiversifyError(f"s={self.s} below k*p={self.k * self.p}")
            if self.s <= self.k:
                raise DiversifyError(f"need k < s, got k={self.k}, s={self.s}")

    def as_dict(self) -> dict:
        return {"k": self.k, "s": self.s, "p": self.p, "seed": self.seed, "objective": self.objective}


@dataclass(frozen=True)
class SelectedTuple:
    ref: TupleRef
    rank_score: float | None
    tie_score: float | None


@dataclass
class DiverseResult:
    algorithm: str
    params: dict
    selected: list[SelectedTuple]
    metrics: DiversityScore | None = None

    @property
    def refs(self) -> list[TupleRef]:
        return [s.ref for s in self.selected]

    def as_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "params": self.params,
            "selected": [
                {
                    "table": s.ref.table,
                    "row": s.ref.row,
                    "rank_score": s.rank_score,
                    "tie_score": s.tie_score,
                }
                for s in self.selected
            ],
            "metrics": self.metrics.as_dict() if self.metrics else None,
        }


def write_result_json(result: DiverseResult, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(result.as_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")


def prune_tuples(e_t: EmbeddingMatrix, s: int | None, metric: str = "cosine") -> EmbeddingMatrix:
    """Keep the s tuples farthest from their own table's mean embedding.

    Scores are computed per table (distance from the table's mean tuple
    embedding) and the top s are kept globally, ties broken by (table, row).
    Kept tuples stay in their original input order. No-op when s is None or
    the pool already fits.
    """
    if s is not None and s < 1:
        raise DiversifyError(f"s must be >= 1, got {s}")
    if s is None or len(e_t) <= s:
        return e_t
    scores = np.zeros(len(e_t))
    for _, idx in e_t.by_table().items():
        rows = e_t.vectors[idx]
        mean = rows.mean(axis=0)
        try:
            scores[idx] = pairwise_distances(mean[None, :], rows, metric=metric)[0]
        except ZeroVectorError:
            # a zero mean (e.g. antipodal pair) gives no usable deviation signal
            scores[idx] = 0.0
    order = sorted(range(len(e_t)), key=lambda i: (-scores[i], e_t.ids[i].key()))
    keep = sorted(order[:s])
    return e_t.subset(keep)


_PDIST_METRIC = {"cosine": "cosine", "euclidean": "euclidean", "manhattan": "cityblock"}


def _cut_linkage(z: np.ndarray, n_leaves: int, n_clusters: int) -> np.ndarray:
    """Labels after replaying the first (n_leaves - n_clusters) merges of a
    linkage matrix; always yields exactly n_clusters clusters, ties included."""
    parent = np.arange(n_leaves + len(z), dtype=np.int64)

    def find(a: int) -> int:
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    for step in range(n_leaves - n_clusters):
        a, b = int(z[step, 0]), int(z[step, 1])
        new = n_leaves + step
        parent[find(a)] = new
        parent[find(b)] = new
    labels = np.empty(n_leaves, dtype=np.int64)
    seen: dict[int, int] = {}
    for i in range(n_leaves):
        root = find(i)
        labels[i] = seen.setdefault(root, len(seen))
    return labels


def cluster_medoids(e_t: EmbeddingMatrix, n: int, metric: str = "cosine") -> list[int]:
    """Cluster tuples (average linkage, same metric as the tuple distance) into
    n clusters and return each cluster's medoid index, ascending.

    The medoid is the member minimizing the sum of distances to its
    co-members, ties to the smallest row index. n is clamped to the pool size
    with a warning when it overshoots.
    """
    if len(e_t) == 0:
        raise DiversifyError("cannot cluster an empty pool")
    if n < 1:
        raise DiversifyError(f"n must be >= 1, got {n}")
    if n > len(e_t):
        warnings.warn(f"clamping cluster count {n} to pool size {len(e_t)}", stacklevel=2)
        n = len(e_t)
    if n == len(e_t):
        return list(range(len(e_t)))
    condensed = pdist(e_t.vectors, metric=_PDIST_METRIC[metric])
    z = linkage(condensed, method="average")
    labels = _cut_linkage(z, len(e_t), n)
    medoids = []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if len(members) == 1:
            medoids.append(int(members[0]))
            continue
        sub = pairwise_distances(e_t.vectors[members], metric=metric)
        medoids.append(int(members[np.argmin(sub.sum(axis=1))]))
    return sorted(medoids)


def rank_from_distances(
    d_to_query: np.ndarray, refs: Sequence[TupleRef]
) -> list[SelectedTuple]:
    """Order candidates by (min distance to any query tuple, mean distance)
    descending; exact ties fall back to ascending (table, row)."""
    d = np.asarray(d_to_query, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != len(refs):
        raise DiversifyError(f"distance matrix shape {d.shape} vs {len(refs)} candidates")
    rank = d.min(axis=1)
    tie = d.mean(axis=1)
    order = sorted(range(len(refs)), key=lambda i: (-rank[i], -tie[i], refs[i].key()))
    return [SelectedTuple(refs[i], float(rank[i]), float(tie[i])) for i in order]


def rank_candidates(candidates: EmbeddingMatrix, e_q: EmbeddingMatrix, metric: str = "cosine") -> list[SelectedTuple]:
    """Rank candidate tuples by their novelty against the query tuples."""
    if len(e_q) < 1:
        raise DiversifyError("need at least one query tuple")
    d = pairwise_distances(candidates.vectors, e_q.vectors, metric=metric)
    return rank_from_distances(d, candidates.ids)


def _ranked_result(
    algorithm: str,
    params: dict,
    e_q: EmbeddingMatrix | None,
    selected: EmbeddingMatrix,
    metric: str,
) -> DiverseResult:
    if e_q is None or len(selected) == 0:
        order = sorted(range(len(selected)), key=lambda i: selected.ids[i].key())
        chosen = [SelectedTuple(selected.ids[i], None, None) for i in order]
        score = None
    else:
        chosen = rank_candidates(selected, e_q, metric=metric)
        score = diversity_score(e_q.vectors, selected.vectors, metric=metric)
    return DiverseResult(algorithm=algorithm, params=params, selected=chosen, metrics=score)


def diversify_dust(
    e_q: EmbeddingMatrix,
    e_t: EmbeddingMatrix,
    params: DiversifyParams,
    metric: str = "cosine",
) -> DiverseResult:
    """Prune, cluster into k*p medoid candidates, re-rank, take the top k."""
    k = params.k
    if len(e_t) < k:
        raise DiversifyError(f"pool has {len(e_t)} tuples, need at least k={k}")
    pruned = prune_tuples(e_t, params.s, metric=metric)
    n_candidates = min(k * params.p, len(pruned))
    medoid_idx = cluster_medoids(pruned, n_candidates, metric=metric)
    ranked = rank_from_distances(
        pairwise_distances(pruned.vectors[medoid_idx], e_q.vectors, metric=metric),
        [pruned.ids[i] for i in medoid_idx],
    )
    chosen = ranked[:k]
    by_key = {ref.key(): i for i, ref in enumerate(e_t.ids)}
    sel = e_t.subset([by_key[s.ref.key()] for s in chosen])
    return DiverseResult(
        algorithm="dust",
        params={**params.as_dict(), "metric": metric},
        selected=chosen,
        metrics=diversity_score(e_q.vectors, sel.vectors, metric=metric),
    )


def _dense_distance_matrix(x: np.ndarray, metric: str) -> np.ndarray:
    # float32 cache above this size: the N x N matrix dominates memory
    if metric == "cosine" and len(x) > 4096:
        norms = np.linalg.norm(x, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            raise ZeroVectorError("zero vector in candidate pool")
        xn = (x / norms).astype(np.float32)
        d = 1.0 - xn @ xn.T
        np.clip(d, 0.0, 2.0, out=d)
        np.fill_diagonal(d, 0.0)
        return d
    return pairwise_distances(x, metric=metric)


def _canonical_order(e_t: EmbeddingMatrix) -> EmbeddingMatrix:
    order = sorted(range(len(e_t)), key=lambda i: e_t.ids[i].key())
    return e_t.subset(order)


def _novelty(e_t: EmbeddingMatrix, e_q: EmbeddingMatrix, metric: str) -> np.ndarray:
    return pairwise_distances(e_t.vectors, e_q.vectors, metric=metric).mean(axis=1)


def mmr_objective(d: np.ndarray, rel: np.ndarray, subset: Sequence[int], k: int, lam: float) -> float:
    """Trade-off objective: (k-1)(1-lambda) * sum of per-tuple novelty
    + 2*lambda * sum of pairwise distances within the subset."""
    idx = list(subset)
    rel_part = max(k - 1, 1) * (1.0 - lam) * float(np.sum(rel[idx]))
    div_part = 0.0
    if len(idx) > 1:
        sub = np.asarray(d[np.ix_(idx, idx)], dtype=np.float64)
        div_part = float(np.triu(sub, k=1).sum())
    return rel_part + 2.0 * lam * div_part


def greedy_marginal_sequence(
    d: np.ndarray, rel: np.ndarray, k: int, lam: float
) -> list[int]:
    """Greedy pick order maximizing the marginal contribution each round.

    The contribution of a candidate t given the current picks R is
        (1-lambda) * max(k-1, 1) * rel[t]
        + 2*lambda * sum of d[t, r] over r in R
        + lambda * (k-1-|R|) * mean d[t, u] over unselected u  (future proxy)
    Ties resolve to the lowest index.
    """
    n = len(rel)
    if not 1 <= k <= n:
        raise DiversifyError(f"k must be in [1, {n}], got {k}")
    row_total = d.sum(axis=1, dtype=np.float64)
    sel_sum = np.zeros(n)
    avail = np.ones(n, dtype=bool)
    base = (1.0 - lam) * max(k - 1, 1) * np.asarray(rel, dtype=np.float64)
    picks: list[int] = []
    for _ in range(k):
        m_future = k - 1 - len(picks)
        denom = n - 1 - len(picks)
        scores = base + 2.0 * lam * sel_sum
        if m_future > 0 and denom > 0:
            scores = scores + lam * m_future * (row_total - sel_sum) / denom
        scores[~avail] = -np.inf
        pick = int(np.argmax(scores))
        picks.append(pick)
        avail[pick] = False
        sel_sum += np.asarray(d[:, pick], dtype=np.float64)
    return picks


def gmc(
    e_q: EmbeddingMatrix,
    e_t: EmbeddingMatrix,
    k: int,
    lam: float = 0.5,
    metric: str = "cosine",
) -> DiverseResult:
    """Greedy marginal-contribution baseline over the full candidate pool.

    Relevance here is novelty: the mean distance to the query tuples (a tuple
    similar to the query adds nothing new).
    """
    if len(e_t) < k:
        raise DiversifyError(f"pool has {len(e_t)} tuples, need at least k={k}")
    pool = _canonical_order(e_t)
    rel = _novelty(pool, e_q, metric)
    d = _dense_distance_matrix(pool.vectors, metric)
    picks = greedy_marginal_sequence(d, rel, k, lam)
    result = _ranked_result("gmc", {"k": k, "lambda": lam, "metric": metric}, e_q, pool.subset(picks), metric)
    return result


def gne(
    e_q: EmbeddingMatrix,
    e_t: EmbeddingMatrix,
    k: int,
    lam: float = 0.5,
    iterations: int = 10,
    alpha: int = 3,
    seed: int = 0,
    metric: str = "cosine",
) -> DiverseResult:
    """Randomized greedy construction plus swap local search, best of
    ``iterations`` restarts; fully determined by the seed.

    Construction picks uniformly among the top-``alpha`` marginal contributors
    each round; local search applies best-improvement swaps between selected
    and outside tuples until the objective stops improving.
    """
    if iterations < 1:
        raise DiversifyError(f"iterations must be >= 1, got {iterations}")
    if len(e_t) < k:
        raise DiversifyError(f"pool has {len(e_t)} tuples, need at least k={k}")
    pool = _canonical_order(e_t)
    n = len(pool)
    params = {
        "k": k, "lambda": lam, "iterations": iterations, "alpha": alpha,
        "seed": seed, "metric": metric,
    }
    if k == n:
        return _ranked_result("gne", params, e_q, pool, metric)
    rel = _novelty(pool, e_q, metric)
    d = np.asarray(_dense_distance_matrix(pool.vectors, metric), dtype=np.float64)
    row_total = d.sum(axis=1)
    rng = np.random.default_rng(seed)
    coef = max(k - 1, 1) * (1.0 - lam)

    def construct() -> list[int]:
        sel_sum = np.zeros(n)
        avail = np.ones(n, dtype=bool)
        picks = []
        for _ in range(k):
            m_future = k - 1 - len(picks)
            denom = n - 1 - len(picks)
            scores = coef * rel + 2.0 * lam * sel_sum
            if m_future > 0 and denom > 0:
                scores = scores + lam * m_future * (row_total - sel_sum) / denom
            scores[~avail] = -np.inf
            top = np.argsort(-scores, kind="stable")[: min(alpha, int(avail.sum()))]
            pick = int(top[rng.integers(len(top))])
            picks.append(pick)
            avail[pick] = False
            sel_sum += d[:, pick]
        return picks

    def local_search(picks: list[int]) -> tuple[list[int], float]:
        current = list(picks)
        in_set = np.zeros(n, dtype=bool)
        in_set[current] = True
        sum_to = d[:, current].sum(axis=1)
        f = mmr_objective(d, rel, current, k, lam)
        for _ in range(200):
            best_gain, best_swap = 1e-12, None
            for pos, o in enumerate(current):
                gain = coef * (rel - rel[o]) + 2.0 * lam * ((sum_to - d[:, o]) - sum_to[o])
                gain[in_set] = -np.inf
                u = int(np.argmax(gain))
                if gain[u] > best_gain:
                    best_gain, best_swap = float(gain[u]), (pos, o, u)
            if best_swap is None:
                break
            pos, o, u = best_swap
            current[pos] = u
            in_set[o], in_set[u] = False, True
            sum_to += d[:, u] - d[:, o]
            f += best_gain
        return current, f

    best_set, best_f = None, -math.inf
    for _ in range(iterations):
        picks, f = local_search(construct())
        key = sorted(pool.ids[i].key() for i in picks)
        if f > best_f + 1e-12 or (abs(f - best_f) <= 1e-12 and (best_set is None or key < best_set[0])):
            best_set, best_f = (key, picks), f
    return _ranked_result("gne", params, e_q, pool.subset(sorted(best_set[1])), metric)


def clt(e_q: EmbeddingMatrix, e_t: EmbeddingMatrix, k: int, metric: str = "cosine") -> DiverseResult:
    """Clustering baseline: k clusters, one medoid each, same clustering rules
    as the main routine; output ordered like the other methods for comparison."""
    if len(e_t) < k:
        raise DiversifyError(f"pool has {len(e_t)} tuples, need at least k={k}")
    medoid_idx = cluster_medoids(e_t, k, metric=metric)
    return _ranked_result("clt", {"k": k, "metric": metric}, e_q, e_t.subset(medoid_idx), metric)


def top_similar(e_q: EmbeddingMatrix, e_t: EmbeddingMatrix, k: int, metric: str = "cosine") -> DiverseResult:
    """Anti-baseline: the k tuples most similar to the query on mean distance
    (what a pure unionability ranking would surface)."""
    if len(e_t) < k:
        raise DiversifyError(f"pool has {len(e_t)} tuples, need at least k={k}")
    mean_d = _novelty(e_t, e_q, metric)
    order = sorted(range(len(e_t)), key=lambda i: (mean_d[i], e_t.ids[i].key()))
    return _ranked_result("topsim", {"k": k, "metric": metric}, e_q, e_t.subset(order[:k]), metric)


def random_select(
    e_t: EmbeddingMatrix,
    k: int,
    seeds: Sequence[int],
    e_q: EmbeddingMatrix | None = None,
    metric: str = "cosine",
) -> list[DiverseResult]:
    """Uniform k-samples without replacement, one result per seed."""
    if len(e_t) < k:
        raise DiversifyError(f"pool has {len(e_t)} tuples, need at least k={k}")
    results = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        idx = sorted(int(i) for i in rng.choice(len(e_t), size=k, replace=False))
        results.append(
            _ranked_result("random", {"k": k, "seed": int(seed), "metric": metric}, e_q, e_t.subset(idx), metric)
        )
    return results


def brute_force_best(
    e_q: EmbeddingMatrix,
    e_t: EmbeddingMatrix,
    k: int,
    objective: str = "max-sum",
    metric: str = "cosine",
    guard: int = 1_000_000,
) -> DiverseResult:
    """Exhaustive optimum of average diversity (max-sum) or min diversity
    (max-min); ties go to the lexicographically smallest id set. Guarded by a
    combination-count cap."""
    import itertools

    n = len(e_t)
    if not 1 <= k <= n:
        raise DiversifyError(f"k must be in [1, {n}], got {k}")
    if objective not in ("max-sum", "max-min"):
        raise DiversifyError(f"objective must be max-sum or max-min, got {objective!r}")
    n_combos = math.comb(n, k)
    if n_combos > guard:
        raise DiversifyError(f"C({n},{k}) = {n_combos} exceeds guard {guard}")
    pool = _canonical_order(e_t)
    d_qt = pairwise_distances(e_q.vectors, pool.vectors, metric=metric)
    d_tt = pairwise_distances(pool.vectors, metric=metric)
    qt_sum = d_qt.sum(axis=0)
    qt_min = d_qt.min(axis=0)
    n_q = len(e_q)
    best_score, best_combo = -math.inf, None
    for combo in itertools.combinations(range(n), k):
        idx = list(combo)
        if objective == "max-sum":
            within = float(d_tt[np.ix_(idx, idx)].sum()) / 2.0
            score = (float(qt_sum[idx].sum()) + within) / (n_q + k)
        else:
            score = float(qt_min[idx].min())
            if k > 1:
                sub = d_tt[np.ix_(idx, idx)]
                score = min(score, float(sub[np.triu_indices(k, k=1)].min()))
        if score > best_score:
            best_score, best_combo = score, idx
    result = _ranked_result(
        f"brute-{objective}",
        {"k": k, "objective": objective, "metric": metric},
        e_q,
        pool.subset(best_combo),
        metric,
    )
    return result
