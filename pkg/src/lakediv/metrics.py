"""Diversity scoring of a selected tuple set against the query tuples.

Average diversity sums all query-to-selected distances plus all selected
pairwise distances and divides by (n + k) — the printed normalization, kept
as-is even though it is not the pair count. Min diversity is the smallest
distance in that same union of sets. Query-to-query distances are excluded:
they are constant across methods.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distances import pairwise_distances
from .tables import Table
from .alignment import UnionedTupleSet


@dataclass(frozen=True)
class DiversityScore:
    average: float
    min: float
    n: int
    k: int

    def as_dict(self) -> dict:
        return {"average": self.average, "min": self.min, "n": self.n, "k": self.k}


def average_diversity(e_q: np.ndarray, e_s: np.ndarray, metric: str = "cosine") -> float:
    """(sum of query-selected distances + sum of selected pairwise distances) / (n + k)."""
    e_q = np.atleast_2d(np.asarray(e_q, dtype=np.float64))
    e_s = np.atleast_2d(np.asarray(e_s, dtype=np.float64))
    n, k = len(e_q), len(e_s)
    if n < 1 or k < 1:
        raise ValueError(f"need n >= 1 and k >= 1, got n={n}, k={k}")
    cross = pairwise_distances(e_q, e_s, metric=metric).sum()
    within = 0.0
    if k > 1:
        d = pairwise_distances(e_s, metric=metric)
        within = float(np.triu(d, k=1).sum())
    return float((cross + within) / (n + k))


def min_diversity(e_q: np.ndarray, e_s: np.ndarray, metric: str = "cosine") -> float:
    """Smallest distance among query-selected and selected-selected pairs."""
    e_q = np.atleast_2d(np.asarray(e_q, dtype=np.float64))
    e_s = np.atleast_2d(np.asarray(e_s, dtype=np.float64))
    n, k = len(e_q), len(e_s)
    if n < 1 or k < 1:
        raise ValueError(f"need n >= 1 and k >= 1, got n={n}, k={k}")
    best = float(pairwise_distances(e_q, e_s, metric=metric).min())
    if k > 1:
        d = pairwise_distances(e_s, metric=metric)
        iu = np.triu_indices(k, k=1)
        best = min(best, float(d[iu].min()))
    return best


def diversity_score(e_q: np.ndarray, e_s: np.ndarray, metric: str = "cosine") -> DiversityScore:
    e_q = np.atleast_2d(e_q)
    e_s = np.atleast_2d(e_s)
    return DiversityScore(
        average=average_diversity(e_q, e_s, metric=metric),
        min=min_diversity(e_q, e_s, metric=metric),
        n=len(e_q),
        k=len(e_s),
    )


@dataclass
class WinnerTally:
    """Per-method counts of queries won on each metric; ties credit every
    tied method and are listed in ``ties`` as (query, metric, methods)."""

    average_wins: dict[str, int]
    min_wins: dict[str, int]
    ties: list[tuple[str, str, tuple[str, ...]]]


def winner_tally(per_query_scores: dict[str, dict[str, DiversityScore]]) -> WinnerTally:
    """Count, per metric, how many queries each method wins (highest score)."""
    methods: set[str] = set()
    for scores in per_query_scores.values():
        methods.update(scores)
    for query, scores in per_query_scores.items():
        missing = methods - set(scores)
        if missing:
            raise ValueError(f"query {query!r} missing scores for methods {sorted(missing)}")
    avg_wins = {m: 0 for m in sorted(methods)}
    min_wins = {m: 0 for m in sorted(methods)}
    ties: list[tuple[str, str, tuple[str, ...]]] = []
    for query in sorted(per_query_scores):
        scores = per_query_scores[query]
        for metric_name, getter, wins in (
            ("average", lambda s: s.average, avg_wins),
            ("min", lambda s: s.min, min_wins),
        ):
            best = max(getter(s) for s in scores.values())
            winners = tuple(sorted(m for m in scores if getter(scores[m]) == best))
            for m in winners:
                wins[m] += 1
            if len(winners) > 1:
                ties.append((query, metric_name, winners))
    return WinnerTally(average_wins=avg_wins, min_wins=min_wins, ties=ties)


def _norm_value(value: str) -> str:
    return value.strip().casefold()


def novel_values(query: Table, selected: UnionedTupleSet, anchor: str | int) -> int:
    """Count distinct non-null values the selected tuples add to one query column.

    ``anchor`` names a query column by header or index; values are casefolded
    and trimmed before the set difference.
    """
    if isinstance(anchor, int):
        if not 0 <= anchor < query.n_columns:
            raise ValueError(f"unknown anchor index {anchor}")
        q_idx = anchor
    else:
        wanted = anchor.strip().casefold()
        matches = [i for i, h in enumerate(query.headers) if h.casefold() == wanted]
        if not matches:
            raise ValueError(f"unknown anchor column {anchor!r}")
        q_idx = matches[0]
    positions = [i for i, ref in enumerate(selected.schema) if ref.index == q_idx]
    if not positions:
        return 0
    pos = positions[0]
    existing = {
        _norm_value(v) for v in query.column_values(q_idx) if v is not None
    }
    added = {
        _norm_value(t.cells[pos])
        for t in selected.tuples
        if t.cells[pos] is not None
    }
    return len(added - existing)
