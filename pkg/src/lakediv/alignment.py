"""Holistic column alignment: cluster query + lake columns jointly, anchor each
cluster on a query column, discard the rest, then outer-union into one tuple pool.

Clustering is agglomerative with average linkage on Euclidean distance, under a
cannot-link constraint: two columns of the same table never share a cluster.
The cluster count is chosen by silhouette score over the feasible range.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .distances import pairwise_euclidean
from .tables import ColumnRef, Table, TupleRef, concat_column_text
from .textutil import hashed_vector, l2_normalize, tokenize


class AlignmentError(ValueError):
    pass


class ConstraintInfeasibleError(AlignmentError):
    """Requested cluster count cannot satisfy the same-table cannot-link constraint."""


@dataclass(frozen=True)
class ColumnVector:
    """A column embedding; dimension must be constant within one alignment run."""

    column: ColumnRef
    vec: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "vec", np.asarray(self.vec, dtype=np.float64))
        if not np.all(np.isfinite(self.vec)):
            raise AlignmentError(f"non-finite embedding for column {self.column}")


@dataclass
class AlignmentCluster:
    anchor: ColumnRef
    members: list[ColumnRef] = field(default_factory=list)


@dataclass
class AlignmentMap:
    """Disjoint column clusters, each anchored on exactly one query column."""

    query_table: str
    clusters: list[AlignmentCluster]
    discarded: list[ColumnRef] = field(default_factory=list)

    def check_invariants(self) -> None:
        seen: set[tuple[str, int]] = set()
        anchors: set[int] = set()
        for cluster in self.clusters:
            if cluster.anchor.table != self.query_table:
                raise AlignmentError(f"anchor {cluster.anchor} is not a query column")
            if cluster.anchor.index in anchors:
                raise AlignmentError(f"query column {cluster.anchor.index} anchors twice")
            anchors.add(cluster.anchor.index)
            refs = [cluster.anchor, *cluster.members]
            tables = [r.table for r in refs]
            if len(set(tables)) != len(tables):
                raise AlignmentError(f"cluster {cluster.anchor} holds two columns of one table")
            for r in refs:
                if r.key() in seen:
                    raise AlignmentError(f"column {r} appears in two clusters")
                seen.add(r.key())
        for r in self.discarded:
            if r.key() in seen:
                raise AlignmentError(f"discarded column {r} also appears in a cluster")
            seen.add(r.key())


def tfidf_select_tokens(
    values: Sequence[str | None],
    corpus: Sequence[Sequence[str | None]],
    max_tokens: int = 512,
) -> list[str]:
    """Rank a column's distinct tokens by tf-idf over the run's columns.

    tf is the token count within the column; idf = ln((1+N)/(1+df)) + 1 with N
    columns in the corpus. Ties break by first occurrence in the column.
    """
    if max_tokens < 1:
        raise ValueError(f"max_tokens must be >= 1, got {max_tokens}")
    tokens = tokenize(concat_column_text(values))
    if not tokens:
        return []
    tf = Counter(tokens)
    first_pos = {}
    for i, t in enumerate(tokens):
        first_pos.setdefault(t, i)
    n_cols = len(corpus)
    df: Counter[str] = Counter()
    for col in corpus:
        for t in set(tokenize(concat_column_text(col))):
            df[t] += 1
    def idf(t: str) -> float:
        return math.log((1 + n_cols) / (1 + df[t])) + 1.0
    ranked = sorted(tf, key=lambda t: (-tf[t] * idf(t), first_pos[t]))
    return ranked[:max_tokens]


class BuiltinColumnProvider:
    """Hashed bag-of-tokens column embedder with corpus tf-idf weights (dim 256).

    fit() must see every column of the run before embedding so document
    frequencies cover the whole corpus.
    """

    def __init__(self, dim: int = 256):
        self.dim = dim
        self.tag = f"builtin-hash-{dim}"
        self._df: Counter[str] = Counter()
        self._n_cols = 0

    def fit(self, corpus: Sequence[Sequence[str | None]]) -> "BuiltinColumnProvider":
        self._df = Counter()
        self._n_cols = len(corpus)
        for col in corpus:
            for t in set(tokenize(concat_column_text(col))):
                self._df[t] += 1
        return self

    def _idf(self, token: str) -> float:
        return math.log((1 + self._n_cols) / (1 + self._df[token])) + 1.0

    def embed_cell(self, text: str) -> np.ndarray:
        counts = Counter(tokenize(text))
        feats = [(t, c * self._idf(t)) for t, c in counts.items()]
        return l2_normalize(hashed_vector(feats, self.dim))

    def embed_tokens(self, tokens: Sequence[str], tf: Counter | None = None) -> np.ndarray:
        if tf is None:
            tf = Counter(tokens)
        feats = [(t, tf[t] * self._idf(t)) for t in tokens]
        return l2_normalize(hashed_vector(feats, self.dim))


class ImportedColumnProvider:
    """Column embeddings read from JSON Lines ({"table", "index", "vec"}) or a mapping."""

    def __init__(self, source: str | Path | dict):
        self._vecs: dict[tuple[str, int], np.ndarray] = {}
        if isinstance(source, dict):
            self._vecs = {k: np.asarray(v, dtype=np.float64) for k, v in source.items()}
        else:
            with Path(source).open(encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    rec = json.loads(line)
                    key = (str(rec["table"]), int(rec["index"]))
                    self._vecs[key] = np.asarray(rec["vec"], dtype=np.float64)
        dims = {v.shape for v in self._vecs.values()}
        if len(dims) > 1:
            raise AlignmentError(f"imported column vectors have mixed dims: {dims}")
        self.dim = next(iter(dims))[0] if dims else 0
        self.tag = "imported-columns"

    def lookup(self, ref: ColumnRef) -> np.ndarray:
        try:
            return self._vecs[ref.key()]
        except KeyError:
            raise AlignmentError(f"imported column embeddings missing {ref.key()}") from None


def write_column_vectors_jsonl(vectors: Sequence[ColumnVector], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for cv in vectors:
            rec = {
                "table": cv.column.table,
                "index": cv.column.index,
                "vec": [float(x) for x in cv.vec],
            }
            fh.write(json.dumps(rec) + "\n")


def embed_column(
    ref: ColumnRef,
    values: Sequence[str | None],
    provider,
    mode: str = "column",
    corpus: Sequence[Sequence[str | None]] | None = None,
    max_tokens: int = 512,
) -> ColumnVector:
    """Embed one column: cell-level averages per-cell vectors, column-level embeds
    the tf-idf-selected token sequence. Import providers look the column up by id."""
    if hasattr(provider, "lookup"):
        return ColumnVector(column=ref, vec=provider.lookup(ref))
    if mode == "cell":
        cells = [v for v in values if v is not None]
        if not cells:
            return ColumnVector(column=ref, vec=np.zeros(provider.dim))
        vecs = [provider.embed_cell(c) for c in cells]
        return ColumnVector(column=ref, vec=np.mean(vecs, axis=0))
    if mode == "column":
        corpus = corpus if corpus is not None else [values]
        tokens = tfidf_select_tokens(values, corpus, max_tokens)
        tf = Counter(tokenize(concat_column_text(values)))
        return ColumnVector(column=ref, vec=provider.embed_tokens(tokens, tf))
    raise ValueError(f"unknown embedding mode {mode!r}; use 'cell' or 'column'")


def embed_run_columns(
    query: Table,
    lake: Sequence[Table],
    provider,
    mode: str = "column",
    max_tokens: int = 512,
) -> list[ColumnVector]:
    """Embed every column of the run (query first, lake tables in input order)."""
    tables = [query, *lake]
    columns = [
        (ref, t.column_values(ref.index)) for t in tables for ref in t.column_refs()
    ]
    corpus = [values for _, values in columns]
    if hasattr(provider, "fit"):
        provider.fit(corpus)
    return [
        embed_column(ref, values, provider, mode=mode, corpus=corpus, max_tokens=max_tokens)
        for ref, values in columns
    ]


def _min_feasible_clusters(vectors: Sequence[ColumnVector]) -> int:
    per_table = Counter(cv.column.table for cv in vectors)
    return max(per_table.values()) if per_table else 1


def constrained_agglomerative(vectors: Sequence[ColumnVector], n_clusters: int) -> np.ndarray:
    """Average-linkage agglomerative clustering with a same-table cannot-link.

    Merges that would join two columns of one table are skipped (treated as
    infinite distance). Merge ties break on the smallest (i, j) member-index
    pair, so results are deterministic under a fixed input order. Returns
    labels 0..n_clusters-1, numbered by each cluster's smallest member index.
    """
    n = len(vectors)
    if not 1 <= n_clusters <= n:
        raise ValueError(f"n_clusters must be in [1, {n}], got {n_clusters}")
    if n_clusters < _min_feasible_clusters(vectors):
        raise ConstraintInfeasibleError(
            f"{n_clusters} clusters infeasible: a table contributes "
            f"{_min_feasible_clusters(vectors)} columns"
        )
    x = np.vstack([cv.vec for cv in vectors])
    dist = pairwise_euclidean(x)
    clusters: list[list[int]] = [[i] for i in range(n)]
    tables: list[set[str]] = [{vectors[i].column.table} for i in range(n)]
    while len(clusters) > n_clusters:
        best = None
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                if tables[a] & tables[b]:
                    continue
                cross = dist[np.ix_(clusters[a], clusters[b])]
                link = float(cross.mean())
                key = (link, min(clusters[a]), min(clusters[b]))
                if best is None or key < best[0]:
                    best = (key, a, b)
        if best is None:
            raise ConstraintInfeasibleError(
                f"stuck at {len(clusters)} clusters: every remaining pair shares a table"
            )
        _, a, b = best
        clusters[a] = sorted(clusters[a] + clusters[b])
        tables[a] |= tables[b]
        del clusters[b], tables[b]
    labels = np.empty(n, dtype=int)
    for lbl, members in enumerate(sorted(clusters, key=min)):
        for i in members:
            labels[i] = lbl
    return labels


def silhouette(vectors: Sequence[ColumnVector] | np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette score over points, Euclidean distance; singletons score 0."""
    if isinstance(vectors, np.ndarray):
        x = np.asarray(vectors, dtype=np.float64)
    else:
        x = np.vstack([cv.vec for cv in vectors])
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    if len(uniq) < 2:
        raise AlignmentError("silhouette undefined for a single cluster")
    dist = pairwise_euclidean(x)
    scores = np.zeros(len(x))
    members = {int(c): np.flatnonzero(labels == c) for c in uniq}
    for i in range(len(x)):
        own = members[int(labels[i])]
        if len(own) == 1:
            scores[i] = 0.0
            continue
        a = dist[i, own[own != i]].mean()
        b = min(dist[i, members[int(c)]].mean() for c in uniq if c != labels[i])
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return float(scores.mean())


def select_cluster_count(vectors: Sequence[ColumnVector]) -> int:
    """Pick the cluster count maximizing silhouette over the feasible range
    [max(2, constraint minimum) .. n-1]; ties resolve toward fewer clusters."""
    n = len(vectors)
    if n < 3:
        raise AlignmentError(f"need at least 3 columns to select a cluster count, got {n}")
    lo = max(2, _min_feasible_clusters(vectors))
    hi = n - 1
    if lo > hi:
        raise ConstraintInfeasibleError(
            f"no feasible cluster count in [2, {hi}]: constraint minimum is {lo}"
        )
    best_n, best_score = None, -math.inf
    for k in range(lo, hi + 1):
        labels = constrained_agglomerative(vectors, k)
        score = silhouette(vectors, labels)
        if score > best_score:
            best_n, best_score = k, score
    return int(best_n)


def align_columns(
    query: Table,
    lake: Sequence[Table],
    provider,
    mode: str = "column",
    n_clusters: int | None = None,
) -> AlignmentMap:
    """Cluster all run columns and anchor each cluster on its query column.

    Clusters without a query column are discarded. A cluster somehow holding
    several query columns (possible only if constraint handling failed) is
    split defensively: the lowest-index query column keeps the members, the
    others become empty anchors.
    """
    vectors = embed_run_columns(query, lake, provider, mode=mode)
    k = n_clusters if n_clusters is not None else select_cluster_count(vectors)
    labels = constrained_agglomerative(vectors, k)
    by_label: dict[int, list[ColumnRef]] = {}
    for cv, lbl in zip(vectors, labels):
        by_label.setdefault(int(lbl), []).append(cv.column)
    clusters: dict[int, AlignmentCluster] = {}
    discarded: list[ColumnRef] = []
    for refs in by_label.values():
        query_cols = sorted((r for r in refs if r.table == query.name), key=lambda r: r.index)
        members = sorted(
            (r for r in refs if r.table != query.name), key=lambda r: (r.table, r.index)
        )
        if not query_cols:
            discarded.extend(members)
            continue
        clusters[query_cols[0].index] = AlignmentCluster(anchor=query_cols[0], members=members)
        for extra in query_cols[1:]:
            clusters[extra.index] = AlignmentCluster(anchor=extra, members=[])
    for ref in query.column_refs():
        clusters.setdefault(ref.index, AlignmentCluster(anchor=ref, members=[]))
    amap = AlignmentMap(
        query_table=query.name,
        clusters=[clusters[i] for i in sorted(clusters)],
        discarded=sorted(discarded, key=lambda r: (r.table, r.index)),
    )
    amap.check_invariants()
    return amap


@dataclass(frozen=True)
class UnionedTuple:
    source: TupleRef
    cells: tuple[str | None, ...]


@dataclass
class UnionedTupleSet:
    """Lake tuples projected onto query-column order; missing anchors are null."""

    schema: list[ColumnRef]
    tuples: list[UnionedTuple]

    @property
    def headers(self) -> list[str]:
        return [ref.header or f"col{ref.index}" for ref in self.schema]


def outer_union(query: Table, lake: Sequence[Table], amap: AlignmentMap) -> UnionedTupleSet:
    """Project every lake tuple onto the query schema, padding with nulls where a
    table has no column in an anchor's cluster. Query tuples are not included."""
    schema = [c.anchor for c in amap.clusters]
    member_of: dict[str, dict[int, int]] = {}
    for pos, cluster in enumerate(amap.clusters):
        for m in cluster.members:
            member_of.setdefault(m.table, {})[pos] = m.index
    tuples: list[UnionedTuple] = []
    for table in lake:
        slots = member_of.get(table.name, {})
        for r in range(table.n_rows):
            cells = tuple(
                table.cell(r, slots[pos]) if pos in slots else None
                for pos in range(len(schema))
            )
            tuples.append(UnionedTuple(source=TupleRef(table.name, r), cells=cells))
    return UnionedTupleSet(schema=schema, tuples=tuples)


PairSet = set[tuple[tuple[str, int], tuple[str, int]]]


def _norm_pair(a: tuple[str, int], b: tuple[str, int]) -> tuple[tuple[str, int], tuple[str, int]]:
    return (a, b) if a <= b else (b, a)


def alignment_pairs(amap: AlignmentMap) -> PairSet:
    """Pair-set view of an alignment: anchor-member and member-member pairs per
    cluster, plus a self-pair for each query column with no members."""
    pairs: PairSet = set()
    for cluster in amap.clusters:
        refs = [cluster.anchor.key(), *(m.key() for m in cluster.members)]
        if len(refs) == 1:
            pairs.add((refs[0], refs[0]))
            continue
        for i in range(len(refs)):
            for j in range(i + 1, len(refs)):
                pairs.add(_norm_pair(refs[i], refs[j]))
    return pairs


def truth_pairs(raw: Sequence[tuple[ColumnRef, ColumnRef]]) -> PairSet:
    return {_norm_pair(a.key(), b.key()) for a, b in raw}


def alignment_prf(predicted: AlignmentMap, truth: PairSet) -> tuple[float, float, float]:
    """Precision, recall, F1 between the predicted and true alignment pair sets."""
    a_m = alignment_pairs(predicted)
    hits = len(a_m & truth)
    p = hits / len(a_m) if a_m else 0.0
    r = hits / len(truth) if truth else 0.0
    f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return (p, r, f1)


def _ref_dict(ref: ColumnRef) -> dict:
    return {"table": ref.table, "index": ref.index, "header": ref.header}


def write_alignment_json(amap: AlignmentMap, path: str | Path) -> None:
    doc = {
        "query_table": amap.query_table,
        "clusters": [
            {"anchor": _ref_dict(c.anchor), "members": [_ref_dict(m) for m in c.members]}
            for c in amap.clusters
        ],
        "discarded": [_ref_dict(r) for r in amap.discarded],
    }
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_alignment_json(path: str | Path) -> AlignmentMap:
    with Path(path).open(encoding="utf-8") as fh:
        doc = json.load(fh)
    def ref(d: dict) -> ColumnRef:
        return ColumnRef(d["table"], d["index"], d.get("header"))
    amap = AlignmentMap(
        query_table=doc["query_table"],
        clusters=[
            AlignmentCluster(anchor=ref(c["anchor"]), members=[ref(m) for m in c["members"]])
            for c in doc["clusters"]
        ],
        discarded=[ref(r) for r in doc["discarded"]],
    )
    amap.check_invariants()
    return amap


def rank_candidate_tables(
    query: Table, lake: Sequence[Table], provider, mode: str = "column"
) -> list[tuple[str, float]]:
    """Naive built-in table search: score each lake table by the mean, over query
    columns, of its best column-embedding cosine similarity. Descending order."""
    vectors = embed_run_columns(query, lake, provider, mode=mode)
    by_table: dict[str, list[np.ndarray]] = {}
    for cv in vectors:
        by_table.setdefault(cv.column.table, []).append(cv.vec)
    def unit_rows(vecs: list[np.ndarray]) -> np.ndarray:
        m = np.vstack(vecs)
        norms = np.linalg.norm(m, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return m / norms
    q = unit_rows(by_table[query.name])
    scores = []
    for table in lake:
        t = unit_rows(by_table[table.name])
        sim = q @ t.T
        scores.append((table.name, float(sim.max(axis=1).mean())))
    scores.sort(key=lambda s: (-s[1], s[0]))
    return scores
