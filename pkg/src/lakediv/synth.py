"""Synthetic instance generators for experiments and acceptance checks.

Real benchmark lakes are large and licensed; these generators reproduce the
two properties the experiments need: embedding pools with controllable
duplication (Gaussian mixtures), and base tables split into lake tables with
known column alignments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .alignment import PairSet, truth_pairs
from .embedding import EmbeddingMatrix
from .tables import ColumnRef, Table, TupleRef, save_table


@dataclass
class MixtureInstance:
    """One synthetic query: query-tuple embeddings plus a lake-tuple pool."""

    name: str
    e_q: EmbeddingMatrix
    e_t: EmbeddingMatrix


def mixture_instance(
    n_query: int = 5,
    n_tuples: int = 500,
    dim: int = 16,
    n_modes: int = 25,
    duplicate_fraction: float = 0.6,
    spread: float = 0.05,
    n_tables: int = 4,
    seed: int = 0,
    name: str = "synth",
) -> MixtureInstance:
    """Gaussian-mixture embedding instance with a controllable fraction of
    lake tuples that near-duplicate query tuples.

    Query tuples sit on the first ``n_query`` mode centers; duplicate lake
    tuples jitter tightly around them; the rest spread over the remaining
    modes. Lake tuples are split round-robin across ``n_tables`` tables.
    """
    if n_modes < n_query + 1:
        raise ValueError(f"need n_modes > n_query, got {n_modes} vs {n_query}")
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(n_modes, dim))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    q_vecs = centers[:n_query] + spread * 0.2 * rng.normal(size=(n_query, dim))
    n_dup = int(round(duplicate_fraction * n_tuples))
    rows = []
    for _ in range(n_dup):
        q = int(rng.integers(n_query))
        rows.append(q_vecs[q] + spread * 0.1 * rng.normal(size=dim))
    fresh_modes = np.arange(n_query, n_modes)
    for _ in range(n_tuples - n_dup):
        m = int(rng.choice(fresh_modes))
        rows.append(centers[m] + spread * rng.normal(size=dim))
    order = rng.permutation(n_tuples)
    vectors = np.vstack(rows)[order]
    ids = [TupleRef(f"{name}_t{i % n_tables}", i // n_tables) for i in range(n_tuples)]
    e_q = EmbeddingMatrix(
        ids=[TupleRef(f"{name}_query", i) for i in range(n_query)],
        vectors=q_vecs,
        provider_tag="synthetic",
    )
    e_t = EmbeddingMatrix(ids=ids, vectors=vectors, provider_tag="synthetic")
    return MixtureInstance(name=name, e_q=e_q, e_t=e_t)


@dataclass
class AlignmentCase:
    """One alignment run: a query table, its lake tables, and true pairs."""

    query: Table
    lake: list[Table]
    truth: PairSet


def _sample_cell(rng: np.random.Generator, vocab: list[str], noise_pool: list[str], noise: float, width: int) -> str:
    toks = []
    for _ in range(width):
        if noise > 0 and rng.random() < noise:
            toks.append(noise_pool[int(rng.integers(len(noise_pool)))])
        else:
            toks.append(vocab[int(rng.integers(len(vocab)))])
    return " ".join(toks)


def alignment_benchmark(
    n_base: int = 5,
    tables_per_base: int = 4,
    n_concepts: int = 4,
    rows_per_table: int = 30,
    vocab_per_concept: int = 24,
    cell_width: int = 2,
    noise: float = 0.0,
    seed: int = 0,
) -> list[AlignmentCase]:
    """Build base tables with disjoint per-concept vocabularies, then split each
    into lake tables (one concept dropped per table, columns shuffled, headers
    scrambled) so the true alignment is known by construction."""
    rng = np.random.default_rng(seed)
    noise_pool = [f"zz{i}" for i in range(50)]
    cases = []
    for b in range(n_base):
        vocab = {
            j: [f"b{b}c{j}w{i}" for i in range(vocab_per_concept)]
            for j in range(n_concepts)
        }
        q_name = f"query{b}"
        q_rows = tuple(
            tuple(
                _sample_cell(rng, vocab[j], noise_pool, noise, cell_width)
                for j in range(n_concepts)
            )
            for _ in range(rows_per_table)
        )
        query = Table(
            name=q_name,
            headers=tuple(f"attr{j}" for j in range(n_concepts)),
            rows=q_rows,
            role="query",
        )
        lake: list[Table] = []
        concept_columns: dict[int, list[ColumnRef]] = {j: [] for j in range(n_concepts)}
        for t in range(tables_per_base):
            name = f"lake{b}_{t}"
            dropped = t % n_concepts
            kept = [j for j in range(n_concepts) if j != dropped]
            order = list(rng.permutation(kept))
            rows = tuple(
                tuple(
                    _sample_cell(rng, vocab[j], noise_pool, noise, cell_width)
                    for j in order
                )
                for _ in range(rows_per_table)
            )
            headers = tuple(f"x{t}{i}" for i in range(len(order)))
            lake.append(Table(name=name, headers=headers, rows=rows))
            for i, j in enumerate(order):
                concept_columns[j].append(ColumnRef(name, i, headers[i]))
        pairs = []
        for j in range(n_concepts):
            anchor = ColumnRef(q_name, j, query.headers[j])
            members = concept_columns[j]
            if not members:
                pairs.append((anchor, anchor))
                continue
            for m in members:
                pairs.append((anchor, m))
            for a in range(len(members)):
                for c in range(a + 1, len(members)):
                    pairs.append((members[a], members[c]))
        cases.append(AlignmentCase(query=query, lake=lake, truth=truth_pairs(pairs)))
    return cases


def write_benchmark(cases: Sequence[AlignmentCase], out_dir: str | Path) -> Path:
    """Materialize alignment cases as CSVs plus a manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    query_paths, lake_paths, candidates, truth = [], [], {}, []
    for case in cases:
        qp = out_dir / f"{case.query.name}.csv"
        save_table(case.query, qp)
        query_paths.append(qp.name)
        candidates[case.query.name] = [t.name for t in case.lake]
        for t in case.lake:
            tp = out_dir / f"{t.name}.csv"
            save_table(t, tp)
            lake_paths.append(tp.name)
        for a, b in sorted(case.truth):
            truth.append([{"table": a[0], "index": a[1]}, {"table": b[0], "index": b[1]}])
    manifest = {
        "query_tables": query_paths,
        "lake_tables": lake_paths,
        "candidates": candidates,
        "alignment_ground_truth": truth,
    }
    path = out_dir / "manifest.json"
    with path.open("w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path
