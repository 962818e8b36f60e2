"""Tuple embedding: providers, the embedding matrix, and pair classification.

The built-in provider hashes (header token, value token) pairs into a fixed
256-dim vector: deterministic, dependency-free, and invariant to column order.
Externally trained embeddings plug in through the JSON Lines format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .distances import ZeroVectorError, cosine_distance
from .serialization import SerializedTuple, parse_serialized
from .tables import TupleRef
from .textutil import hashed_vector, l2_normalize, tokenize


class EmbeddingError(ValueError):
    pass


@dataclass
class EmbeddingMatrix:
    """Per-tuple embeddings: row i of ``vectors`` belongs to ``ids[i]``."""

    ids: list[TupleRef]
    vectors: np.ndarray
    provider_tag: str = "unknown"

    def __post_init__(self) -> None:
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2:
            raise EmbeddingError(f"vectors must be 2-D, got shape {self.vectors.shape}")
        if len(self.ids) != self.vectors.shape[0]:
            raise EmbeddingError(
                f"{len(self.ids)} ids vs {self.vectors.shape[0]} vector rows"
            )
        if self.vectors.shape[1] < 1:
            raise EmbeddingError("embedding dimension must be positive")
        if not np.all(np.isfinite(self.vectors)):
            raise EmbeddingError("non-finite embedding values")
        if len({r.key() for r in self.ids}) != len(self.ids):
            raise EmbeddingError("duplicate tuple ids in embedding matrix")

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.ids)

    def subset(self, indices: Sequence[int]) -> "EmbeddingMatrix":
        idx = list(indices)
        return EmbeddingMatrix(
            ids=[self.ids[i] for i in idx],
            vectors=self.vectors[idx],
            provider_tag=self.provider_tag,
        )

    def by_table(self) -> dict[str, list[int]]:
        groups: dict[str, list[int]] = {}
        for i, ref in enumerate(self.ids):
            groups.setdefault(ref.table, []).append(i)
        return groups


class BuiltinTupleProvider:
    """Hashed bag of (header token, value token) pairs, L2-normalized.

    The feature bag ignores column order, so shuffling a tuple's columns
    yields the identical vector.
    """

    def __init__(self, dim: int = 256):
        self.dim = dim
        self.tag = f"builtin-hash-{dim}"

    def embed(self, serialized: SerializedTuple, headers: Sequence[str]) -> np.ndarray:
        segments = parse_serialized(serialized.text, headers)
        features: list[tuple[str, float]] = []
        for header, value in segments:
            h_toks = tokenize(header) or ["_"]
            v_toks = tokenize(value)
            for ht in h_toks:
                for vt in v_toks:
                    features.append((f"{ht}={vt}", 1.0))
        vec = l2_normalize(hashed_vector(features, self.dim))
        if not np.any(vec):
            raise ZeroVectorError(
                f"{serialized.source}: tuple has no embeddable content"
            )
        return vec


class ImportedTupleProvider:
    """Embeddings read from a JSON Lines file keyed by (table, row).

    First line is a header record {"dim": int, "provider": str}; each further
    line is {"table": str, "row": int, "vec": [float]}.
    """

    def __init__(self, path: str | Path):
        path = Path(path)
        self._vecs: dict[tuple[str, int], np.ndarray] = {}
        with path.open(encoding="utf-8") as fh:
            header_line = fh.readline()
            if not header_line.strip():
                raise EmbeddingError(f"{path}: missing header record")
            header = json.loads(header_line)
            self.dim = int(header["dim"])
            self.tag = str(header.get("provider", "imported"))
            for lineno, line in enumerate(fh, start=2):
                if not line.strip():
                    continue
                rec = json.loads(line)
                vec = np.asarray(rec["vec"], dtype=np.float64)
                if vec.shape != (self.dim,):
                    raise EmbeddingError(
                        f"{path}:{lineno}: vector dim {vec.shape} != header dim {self.dim}"
                    )
                self._vecs[(str(rec["table"]), int(rec["row"]))] = vec

    def embed(self, serialized: SerializedTuple, headers: Sequence[str]) -> np.ndarray:
        key = serialized.source.key()
        try:
            return self._vecs[key]
        except KeyError:
            raise EmbeddingError(f"imported embeddings missing id {key}") from None


def embed_tuples(
    serialized: Sequence[SerializedTuple],
    headers: Sequence[str],
    provider,
) -> EmbeddingMatrix:
    """Embed serialized tuples in order; a per-tuple failure aborts the batch
    with the offending id in the error."""
    rows = []
    for st in serialized:
        try:
            rows.append(provider.embed(st, headers))
        except (EmbeddingError, ZeroVectorError) as exc:
            raise EmbeddingError(f"embedding failed for {st.source.key()}: {exc}") from exc
    if not rows:
        vectors = np.zeros((0, getattr(provider, "dim", 1)))
    else:
        vectors = np.vstack(rows)
    return EmbeddingMatrix(
        ids=[st.source for st in serialized],
        vectors=vectors,
        provider_tag=getattr(provider, "tag", "unknown"),
    )


def cosine_embedding_loss(e1: np.ndarray, e2: np.ndarray, label: int) -> float:
    """Pair loss: 1 - cos for positive pairs, max(0, cos) for negative pairs."""
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label}")
    cos = 1.0 - cosine_distance(e1, e2)
    return 1.0 - cos if label == 1 else max(0.0, cos)


def classify_unionable(e1: np.ndarray, e2: np.ndarray, threshold: float = 0.7) -> bool:
    """Unionable iff cosine distance is strictly below the threshold."""
    return cosine_distance(e1, e2) < threshold


def pair_accuracy(predictions: Sequence[bool], labels: Sequence[bool]) -> float:
    """(TP + TN) / (TP + TN + FP + FN) over aligned prediction/label lists."""
    if len(predictions) != len(labels):
        raise ValueError(f"{len(predictions)} predictions vs {len(labels)} labels")
    if not predictions:
        raise ValueError("accuracy undefined for empty lists")
    correct = sum(1 for p, l in zip(predictions, labels) if bool(p) == bool(l))
    return correct / len(predictions)


def write_embeddings_jsonl(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Write the tuple-embedding interchange format (header record first)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"dim": matrix.dim, "provider": matrix.provider_tag}) + "\n")
        for ref, vec in zip(matrix.ids, matrix.vectors):
            rec = {"table": ref.table, "row": ref.row, "vec": [float(x) for x in vec]}
            fh.write(json.dumps(rec) + "\n")


def read_embeddings_jsonl(path: str | Path, ids: Sequence[TupleRef] | None = None) -> EmbeddingMatrix:
    """Read embeddings back; with ``ids`` given, select exactly those rows in order
    and fail naming the first missing id."""
    provider = ImportedTupleProvider(path)
    if ids is None:
        refs = [TupleRef(t, r) for (t, r) in sorted(provider._vecs)]
    else:
        refs = list(ids)
    rows = []
    for ref in refs:
        try:
            rows.append(provider._vecs[ref.key()])
        except KeyError:
            raise EmbeddingError(f"{path}: missing id {ref.key()}") from None
    vectors = np.vstack(rows) if rows else np.zeros((0, provider.dim))
    return EmbeddingMatrix(ids=refs, vectors=vectors, provider_tag=provider.tag)
