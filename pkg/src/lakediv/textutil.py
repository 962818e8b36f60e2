"""Tokenization and deterministic feature hashing shared by the built-in embedders."""

from __future__ import annotations

import hashlib
import re
from collections import Counter
from typing import Iterable

import numpy as np

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Casefold and split into alphanumeric tokens (punctuation dropped)."""
    return _TOKEN_RE.findall(text.casefold())


def stable_hash(feature: str) -> int:
    """Platform-independent 64-bit hash of a feature string."""
    digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def hashed_vector(weighted_features: Iterable[tuple[str, float]], dim: int) -> np.ndarray:
    """Sign-hash weighted features into a dense vector of size ``dim``.

    Features are accumulated in sorted order so that the same multiset of
    features always produces a bitwise-identical vector, regardless of the
    order the caller yields them in.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    totals: Counter[str] = Counter()
    for feature, weight in weighted_features:
        totals[feature] += weight
    vec = np.zeros(dim, dtype=np.float64)
    for feature in sorted(totals):
        h = stable_hash(feature)
        idx = h % dim
        sign = 1.0 if (h >> 63) & 1 else -1.0
        vec[idx] += sign * totals[feature]
    return vec


def l2_normalize(vec: np.ndarray) -> np.ndarray:
    """Return the unit-norm copy of ``vec``; zero vectors are returned unchanged."""
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        return vec.copy()
    return vec / norm
