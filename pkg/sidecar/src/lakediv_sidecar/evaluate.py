"""Pair classification accuracy and the column-shuffle robustness report."""

from __future__ import annotations

import numpy as np
import torch

from .data import PairRecord
from .model import TupleEncoder


def _cosine(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    return torch.nn.functional.cosine_similarity(a, b, dim=1)


def eval_accuracy(
    model: TupleEncoder, records: list[PairRecord], threshold: float = 0.7
) -> float:
    """Accuracy of `cosine distance < threshold => unionable` over pair records."""
    if not records:
        raise ValueError("no records to evaluate")
    correct = 0
    for start in range(0, len(records), 256):
        batch = records[start : start + 256]
        e_a = model.encode_texts([r.a for r in batch])
        e_b = model.encode_texts([r.b for r in batch])
        distance = 1.0 - _cosine(e_a, e_b)
        predicted = distance < threshold
        labels = torch.tensor([bool(r.label) for r in batch])
        correct += int((predicted == labels).sum())
    return correct / len(records)


def _shuffle_segments(line: str, rng: np.random.Generator) -> str:
    if line == "[CLS] [SEP]":
        return line
    body = line[len("[CLS] ") : -len(" [SEP]")]
    segments = body.split(" [SEP] ")
    order = rng.permutation(len(segments))
    return "[CLS] " + " [SEP] ".join(segments[i] for i in order) + " [SEP]"


def column_shuffle_report(
    model: TupleEncoder, lines: list[str], seed: int = 0
) -> dict[str, float]:
    """Mean/stddev cosine similarity between each tuple and a column-shuffled
    copy of itself (a robustness report, not a gate)."""
    rng = np.random.default_rng(seed)
    shuffled = [_shuffle_segments(line, rng) for line in lines]
    sims = []
    for start in range(0, len(lines), 256):
        e_a = model.encode_texts(lines[start : start + 256])
        e_b = model.encode_texts(shuffled[start : start + 256])
        sims.extend(float(s) for s in _cosine(e_a, e_b))
    return {
        "mean_similarity": float(np.mean(sims)),
        "std_similarity": float(np.std(sims)),
        "n": len(sims),
    }
