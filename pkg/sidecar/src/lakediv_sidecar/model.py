"""Tuple encoder: token bag -> dropout -> two linear layers -> fixed-dim embedding.

The default base encoder is a trainable hashed-token embedding bag (no model
hub needed at this scale); any base that maps token ids to a pooled vector can
be swapped in. Each side of a pair is encoded independently.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
from torch import nn

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass
class FineTuneConfig:
    base_encoder: str = "hashed-bag"
    embedding_dim: int = 768
    hidden_dim: int = 768
    base_width: int = 256
    vocab_buckets: int = 8192
    dropout: float = 0.1
    max_epochs: int = 100
    patience: int = 10
    learning_rate: float = 2e-5
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.patience < self.max_epochs:
            raise ValueError(f"patience {self.patience} must be < max_epochs {self.max_epochs}")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.casefold())


def token_ids(text: str, buckets: int) -> list[int]:
    ids = []
    for tok in tokenize(text):
        digest = hashlib.blake2b(tok.encode("utf-8"), digest_size=8).digest()
        ids.append(int.from_bytes(digest, "little") % buckets)
    return ids


class TupleEncoder(nn.Module):
    """Mean-pooled token embeddings, then dropout and two linear layers."""

    def __init__(self, config: FineTuneConfig):
        super().__init__()
        self.config = config
        self.bag = nn.EmbeddingBag(config.vocab_buckets, config.base_width, mode="mean")
        self.dropout = nn.Dropout(config.dropout)
        self.linear1 = nn.Linear(config.base_width, config.hidden_dim)
        self.linear2 = nn.Linear(config.hidden_dim, config.embedding_dim)

    def forward(self, flat_ids: torch.Tensor, offsets: torch.Tensor) -> torch.Tensor:
        pooled = self.bag(flat_ids, offsets)
        return self.linear2(self.linear1(self.dropout(pooled)))

    def encode_texts(self, texts: list[str]) -> torch.Tensor:
        """Embed serialized tuples (eval mode, no gradient)."""
        self.eval()
        with torch.no_grad():
            flat, offsets = batch_token_ids(texts, self.config.vocab_buckets)
            return self.forward(flat, offsets)


def batch_token_ids(texts: list[str], buckets: int) -> tuple[torch.Tensor, torch.Tensor]:
    flat: list[int] = []
    offsets: list[int] = []
    for text in texts:
        offsets.append(len(flat))
        ids = token_ids(text, buckets)
        if not ids:
            # empty bags would pool to NaN-free zeros; bucket 0 keeps them defined
            ids = [0]
        flat.extend(ids)
    return torch.tensor(flat, dtype=torch.long), torch.tensor(offsets, dtype=torch.long)


def save_model(model: TupleEncoder, path: str | Path) -> None:
    torch.save({"config": asdict(model.config), "state_dict": model.state_dict()}, path)


def load_model(path: str | Path) -> TupleEncoder:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    model = TupleEncoder(FineTuneConfig(**payload["config"]))
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model
