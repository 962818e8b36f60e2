"""Fine-tuning loop: cosine embedding loss over tuple pairs, early stopping on
validation loss (patience-bounded), fully seeded for CPU reproducibility."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .data import PairDataset, PairRecord
from .model import FineTuneConfig, TupleEncoder, batch_token_ids


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainingLog:
    epochs: list[dict] = field(default_factory=list)
    stopped_early: bool = False
    best_epoch: int = -1
    best_val_loss: float = math.inf

    def as_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "stopped_early": self.stopped_early,
            "best_epoch": self.best_epoch,
            "best_val_loss": self.best_val_loss,
        }


def _batches(records: list[PairRecord], batch_size: int, rng: np.random.Generator | None):
    order = np.arange(len(records))
    if rng is not None:
        order = rng.permutation(order)
    for start in range(0, len(order), batch_size):
        yield [records[i] for i in order[start : start + batch_size]]


def _pair_loss(model: TupleEncoder, batch: list[PairRecord], loss_fn) -> torch.Tensor:
    # each side is encoded independently, one after the other
    flat_a, off_a = batch_token_ids([r.a for r in batch], model.config.vocab_buckets)
    flat_b, off_b = batch_token_ids([r.b for r in batch], model.config.vocab_buckets)
    e_a = model(flat_a, off_a)
    e_b = model(flat_b, off_b)
    target = torch.tensor([1.0 if r.label == 1 else -1.0 for r in batch])
    return loss_fn(e_a, e_b, target)


def evaluate_loss(model: TupleEncoder, records: list[PairRecord], loss_fn=None) -> float:
    if not records:
        raise ValueError("no records to evaluate")
    loss_fn = loss_fn or nn.CosineEmbeddingLoss(margin=0.0)
    model.eval()
    total, count = 0.0, 0
    with torch.no_grad():
        for batch in _batches(records, 256, rng=None):
            total += float(_pair_loss(model, batch, loss_fn)) * len(batch)
            count += len(batch)
    return total / count


def train(dataset: PairDataset, config: FineTuneConfig) -> tuple[TupleEncoder, TrainingLog]:
    """Train the encoder until validation loss stops improving.

    Stops after ``patience`` epochs without improvement or at ``max_epochs``;
    the best-validation weights are restored before returning. NaN loss aborts.
    """
    train_recs = dataset.split("train")
    val_recs = dataset.split("validation")
    if not train_recs or not val_recs:
        raise ValueError("dataset needs non-empty train and validation splits")
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    model = TupleEncoder(config)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    loss_fn = nn.CosineEmbeddingLoss(margin=0.0)
    log = TrainingLog()
    best_state = {k: v.clone() for k, v in model.state_dict().items()}
    since_best = 0
    for epoch in range(config.max_epochs):
        model.train()
        total, count = 0.0, 0
        for batch in _batches(train_recs, config.batch_size, rng):
            optimizer.zero_grad()
            loss = _pair_loss(model, batch, loss_fn)
            if not torch.isfinite(loss):
                log.epochs.append({"epoch": epoch, "train_loss": float("nan"), "val_loss": None})
                raise TrainingDiverged(f"non-finite training loss at epoch {epoch}")
            loss.backward()
            optimizer.step()
            total += loss.detach().item() * len(batch)
            count += len(batch)
        val_loss = evaluate_loss(model, val_recs, loss_fn)
        log.epochs.append({"epoch": epoch, "train_loss": total / count, "val_loss": val_loss})
        if val_loss < log.best_val_loss - 1e-6:
            log.best_val_loss = val_loss
            log.best_epoch = epoch
            best_state = {k: v.clone() for k, v in model.state_dict().items()}
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                log.stopped_early = True
                break
    model.load_state_dict(best_state)
    model.eval()
    return model, log
