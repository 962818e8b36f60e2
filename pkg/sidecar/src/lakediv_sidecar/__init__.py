"""Tuple-encoder fine-tuning sidecar.

Consumes the core's serialized-tuple export (line file + index), trains a
pair encoder with cosine embedding loss, and emits embeddings in the JSONL
interchange format the core imports. File formats are the only coupling.
"""

from .data import PairDataset, PairRecord, build_pairs, planted_benchmark
from .evaluate import column_shuffle_report, eval_accuracy
from .export import export_embeddings
from .model import FineTuneConfig, TupleEncoder, load_model, save_model
from .train import TrainingLog, train

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
