"""Embedding export: serialized-tuple lines in, interchange JSONL out.

The output format matches the core importer: a header record
{"dim", "provider"} followed by {"table", "row", "vec"} records.
"""

from __future__ import annotations

import json
from pathlib import Path

import torch

from .model import TupleEncoder


class ExportError(ValueError):
    pass


def _validate_line(line: str, lineno: int) -> None:
    if line == "[CLS] [SEP]":
        return
    if not line.startswith("[CLS] ") or not line.endswith(" [SEP]"):
        raise ExportError(f"line {lineno}: not a serialized tuple: {line[:60]!r}")


def export_embeddings(
    model: TupleEncoder,
    text_path: str | Path,
    index_path: str | Path,
    out_path: str | Path,
    batch_size: int = 256,
) -> int:
    """Embed every line of a serialized-tuple export; returns the record count."""
    text_path, index_path, out_path = Path(text_path), Path(index_path), Path(out_path)
    lines = text_path.read_text(encoding="utf-8").splitlines()
    for i, line in enumerate(lines, start=1):
        _validate_line(line, i)
    with index_path.open(encoding="utf-8") as fh:
        index = json.load(fh)
    if len(index) != len(lines):
        raise ExportError(f"{index_path}: {len(index)} index entries vs {len(lines)} lines")
    provider_tag = f"sidecar-{model.config.base_encoder}-{model.config.embedding_dim}"
    with out_path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"dim": model.config.embedding_dim, "provider": provider_tag}) + "\n")
        for start in range(0, len(lines), batch_size):
            batch = lines[start : start + batch_size]
            vectors = model.encode_texts(batch)
            if not torch.all(torch.isfinite(vectors)):
                raise ExportError(f"non-finite embedding near line {start + 1}")
            norms = vectors.norm(dim=1)
            if torch.any(norms == 0.0):
                bad = start + int(torch.argmin(norms)) + 1
                raise ExportError(f"zero-norm embedding at line {bad}")
            for offset, vec in enumerate(vectors):
                entry = index[start + offset]
                rec = {
                    "table": str(entry["table"]),
                    "row": int(entry["row"]),
                    "vec": [float(x) for x in vec],
                }
                fh.write(json.dumps(rec) + "\n")
    return len(lines)
