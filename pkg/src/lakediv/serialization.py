"""Tuple-to-text serialization: "[CLS] h1 v1 [SEP] h2 v2 [SEP] ... [SEP]".

Null cells are omitted entirely (header and value). Cell or header text that
contains the literal delimiter tokens is backslash-escaped so the grammar
stays parseable.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .tables import TupleRef

CLS = "[CLS]"
SEP = "[SEP]"

_UNESCAPE_RE = re.compile(r"\\(\\|\[CLS\]|\[SEP\])")


class SerializationError(ValueError):
    pass


def escape_text(text: str) -> str:
    """Escape backslashes and literal [CLS]/[SEP] so they cannot act as delimiters."""
    return (
        text.replace("\\", "\\\\").replace(CLS, "\\" + CLS).replace(SEP, "\\" + SEP)
    )


def unescape_text(text: str) -> str:
    return _UNESCAPE_RE.sub(lambda m: m.group(1), text)


@dataclass(frozen=True)
class SerializedTuple:
    """One serialized tuple: delimiter-framed text plus its source tuple id."""

    text: str
    source: TupleRef
    all_null: bool = False


def serialize_tuple(
    cells: Sequence[str | None],
    headers: Sequence[str],
    source: TupleRef,
) -> SerializedTuple:
    """Serialize one tuple under the given header order, skipping null cells.

    An all-null tuple serializes to "[CLS] [SEP]" and is flagged, since it
    carries no content to embed.
    """
    if len(cells) != len(headers):
        raise SerializationError(f"{source}: {len(cells)} cells vs {len(headers)} headers")
    segments = [
        f"{escape_text(h)} {escape_text(v)}"
        for h, v in zip(headers, cells)
        if v is not None
    ]
    if not segments:
        return SerializedTuple(text=f"{CLS} {SEP}", source=source, all_null=True)
    text = f"{CLS} " + f" {SEP} ".join(segments) + f" {SEP}"
    return SerializedTuple(text=text, source=source)


def parse_serialized(text: str, headers: Sequence[str]) -> list[tuple[str, str]]:
    """Recover the (header, value) segments of a serialized tuple.

    ``headers`` is the schema order the tuple was serialized under; segments
    must appear as an in-order subsequence of it (null cells were skipped).
    """
    if text == f"{CLS} {SEP}":
        return []
    if not text.startswith(CLS + " ") or not text.endswith(" " + SEP):
        raise SerializationError(f"not a serialized tuple: {text[:50]!r}")
    body = text[len(CLS) + 1 : -(len(SEP) + 1)]
    segments = body.split(f" {SEP} ")
    out: list[tuple[str, str]] = []
    pos = 0
    for segment in segments:
        matched = None
        for j in range(pos, len(headers)):
            esc = escape_text(headers[j])
            if segment == esc:
                matched = (j, "")
                break
            if segment.startswith(esc + " "):
                matched = (j, segment[len(esc) + 1 :])
                break
        if matched is None:
            raise SerializationError(
                f"segment {segment[:50]!r} does not start with any remaining schema header"
            )
        j, value = matched
        out.append((headers[j], unescape_text(value)))
        pos = j + 1
    return out


def write_serialized_file(
    serialized: Sequence[SerializedTuple],
    text_path: str | Path,
    index_path: str | Path,
) -> None:
    """Write one Ser(t) line per tuple plus a JSON index mapping line -> tuple id."""
    text_path, index_path = Path(text_path), Path(index_path)
    with text_path.open("w", encoding="utf-8") as fh:
        for st in serialized:
            if "\n" in st.text or "\r" in st.text:
                raise SerializationError(
                    f"{st.source}: embedded newline cannot be written to the line-oriented export"
                )
            fh.write(st.text + "\n")
    index = [{"line": i, "table": st.source.table, "row": st.source.row} for i, st in enumerate(serialized)]
    with index_path.open("w", encoding="utf-8") as fh:
        json.dump(index, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_serialized_file(
    text_path: str | Path, index_path: str | Path
) -> list[SerializedTuple]:
    """Read a Ser(t) line file and its index back into SerializedTuples."""
    text_path, index_path = Path(text_path), Path(index_path)
    lines = text_path.read_text(encoding="utf-8").splitlines()
    with index_path.open(encoding="utf-8") as fh:
        index = json.load(fh)
    if len(index) != len(lines):
        raise SerializationError(
            f"{index_path}: index has {len(index)} entries but {text_path} has {len(lines)} lines"
        )
    out = []
    for entry in index:
        line = lines[entry["line"]]
        out.append(
            SerializedTuple(
                text=line,
                source=TupleRef(entry["table"], int(entry["row"])),
                all_null=line == f"{CLS} {SEP}",
            )
        )
    return out
