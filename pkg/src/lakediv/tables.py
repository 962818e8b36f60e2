"""Relational model for query and data-lake tables: loading, validation, normalization.

Tables hold nullable text cells only; no numeric typing is inferred. All
structures are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

NULL_SPELLINGS = frozenset({"", "nan", "NaN", "null", "NULL"})


class TableError(ValueError):
    """Malformed table input: ragged rows, duplicate headers, bad manifest."""


@dataclass(frozen=True)
class ColumnRef:
    """Lake-wide column identity: (table, 0-based index), plus the stored header."""

    table: str
    index: int
    header: str | None = None

    def key(self) -> tuple[str, int]:
        return (self.table, self.index)


@dataclass(frozen=True)
class TupleRef:
    """Lake-wide tuple identity: (table, 0-based row index)."""

    table: str
    row: int

    def key(self) -> tuple[str, int]:
        return (self.table, self.row)


@dataclass(frozen=True)
class Table:
    """Named table with ordered columns and rows of nullable text cells.

    Headers keep their original (trimmed) text; uniqueness is enforced on the
    casefolded form so that e.g. "City" and "city " cannot coexist.
    """

    name: str
    headers: tuple[str, ...]
    rows: tuple[tuple[str | None, ...], ...]
    role: str = "lake"

    def __post_init__(self) -> None:
        normalized = [h.casefold() for h in self.headers]
        if len(set(normalized)) != len(normalized):
            dupes = sorted({h for h in normalized if normalized.count(h) > 1})
            raise TableError(f"table {self.name!r}: duplicate headers after normalization: {dupes}")
        for i, row in enumerate(self.rows):
            if len(row) != len(self.headers):
                raise TableError(
                    f"table {self.name!r}: row {i} has {len(row)} cells, expected {len(self.headers)}"
                )

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_columns(self) -> int:
        return len(self.headers)

    def column_refs(self) -> list[ColumnRef]:
        return [ColumnRef(self.name, i, h) for i, h in enumerate(self.headers)]

    def column_values(self, index: int) -> list[str | None]:
        return [row[index] for row in self.rows]

    def cell(self, row: int, col: int) -> str | None:
        return self.rows[row][col]


def normalize_cell(raw: str) -> str | None:
    """Map the closed set of null spellings to None; other cells pass through."""
    return None if raw in NULL_SPELLINGS else raw


def _normalize_headers(raw_headers: Sequence[str]) -> tuple[str, ...]:
    headers = []
    for i, h in enumerate(raw_headers):
        h = h.strip()
        headers.append(h if h else f"col{i}")
    return tuple(headers)


def load_table(path: str | Path, role: str = "lake", delimiter: str = ",") -> Table:
    """Load an RFC-4180 CSV with a mandatory header row into a Table.

    Cells spelled "", "nan", "NaN", "null", or "NULL" become nulls. Missing
    headers become "col<index>". Ragged rows are rejected rather than padded.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            raw_headers = next(reader)
        except StopIteration:
            raise TableError(f"{path}: empty file, header row required") from None
        headers = _normalize_headers(raw_headers)
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if len(raw) != len(headers):
                raise TableError(
                    f"{path}: ragged row at line {lineno}: {len(raw)} cells, expected {len(headers)}"
                )
            rows.append(tuple(normalize_cell(c) for c in raw))
    return Table(name=path.stem, headers=headers, rows=tuple(rows), role=role)


def save_table(table: Table, path: str | Path, delimiter: str = ",") -> None:
    """Write a Table back to CSV; null cells are written as empty strings."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow(table.headers)
        for row in table.rows:
            writer.writerow(["" if c is None else c for c in row])


def drop_null_columns(table: Table) -> Table:
    """Remove columns whose every cell is null; column order otherwise preserved.

    Idempotent; may return a 0-column table.
    """
    keep = [
        i
        for i in range(table.n_columns)
        if any(row[i] is not None for row in table.rows)
    ]
    if len(keep) == table.n_columns:
        return table
    headers = tuple(table.headers[i] for i in keep)
    rows = tuple(tuple(row[i] for i in keep) for row in table.rows)
    return Table(name=table.name, headers=headers, rows=rows, role=table.role)


@dataclass(frozen=True)
class QueryRejection:
    """Why a query table was rejected, with the offending row count."""

    reason: str
    n_rows: int


def validate_query(table: Table) -> QueryRejection | None:
    """Accept query tables with at least 3 rows; return the rejection otherwise."""
    if table.n_rows >= 3:
        return None
    return QueryRejection(reason="query table needs at least 3 rows", n_rows=table.n_rows)


def _parse_column_ref(obj) -> ColumnRef:
    if isinstance(obj, dict):
        return ColumnRef(str(obj["table"]), int(obj["index"]), obj.get("header"))
    if isinstance(obj, (list, tuple)) and len(obj) >= 2:
        return ColumnRef(str(obj[0]), int(obj[1]), obj[2] if len(obj) > 2 else None)
    raise TableError(f"bad column ref in manifest: {obj!r}")


@dataclass
class BenchmarkManifest:
    """Benchmark description: query/lake table paths, per-query candidate lists,
    and optional column-alignment ground truth as pairs of column refs."""

    query_tables: list[Path]
    lake_tables: list[Path]
    candidates: dict[str, list[str]] = field(default_factory=dict)
    alignment_ground_truth: list[tuple[ColumnRef, ColumnRef]] = field(default_factory=list)
    root: Path = Path(".")

    def lake_by_name(self) -> dict[str, Path]:
        return {p.stem: p for p in self.lake_tables}


def load_manifest(path: str | Path) -> BenchmarkManifest:
    """Load a benchmark manifest JSON; relative paths resolve against its directory."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        raw = json.load(fh)
    root = path.parent
    try:
        query_tables = [root / p for p in raw["query_tables"]]
        lake_tables = [root / p for p in raw["lake_tables"]]
    except KeyError as exc:
        raise TableError(f"{path}: manifest missing key {exc}") from None
    candidates = {str(q): [str(t) for t in ts] for q, ts in raw.get("candidates", {}).items()}
    truth = [
        (_parse_column_ref(a), _parse_column_ref(b))
        for a, b in raw.get("alignment_ground_truth", [])
    ]
    missing = [str(p) for p in [*query_tables, *lake_tables] if not p.exists()]
    if missing:
        raise TableError(f"{path}: manifest references missing tables: {missing}")
    stems = [p.stem for p in [*query_tables, *lake_tables]]
    if len(set(stems)) != len(stems):
        dupes = sorted({s for s in stems if stems.count(s) > 1})
        raise TableError(f"{path}: table names must be unique lake-wide, duplicated: {dupes}")
    return BenchmarkManifest(
        query_tables=query_tables,
        lake_tables=lake_tables,
        candidates=candidates,
        alignment_ground_truth=truth,
        root=root,
    )


def concat_column_text(values: Iterable[str | None]) -> str:
    """Join a column's non-null cells into one text blob (for column-level embedding)."""
    return " ".join(v for v in values if v is not None)
