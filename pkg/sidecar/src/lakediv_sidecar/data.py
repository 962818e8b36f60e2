"""Pair datasets for fine-tuning: unionable (label 1) vs non-unionable (0).

Two tuples are unionable when they come from the same table or from tables in
the same unionability group. Splits are leakage-free at table granularity (a
table's tuples live in exactly one split), ratio 70:15:15, with balanced
labels per split. Pairs never cross splits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SPLITS = ("train", "validation", "test")
SPLIT_RATIO = {"train": 0.70, "validation": 0.15, "test": 0.15}


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class PairRecord:
    a: str
    b: str
    label: int
    split: str
    a_table: str = ""
    b_table: str = ""


@dataclass
class PairDataset:
    records: list[PairRecord] = field(default_factory=list)

    def split(self, name: str) -> list[PairRecord]:
        if name not in SPLITS:
            raise DatasetError(f"unknown split {name!r}; use one of {SPLITS}")
        return [r for r in self.records if r.split == name]

    def check_invariants(self) -> None:
        split_of: dict[str, str] = {}
        for r in self.records:
            for table in (r.a_table, r.b_table):
                if not table:
                    continue
                if split_of.setdefault(table, r.split) != r.split:
                    raise DatasetError(
                        f"table {table!r} appears in splits {split_of[table]!r} and {r.split!r}"
                    )
        for name in SPLITS:
            recs = self.split(name)
            if recs:
                pos = sum(r.label for r in recs)
                if pos * 2 != len(recs):
                    raise DatasetError(f"split {name!r} unbalanced: {pos}/{len(recs)} positive")


def read_serialized_export(text_path: str | Path, index_path: str | Path) -> dict[str, list[str]]:
    """Load a serialized-tuple export (line file + index) grouped by table."""
    lines = Path(text_path).read_text(encoding="utf-8").splitlines()
    with Path(index_path).open(encoding="utf-8") as fh:
        index = json.load(fh)
    if len(index) != len(lines):
        raise DatasetError(f"{index_path}: {len(index)} index entries vs {len(lines)} lines")
    by_table: dict[str, list[str]] = {}
    for entry in index:
        by_table.setdefault(str(entry["table"]), []).append(lines[int(entry["line"])])
    return by_table


def read_groups(path: str | Path) -> dict[str, list[str]]:
    with Path(path).open(encoding="utf-8") as fh:
        doc = json.load(fh)
    groups = doc["groups"] if "groups" in doc else doc
    return {str(g): [str(t) for t in tables] for g, tables in groups.items()}


def _split_tables(
    tables: list[str], group_of: dict[str, str], rng: np.random.Generator
) -> dict[str, str]:
    """Assign whole tables to splits (~70:15:15), keeping at least two distinct
    groups per split so negative pairs exist."""
    if len(tables) < 6:
        raise DatasetError(f"need at least 6 tables to split 70:15:15, got {len(tables)}")
    for attempt in range(50):
        order = list(rng.permutation(sorted(tables)))
        n = len(order)
        n_val = max(2, round(SPLIT_RATIO["validation"] * n))
        n_test = max(2, round(SPLIT_RATIO["test"] * n))
        assignment = {}
        for t in order[: n - n_val - n_test]:
            assignment[t] = "train"
        for t in order[n - n_val - n_test : n - n_test]:
            assignment[t] = "validation"
        for t in order[n - n_test :]:
            assignment[t] = "test"
        ok = all(
            len({group_of[t] for t in order if assignment[t] == s}) >= 2 for s in SPLITS
        )
        if ok:
            return assignment
    raise DatasetError("insufficient tables for balance: could not give every split two groups")


def _pair_budget(split_tables: list[str], group_of, counts) -> tuple[int, int]:
    pos = 0
    neg = 0
    for i, ta in enumerate(split_tables):
        na = counts[ta]
        pos += na * (na - 1) // 2
        for tb in split_tables[i + 1 :]:
            nb = counts[tb]
            if group_of[ta] == group_of[tb]:
                pos += na * nb
            else:
                neg += na * nb
    return pos, neg


def build_pairs(
    serialized_by_table: dict[str, list[str]],
    groups: dict[str, list[str]],
    size: int,
    seed: int = 0,
) -> PairDataset:
    """Sample a balanced pair dataset of ``size`` records.

    Positive pairs come from one table or two same-group tables of a split;
    negatives from two different-group tables of the same split. Raises when a
    split cannot supply the requested number of distinct pairs.
    """
    if size < 2:
        raise DatasetError(f"size must be >= 2, got {size}")
    rng = np.random.default_rng(seed)
    group_of = {t: g for g, tables in groups.items() for t in tables}
    unknown = [t for t in serialized_by_table if t not in group_of]
    if unknown:
        raise DatasetError(f"tables missing from the unionability groups: {sorted(unknown)}")
    tables = sorted(t for t in serialized_by_table if serialized_by_table[t])
    counts = {t: len(serialized_by_table[t]) for t in tables}
    assignment = _split_tables(tables, group_of, rng)
    records: list[PairRecord] = []
    for split_name in SPLITS:
        split_tabs = [t for t in tables if assignment[t] == split_name]
        want = round(size * SPLIT_RATIO[split_name] / 2)
        if want == 0:
            continue
        pos_avail, neg_avail = _pair_budget(split_tabs, group_of, counts)
        if pos_avail < want or neg_avail < want:
            raise DatasetError(
                f"split {split_name!r} can provide {pos_avail} positive / {neg_avail} negative "
                f"distinct pairs, need {want} of each"
            )
        records.extend(
            _sample_pairs(split_tabs, serialized_by_table, group_of, want, split_name, rng)
        )
    dataset = PairDataset(records=records)
    dataset.check_invariants()
    return dataset


def _sample_pairs(
    split_tabs: list[str],
    serialized_by_table: dict[str, list[str]],
    group_of: dict[str, str],
    want: int,
    split_name: str,
    rng: np.random.Generator,
) -> list[PairRecord]:
    weights = np.array([len(serialized_by_table[t]) for t in split_tabs], dtype=float)
    probs = weights / weights.sum()
    seen: set[tuple] = set()
    out: list[PairRecord] = []

    def draw() -> tuple[str, int]:
        t = split_tabs[int(rng.choice(len(split_tabs), p=probs))]
        return t, int(rng.integers(len(serialized_by_table[t])))

    def attempt(label: int) -> None:
        guard = 0
        while sum(1 for r in out if r.label == label) < want:
            guard += 1
            if guard > 400 * want + 2000:
                raise DatasetError(
                    f"split {split_name!r}: could not sample enough label-{label} pairs"
                )
            (ta, i), (tb, j) = draw(), draw()
            if (ta, i) == (tb, j):
                continue
            same_group = group_of[ta] == group_of[tb]
            if bool(label) != same_group:
                continue
            key = tuple(sorted([(ta, i), (tb, j)]))
            if key in seen:
                continue
            seen.add(key)
            out.append(
                PairRecord(
                    a=serialized_by_table[ta][i],
                    b=serialized_by_table[tb][j],
                    label=label,
                    split=split_name,
                    a_table=ta,
                    b_table=tb,
                )
            )

    attempt(1)
    attempt(0)
    return out


def write_pairs_jsonl(dataset: PairDataset, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in dataset.records:
            fh.write(
                json.dumps(
                    {
                        "a": r.a, "b": r.b, "label": r.label, "split": r.split,
                        "a_table": r.a_table, "b_table": r.b_table,
                    }
                )
                + "\n"
            )


def read_pairs_jsonl(path: str | Path) -> PairDataset:
    records = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            doc = json.loads(line)
            records.append(
                PairRecord(
                    doc["a"], doc["b"], int(doc["label"]), doc["split"],
                    doc.get("a_table", ""), doc.get("b_table", ""),
                )
            )
    return PairDataset(records=records)


def planted_benchmark(
    n_groups: int = 10,
    tables_per_group: int = 3,
    tuples_per_table: int = 30,
    group_vocab: int = 20,
    filler_vocab: int = 10,
    group_tokens_per_cell: int = 2,
    filler_tokens_per_cell: int = 1,
    seed: int = 0,
) -> tuple[dict[str, list[str]], dict[str, list[str]]]:
    """Synthetic serialized tuples with planted separable structure.

    Every tuple shares the same headers and a small filler vocabulary, so an
    untrained encoder sees all pairs as similar; which group-specific tokens a
    tuple carries is the only unionability signal, and it is learnable.
    """
    rng = np.random.default_rng(seed)
    headers = ("name", "kind", "note")
    serialized: dict[str, list[str]] = {}
    groups: dict[str, list[str]] = {}
    fillers = [f"common{i}" for i in range(filler_vocab)]
    for g in range(n_groups):
        gid = f"group{g}"
        vocab = [f"g{g}tok{i}" for i in range(group_vocab)]
        groups[gid] = []
        for t in range(tables_per_group):
            table = f"{gid}_table{t}"
            groups[gid].append(table)
            lines = []
            for _ in range(tuples_per_table):
                cells = []
                for h in headers:
                    toks = [
                        vocab[int(rng.integers(group_vocab))]
                        for _ in range(group_tokens_per_cell)
                    ] + [
                        fillers[int(rng.integers(filler_vocab))]
                        for _ in range(filler_tokens_per_cell)
                    ]
                    cells.append(f"{h} {' '.join(toks)}")
                lines.append("[CLS] " + " [SEP] ".join(cells) + " [SEP]")
            serialized[table] = lines
    return serialized, groups
