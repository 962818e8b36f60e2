import json

import pytest

from lakediv_sidecar.data import (
    DatasetError,
    PairDataset,
    PairRecord,
    build_pairs,
    planted_benchmark,
    read_pairs_jsonl,
    read_serialized_export,
    write_pairs_jsonl,
)


@pytest.fixture(scope="module")
def planted():
    serialized, groups = planted_benchmark(seed=0)
    return serialized, groups


@pytest.fixture(scope="module")
def dataset(planted):
    serialized, groups = planted
    return build_pairs(serialized, groups, size=600, seed=1)


def test_labels_follow_unionability_rule(planted, dataset):
    _, groups = planted
    group_of = {t: g for g, tables in groups.items() for t in tables}
    for r in dataset.records:
        same_group = group_of[r.a_table] == group_of[r.b_table]
        assert r.label == int(same_group)


def test_same_table_pairs_are_positive(dataset):
    same_table = [r for r in dataset.records if r.a_table == r.b_table]
    assert same_table, "expected some same-table pairs"
    assert all(r.label == 1 for r in same_table)


def test_splits_balanced_and_ratioed(dataset):
    sizes = {}
    for name in ("train", "validation", "test"):
        recs = dataset.split(name)
        sizes[name] = len(recs)
        assert sum(r.label for r in recs) * 2 == len(recs)
    total = sum(sizes.values())
    assert sizes["train"] / total == pytest.approx(0.70, abs=0.02)
    assert sizes["validation"] / total == pytest.approx(0.15, abs=0.02)
    assert sizes["test"] / total == pytest.approx(0.15, abs=0.02)


def test_no_table_crosses_splits(dataset):
    split_of = {}
    for r in dataset.records:
        for t in (r.a_table, r.b_table):
            assert split_of.setdefault(t, r.split) == r.split
    dataset.check_invariants()


def test_leakage_detected():
    bad = PairDataset(
        records=[
            PairRecord("x", "y", 1, "train", "t1", "t1"),
            PairRecord("x", "z", 0, "train", "t1", "t2"),
            PairRecord("x", "y", 1, "test", "t1", "t1"),
            PairRecord("x", "z", 0, "test", "t1", "t3"),
        ]
    )
    with pytest.raises(DatasetError, match="splits"):
        bad.check_invariants()


def test_oversize_request_rejected(planted):
    serialized, groups = planted
    with pytest.raises(DatasetError, match="distinct pairs"):
        build_pairs(serialized, groups, size=10_000_000, seed=0)


def test_too_few_tables_rejected():
    serialized = {"t0": ["[CLS] a b [SEP]"], "t1": ["[CLS] c d [SEP]"]}
    groups = {"g0": ["t0"], "g1": ["t1"]}
    with pytest.raises(DatasetError, match="at least 6 tables"):
        build_pairs(serialized, groups, size=10, seed=0)


def test_seed_reproducibility(planted):
    serialized, groups = planted
    a = build_pairs(serialized, groups, size=200, seed=9)
    b = build_pairs(serialized, groups, size=200, seed=9)
    assert a.records == b.records


def test_pairs_jsonl_roundtrip(dataset, tmp_path):
    path = tmp_path / "pairs.jsonl"
    write_pairs_jsonl(dataset, path)
    back = read_pairs_jsonl(path)
    assert back.records == dataset.records


def test_read_serialized_export(tmp_path):
    (tmp_path / "ser.txt").write_text("[CLS] a 1 [SEP]\n[CLS] a 2 [SEP]\n[CLS] b 3 [SEP]\n")
    (tmp_path / "ser.index.json").write_text(
        json.dumps(
            [
                {"line": 0, "table": "t", "row": 0},
                {"line": 1, "table": "t", "row": 1},
                {"line": 2, "table": "u", "row": 0},
            ]
        )
    )
    by_table = read_serialized_export(tmp_path / "ser.txt", tmp_path / "ser.index.json")
    assert by_table == {"t": ["[CLS] a 1 [SEP]", "[CLS] a 2 [SEP]"], "u": ["[CLS] b 3 [SEP]"]}


def test_read_serialized_export_length_mismatch(tmp_path):
    (tmp_path / "ser.txt").write_text("[CLS] a 1 [SEP]\n")
    (tmp_path / "ser.index.json").write_text("[]")
    with pytest.raises(DatasetError, match="index entries"):
        read_serialized_export(tmp_path / "ser.txt", tmp_path / "ser.index.json")
