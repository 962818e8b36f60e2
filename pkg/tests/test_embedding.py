import numpy as np
import pytest

from lakediv.embedding import (
    BuiltinTupleProvider,
    EmbeddingError,
    EmbeddingMatrix,
    ImportedTupleProvider,
    classify_unionable,
    cosine_embedding_loss,
    embed_tuples,
    pair_accuracy,
    read_embeddings_jsonl,
    write_embeddings_jsonl,
)
from lakediv.distances import cosine_distance
from lakediv.serialization import serialize_tuple
from lakediv.tables import TupleRef

SCHEMA = ("Park Name", "Supervisor", "City", "Country")


def ser(cells, row=0, table="t"):
    return serialize_tuple(cells, SCHEMA, TupleRef(table, row))


def test_builtin_provider_deterministic():
    p = BuiltinTupleProvider()
    a = p.embed(ser(("River Park", "Vera", "Fresno", "USA")), SCHEMA)
    b = p.embed(ser(("River Park", "Vera", "Fresno", "USA")), SCHEMA)
    assert np.array_equal(a, b)
    assert a.shape == (256,)
    assert np.isclose(np.linalg.norm(a), 1.0)


def test_builtin_provider_column_order_invariant_exactly():
    p = BuiltinTupleProvider()
    original = p.embed(ser(("River Park", "Vera", "Fresno", "USA")), SCHEMA)
    shuffled_schema = ("Country", "City", "Park Name", "Supervisor")
    shuffled = p.embed(
        serialize_tuple(("USA", "Fresno", "River Park", "Vera"), shuffled_schema, TupleRef("t", 1)),
        shuffled_schema,
    )
    assert np.array_equal(original, shuffled)
    assert cosine_distance(original, shuffled) == 0.0


def test_builtin_provider_distinguishes_content():
    p = BuiltinTupleProvider()
    a = p.embed(ser(("River Park", "Vera", "Fresno", "USA")), SCHEMA)
    b = p.embed(ser(("Chippewa Park", None, "Brandon", "USA"), row=1), SCHEMA)
    assert cosine_distance(a, b) > 0.1


def test_builtin_provider_rejects_contentless_tuple():
    p = BuiltinTupleProvider()
    with pytest.raises(Exception, match="no embeddable content"):
        p.embed(ser((None, None, None, None)), SCHEMA)


def test_embed_tuples_order_and_tag():
    p = BuiltinTupleProvider()
    tuples = [ser(("a", "b", "c", "d"), row=i) for i in range(3)]
    m = embed_tuples(tuples, SCHEMA, p)
    assert m.ids == [TupleRef("t", i) for i in range(3)]
    assert np.array_equal(m.vectors[0], m.vectors[1])
    assert m.provider_tag == "builtin-hash-256"


def test_embed_tuples_error_names_offending_id():
    p = BuiltinTupleProvider()
    tuples = [ser(("a", "b", "c", "d"), row=0), ser((None, None, None, None), row=1)]
    with pytest.raises(EmbeddingError, match=r"\('t', 1\)"):
        embed_tuples(tuples, SCHEMA, p)


def test_embedding_matrix_validation():
    ids = [TupleRef("t", 0), TupleRef("t", 1)]
    with pytest.raises(EmbeddingError, match="non-finite"):
        EmbeddingMatrix(ids=ids, vectors=np.array([[1.0, np.nan], [0.0, 1.0]]))
    with pytest.raises(EmbeddingError, match="duplicate"):
        EmbeddingMatrix(ids=[TupleRef("t", 0)] * 2, vectors=np.eye(2))
    with pytest.raises(EmbeddingError, match="ids"):
        EmbeddingMatrix(ids=ids[:1], vectors=np.eye(2))


def test_jsonl_roundtrip_and_import_provider(tmp_path):
    ids = [TupleRef("t", 0), TupleRef("u", 3)]
    m = EmbeddingMatrix(ids=ids, vectors=np.array([[1.0, 2.0], [3.0, 4.0]]), provider_tag="test")
    path = tmp_path / "emb.jsonl"
    write_embeddings_jsonl(m, path)
    back = read_embeddings_jsonl(path, ids=ids)
    assert back.ids == ids
    np.testing.assert_array_equal(back.vectors, m.vectors)
    assert back.provider_tag == "test"

    provider = ImportedTupleProvider(path)
    st = serialize_tuple(("x",), ("h",), TupleRef("u", 3))
    np.testing.assert_array_equal(provider.embed(st, ("h",)), [3.0, 4.0])


def test_import_missing_id_errors_with_id(tmp_path):
    m = EmbeddingMatrix(ids=[TupleRef("t", 0)], vectors=np.array([[1.0, 0.0]]))
    path = tmp_path / "emb.jsonl"
    write_embeddings_jsonl(m, path)
    with pytest.raises(EmbeddingError, match=r"\('t', 9\)"):
        read_embeddings_jsonl(path, ids=[TupleRef("t", 9)])


def test_import_dim_mismatch_rejected(tmp_path):
    path = tmp_path / "emb.jsonl"
    path.write_text('{"dim": 3, "provider": "x"}\n{"table": "t", "row": 0, "vec": [1.0, 2.0]}\n')
    with pytest.raises(EmbeddingError, match="dim"):
        ImportedTupleProvider(path)


def test_cosine_embedding_loss_branches():
    e = np.array([1.0, 0.0])
    assert cosine_embedding_loss(e, e, 1) == 0.0
    u = np.array([1.0, 0.0])
    v = np.array([0.8, 0.6])  # cos = 0.8
    assert cosine_embedding_loss(u, v, 0) == pytest.approx(0.8)
    w = np.array([-0.5, np.sqrt(1 - 0.25)])  # cos = -0.5
    assert cosine_embedding_loss(u, w, 0) == 0.0
    assert cosine_embedding_loss(u, v, 1) == pytest.approx(0.2)


def test_classify_unionable_strict_threshold():
    a = np.array([1.0, 0.0])
    assert classify_unionable(a, a)
    # distance exactly at the threshold is NOT unionable
    b = np.array([0.3, np.sqrt(1 - 0.09)])  # cos = 0.3 -> distance 0.7
    assert cosine_distance(a, b) == pytest.approx(0.7)
    assert not classify_unionable(a, b, threshold=cosine_distance(a, b))
    assert not classify_unionable(a, -a)


def test_classify_monotone_in_threshold():
    rng = np.random.default_rng(0)
    for _ in range(50):
        u, v = rng.normal(size=2 * 4).reshape(2, 4)
        was = False
        for thr in np.linspace(0, 2.1, 22):
            now = classify_unionable(u, v, threshold=thr)
            assert not (was and not now)  # once unionable, stays unionable as thr grows
            was = now


def test_pair_accuracy():
    # TP=3, TN=4, FP=2, FN=1 -> 7/10
    preds = [True] * 3 + [False] * 4 + [True] * 2 + [False] * 1
    labels = [True] * 3 + [False] * 4 + [False] * 2 + [True] * 1
    assert pair_accuracy(preds, labels) == pytest.approx(0.7)
    assert pair_accuracy([True, False], [True, False]) == 1.0
    assert pair_accuracy([True, False], [False, True]) == 0.0
    with pytest.raises(ValueError):
        pair_accuracy([], [])
