"""Serialize tuples to delimiter-framed text and embed them.

Null cells vanish from the serialization (header and value together). The
built-in embedder hashes (header token, value token) pairs, so reordering a
tuple's columns changes nothing.
"""

import numpy as np

from lakediv import (
    BuiltinTupleProvider,
    TupleRef,
    cosine_distance,
    embed_tuples,
    serialize_tuple,
)

schema = ("Park Name", "Supervisor", "City", "Country")
rows = [
    ("River Park", "Vera Onate", "Fresno", "USA"),
    ("Chippewa Park", None, "Brandon, MN", "USA"),   # no supervisor aligned
    ("River Park", "Vera Onate", "Fresno", "USA"),   # duplicate of row 0
]

serialized = [serialize_tuple(r, schema, TupleRef("demo", i)) for i, r in enumerate(rows)]
for st in serialized:
    print(st.text)

matrix = embed_tuples(serialized, schema, BuiltinTupleProvider())
print(f"\nembedding dim: {matrix.dim}, provider: {matrix.provider_tag}")

d01 = cosine_distance(matrix.vectors[0], matrix.vectors[1])
d02 = cosine_distance(matrix.vectors[0], matrix.vectors[2])
print(f"distance(River Park, Chippewa Park) = {d01:.4f}")
print(f"distance(River Park, its duplicate) = {d02:.4f}   # exactly zero")

# column order invariance: shuffle the schema, embed again
perm = [3, 0, 2, 1]
shuffled_schema = tuple(schema[i] for i in perm)
shuffled = serialize_tuple(
    tuple(rows[0][i] for i in perm), shuffled_schema, TupleRef("demo", 9)
)
v = BuiltinTupleProvider().embed(shuffled, shuffled_schema)
print("shuffled column order, identical vector:", np.array_equal(v, matrix.vectors[0]))
