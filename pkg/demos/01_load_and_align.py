"""Align data-lake columns to a query table and outer-union the tuples.

The park tables: a query table, a near-copy of it, and a table with the same
concepts under different headers plus an extra phone column. Alignment works
on cell values, so the inconsistent headers don't matter. Columns whose values
share nothing with any query column (the phone numbers, and here also the
disjoint city/manager values) end up discarded, and the outer union pads those
slots with nulls.
"""

from lakediv import BuiltinColumnProvider, Table, align_columns, outer_union

query = Table(
    name="parks_query",
    headers=("Park Name", "Supervisor", "City", "Country"),
    rows=(
        ("River Park", "Vera Onate", "Fresno", "USA"),
        ("Central Park", "John Doe", "New York", "USA"),
        ("Hyde Park", "Alice Gray", "London", "UK"),
    ),
    role="query",
)

near_copy = Table(
    name="parks_b",
    headers=("Park Name", "Supervisor", "City", "Country"),
    rows=query.rows + (("Lincoln Park", "Maria Cruz", "Chicago", "USA"),),
)

renamed = Table(
    name="parks_d",
    headers=("name", "place", "nation", "phone", "manager"),
    rows=(
        ("Chippewa Park", "Brandon, MN", "USA", "773 731-0380", "Tim Erickson"),
        ("Stanley Park", "Vancouver", "Canada", "604 555-0199", "Emma Stone"),
        ("Lincoln Park", "Chicago", "USA", "312 555-0000", "Maria Cruz"),
    ),
)

amap = align_columns(query, [near_copy, renamed], BuiltinColumnProvider())

print("Clusters (anchor <- aligned lake columns):")
for cluster in amap.clusters:
    members = ", ".join(f"{m.table}[{m.index}]={m.header!r}" for m in cluster.members)
    print(f"  {cluster.anchor.header:<12} <- {members or '(no match)'}")
print("Discarded lake columns:", [f"{r.table}[{r.index}]={r.header!r}" for r in amap.discarded])

unioned = outer_union(query, [near_copy, renamed], amap)
print(f"\nOuter union: {len(unioned.tuples)} tuples under schema {unioned.headers}")
for t in unioned.tuples:
    print(f"  {t.source.table}[{t.source.row}]: {t.cells}")
