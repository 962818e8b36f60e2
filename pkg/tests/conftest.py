import json
from pathlib import Path

import pytest

from lakediv.tables import Table, save_table


def park_query() -> Table:
    return Table(
        name="parks_query",
        headers=("Park Name", "Supervisor", "City", "Country"),
        rows=(
            ("River Park", "Vera Onate", "Fresno", "USA"),
            ("Central Park", "John Doe", "New York", "USA"),
            ("Hyde Park", "Alice Gray", "London", "UK"),
        ),
        role="query",
    )


def park_lake_b() -> Table:
    # near-copy of the query table plus one new tuple
    return Table(
        name="parks_b",
        headers=("Park Name", "Supervisor", "City", "Country"),
        rows=(
            ("River Park", "Vera Onate", "Fresno", "USA"),
            ("Central Park", "John Doe", "New York", "USA"),
            ("Hyde Park", "Alice Gray", "London", "UK"),
            ("Lincoln Park", "Maria Cruz", "Chicago", "USA"),
        ),
    )


def park_lake_d() -> Table:
    return Table(
        name="parks_d",
        headers=("Park Name", "Park City", "Park Country", "Park Phone", "Supervised By"),
        rows=(
            ("Chippewa Park", "Brandon, MN", "USA", "773 731-0380", "Tim Erickson"),
            ("Stanley Park", "Vancouver", "Canada", "604 555-0199", "Emma Stone"),
            ("Goldstream Park", "Victoria", "Canada", "250 555-0134", "Raj Patel"),
        ),
    )


def park_lake_c() -> Table:
    # paintings: shares only the country vocabulary with the query
    return Table(
        name="parks_c",
        headers=("Painting", "Artist", "Year", "Country"),
        rows=(
            ("Starry Night", "Vincent van Gogh", "1889", "France"),
            ("The Scream", "Edvard Munch", "1893", "Norway"),
            ("Guernica", "Pablo Picasso", "1937", "Spain"),
        ),
    )


@pytest.fixture
def park_benchmark(tmp_path: Path) -> Path:
    """Miniature parks benchmark on disk; returns the manifest path."""
    query = park_query()
    lake = [park_lake_b(), park_lake_c(), park_lake_d()]
    save_table(query, tmp_path / f"{query.name}.csv")
    for t in lake:
        save_table(t, tmp_path / f"{t.name}.csv")
    manifest = {
        "query_tables": [f"{query.name}.csv"],
        "lake_tables": [f"{t.name}.csv" for t in lake],
        "candidates": {query.name: ["parks_b", "parks_d"]},
    }
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(manifest))
    return path
