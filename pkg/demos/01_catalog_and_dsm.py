"""Walk through ingestion: attribute ids, binary tables and array tables."""
from __future__ import annotations

from schemaforge import Project
from schemaforge.datasets import toy_config

# %% Load the bundled toy dataset (orders as JSON, persons as N-Triples, customers as CSV)
project = Project.from_config(toy_config())
cat = project.catalog
objects, triples, rows = project.dataset.counts
print(f"{objects} JSON objects, {triples} triples, {rows} relational rows")

# %% Every attribute gets an id in its band; the bands start after the thresholds
for attr in cat.actions:
    print(f"{attr:>3}  {cat.band_of(attr):<5} {cat.name_of[attr]}")
print("q =", cat.q)

# %% Scalar values land in two-column tables keyed by entity
for tid, table in list(project.store.binaries.items())[:3]:
    print(f"t{tid} ({table.name}, {table.kind}):", table.rows[:3])

# %% Arrays go to one table per value type, keeping element positions
strings = project.store.arrays["string"]
print(strings.name, strings.rows[:4])

# %% The starting schema keeps every attribute in its own table
print("initial schema:", project.initial.canon)
