"""Render a learned schema as SQL and run the rewritten workload in sqlite."""
from __future__ import annotations

import sqlite3

from schemaforge import Project, TrainConfig
from schemaforge.datasets import toy_config

project = Project.from_config(toy_config())
best = project.state(project.train(TrainConfig(episodes=100, seed=7)).best_canon)
artifacts = project.sql_artifacts(best)

# %% DDL for the learned tables plus the three array tables
print(artifacts["schema.sql"])

# %% Load the data and run each rewritten query
conn = sqlite3.connect(":memory:")
conn.executescript(artifacts["schema.sql"])
conn.executescript(artifacts["load.sql"])
lines = artifacts["queries.sql"].splitlines()
for header, sql in zip(lines[::2], lines[1::2]):
    rows = conn.execute(sql).fetchall()
    print(header[3:], f"{len(rows)} rows:", sql)
