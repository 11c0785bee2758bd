from __future__ import annotations

import json
import random
import sqlite3
from collections import Counter

from oracles import evaluate_query, json_scalar_cells, read_csv
from schemaforge.catalog import CsvSource, IngestConfig
from schemaforge.qlearn import join_candidates
from schemaforge.rewrite import array_kind, generate_ddl, generate_load, rewrite_query
from schemaforge.schema import apply_join, materialize


def load_sqlite(project, state) -> sqlite3.Connection:
    conn = sqlite3.connect(":memory:")
    conn.executescript(generate_ddl(state, project.catalog))
    conn.executescript(generate_load(materialize(state, project.store, project.pool)))
    return conn


def sql_answers(project, state, query) -> Counter:
    conn = load_sqlite(project, state)
    try:
        rows = conn.execute(rewrite_query(query, state, project.catalog, project.store)).fetchall()
    finally:
        conn.close()
    return Counter(tuple(r) for r in rows)


def oracle_answers(project, state, query) -> Counter:
    ms = materialize(state, project.store, project.pool)
    tables = {tid: (t.attributes, t.rows) for tid, t in ms.tables.items()}
    arrays = {}
    cat = project.catalog
    for attr in cat.actions:
        kind = array_kind(attr, cat, project.store)
        if kind is not None:
            rows = project.store.arrays[kind].rows
            arrays[attr] = [(o, i, v) for o, k, i, v in rows if k == cat.name_of[attr]]
    housing = {name: cat.resolve(name) for name in query.names()}
    return evaluate_query(query, tables, arrays, housing)


def random_walk(project, rnd: random.Random, steps: int | None = None):
    """States visited by random pool-respecting joins from the initial state."""
    state = project.initial
    visited = [state]
    actions = list(project.catalog.actions)
    rnd.shuffle(actions)
    for action in actions[:steps]:
        targets = join_candidates(action, state, project.pool)
        if targets:
            state = apply_join(state, action, rnd.choice(targets), project.pool).state
            visited.append(state)
    return visited


def random_fixture(rnd: random.Random, root):
    keys = ["k%d" % i for i in range(rnd.randint(1, 6))]
    docs = []
    for i in range(rnd.randint(0, 8)):
        doc = {}
        for k in keys:
            roll = rnd.random()
            if roll < 0.3:
                continue
            if roll < 0.5:
                doc[k] = [rnd.choice(["x", "y", "z"]) for _ in range(rnd.randint(0, 3))]
            elif roll < 0.6:
                doc[k] = {"inner": rnd.randint(0, 5)}
            elif roll < 0.65:
                doc[k] = None
            else:
                doc[k] = rnd.choice([rnd.randint(0, 99), "s%d" % i, rnd.random() < 0.5])
        docs.append(doc)
    (root / "d.jsonl").write_text("".join(json.dumps(d) + "\n" for d in docs), encoding="utf-8")
    triples = [f'<s{rnd.randint(0, 5)}> <p{rnd.randint(0, 4)}> "o{j}" .' for j in range(rnd.randint(0, 12))]
    (root / "g.nt").write_text("\n".join(triples) + "\n", encoding="utf-8")
    rows = ["id,a,b"] + [f"r{j},{rnd.choice(['', '1', 'v'])},{rnd.choice(['', 'w'])}" for j in range(rnd.randint(0, 6))]
    (root / "t.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    return IngestConfig(
        json_path=root / "d.jsonl",
        rdf_path=root / "g.nt",
        csv_sources=[CsvSource("t", root / "t.csv", ("id",))],
    )


def raw_cell_count(cfg) -> int:
    total = json_scalar_cells(cfg.json_path)
    with open(cfg.rdf_path, encoding="utf-8") as fh:
        total += sum(1 for line in fh if line.strip())
    header, rows = read_csv(cfg.csv_sources[0].path)
    total += sum(1 for r in rows for j, v in enumerate(r) if header[j] != "id" and v != "")
    return total
