from __future__ import annotations

import random
import sqlite3

import pytest

from helpers import load_sqlite, oracle_answers, random_walk, sql_answers
from schemaforge.catalog import SourceDataset, build_catalog
from schemaforge.errors import MalformedLine, UnknownAttribute
from schemaforge.rewrite import (
    Filter,
    LogicalQuery,
    Workload,
    generate_ddl,
    generate_load,
    parse_workload,
    plan_query,
    render_queries,
    rewrite_query,
)
from schemaforge.schema import MaterializedSchema, MaterializedTable, SchemaState, decode_state, materialize


def _catalog(preds=(), keys=()):
    ds = SourceDataset(
        json_docs=[("1", [(k, 1) for k in keys])] if keys else [],
        rdf_triples=[("s", p, "o") for p in preds],
    )
    return build_catalog(ds, 10, 20)


def test_parse_workload():
    w = parse_workload(
        "# header\n\nQ1;pageid;_entity:eq:Doris_Brougham\nQ4;original,title;pageid:eq:8484745\nQ2;a,b;\nQ9;x;y:gt:1:30\n"
    )
    assert [q.id for q in w] == ["Q1", "Q4", "Q2", "Q9"]
    assert w.queries[0].filters == (Filter("_entity", "eq", "Doris_Brougham"),)
    assert w.queries[1].select == ("original", "title")
    assert w.queries[2].filters == ()
    assert w.queries[3].filters == (Filter("y", "gt", "1:30"),)


@pytest.mark.parametrize("text", ["Q1", "Q1;;", "Q1;a;b:ne:3", "Q1;a;b", "Q1;a\nQ1;b"])
def test_parse_workload_rejects(text):
    with pytest.raises(MalformedLine):
        parse_workload(text)


def test_single_table_template():
    cat = _catalog(preds=[f"p{i}" for i in range(1, 3)] + ["birthYear"])
    # ids: birthYear=11, p1=12, p2=13
    q = LogicalQuery("Q5", ("p1",), (Filter("_entity", "eq", "Sadako_Sasaki"),))
    state = SchemaState({i: [i] for i in cat.actions})
    assert rewrite_query(q, state, cat) == "SELECT a12 FROM t12 WHERE entity = 'Sadako_Sasaki'"


def test_colocated_query_has_no_join():
    cat = _catalog(keys=["a", "b", "c"])
    q = LogicalQuery("Q", ("a", "c"))
    sql = rewrite_query(q, SchemaState({1: [1, 3], 2: [2]}), cat)
    assert "JOIN" not in sql
    assert sql == "SELECT a1, a3 FROM t1 WHERE a1 IS NOT NULL AND a3 IS NOT NULL"


def test_two_table_join_sql():
    cat = _catalog(keys=["a", "b"])
    q = LogicalQuery("Q", ("a", "b"), (Filter("a", "gt", "3"), Filter("b", "eq", "it's")))
    sql = rewrite_query(q, SchemaState({1: [1], 2: [2]}), cat)
    assert sql == (
        "SELECT t1.a1, t2.a2 FROM t1 INNER JOIN t2 ON t1.entity = t2.entity "
        "WHERE CAST(t1.a1 AS REAL) > 3 AND t2.a2 = 'it''s'"
    )


def test_two_singletons_match_nested_loop(toy):
    q = LogicalQuery("J", ("customer", "totalPrice"), (Filter("totalPrice", "lt", "300"),))
    state = toy.initial
    assert "INNER JOIN" in rewrite_query(q, state, toy.catalog, toy.store)
    got = sql_answers(toy, state, q)
    assert sum(got.values()) > 0
    assert got == oracle_answers(toy, state, q)


def test_unknown_attribute(toy):
    with pytest.raises(UnknownAttribute):
        rewrite_query(LogicalQuery("Q", ("nope",)), toy.initial, toy.catalog)
    with pytest.raises(UnknownAttribute):
        rewrite_query(LogicalQuery("Q", ("_entity",)), toy.initial, toy.catalog)


def test_array_only_key_reads_array_table(toy):
    q = LogicalQuery("Q5", ("items",), (Filter("_entity", "eq", "1"),))
    sql = rewrite_query(q, toy.initial, toy.catalog, toy.store)
    assert sql == "SELECT r3.valStr FROM ArrayStringTable AS r3 WHERE r3.key = 'items' AND r3.objId = '1'"
    assert sum(sql_answers(toy, toy.initial, q).values()) == 3
    mixed = LogicalQuery("M", ("customer", "items"))
    assert sql_answers(toy, toy.initial, mixed) == oracle_answers(toy, toy.initial, mixed)


def test_ddl_templates():
    cat = _catalog(keys=["a", "b", "c"])
    ddl = generate_ddl(SchemaState({1: [1, 3]}), cat)
    assert "CREATE TABLE t1 (entity TEXT, a1 TEXT, a3 TEXT);" in ddl.splitlines()
    assert "CREATE TABLE ArrayStringTable (objId TEXT, key TEXT, idx INTEGER, valStr TEXT);" in ddl
    empty = generate_ddl(SchemaState({}))
    assert [l for l in empty.splitlines() if l.startswith("CREATE")] == [
        "CREATE TABLE ArrayStringTable (objId TEXT, key TEXT, idx INTEGER, valStr TEXT);",
        "CREATE TABLE ArrayNumberTable (objId TEXT, key TEXT, idx INTEGER, valNum TEXT);",
        "CREATE TABLE ArrayBoolTable (objId TEXT, key TEXT, idx INTEGER, valBool TEXT);",
    ]


def test_load_templates():
    ms = MaterializedSchema(
        tables={1: MaterializedTable(1, (1,), [("e1", "Mary")]), 2: MaterializedTable(2, (2, 3), [])}
    )
    assert generate_load(ms) == "INSERT INTO t1 VALUES ('e1', 'Mary');\n"
    ms.tables[2].rows.append(("e2", None, "x"))
    assert "INSERT INTO t2 VALUES ('e2', NULL, 'x');" in generate_load(ms)


def test_load_roundtrip_counts(toy):
    state = decode_state("1 2 4 5 0 3 0 11 12 13 14 0 15 0 21 22")
    ms = materialize(state, toy.store, toy.pool)
    conn = load_sqlite(toy, state)
    for tid, table in ms.tables.items():
        assert conn.execute(f"SELECT COUNT(*) FROM t{tid}").fetchone()[0] == len(table)
    assert conn.execute("SELECT COUNT(*) FROM ArrayStringTable").fetchone()[0] == len(toy.store.arrays["string"])


def test_join_count_and_determinism(toy):
    rnd = random.Random(4)
    for state in random_walk(toy, rnd):
        for q in toy.workload:
            plan = plan_query(q, state, toy.catalog, toy.store)
            sql = rewrite_query(q, state, toy.catalog, toy.store)
            assert sql.count(" JOIN ") == plan.join_count
            assert sql == rewrite_query(q, state, toy.catalog, toy.store)


def test_semantics_preserved_along_random_walks(toy):
    rnd = random.Random(11)
    baseline = {q.id: oracle_answers(toy, toy.initial, q) for q in toy.workload}
    for _ in range(10):
        for state in random_walk(toy, rnd):
            for q in toy.workload:
                expected = baseline[q.id]
                assert oracle_answers(toy, state, q) == expected, (state.canon, q.id)
                assert sql_answers(toy, state, q) == expected, (state.canon, q.id)


def test_render_queries(toy):
    text = render_queries(toy.workload, toy.initial, toy.catalog, toy.store)
    lines = text.splitlines()
    assert lines[0] == "-- Q1" and lines[1].endswith(";")
    assert len(lines) == 2 * len(toy.workload)
    conn = load_sqlite(toy, toy.initial)
    for line in lines[1::2]:
        conn.execute(line)


def test_empty_workload_renders_nothing(toy):
    assert render_queries(Workload(), toy.initial, toy.catalog) == ""
    with pytest.raises(sqlite3.Error):
        sqlite3.connect(":memory:").execute("SELECT a1 FROM t1")
