"""Logical workload and its translation to SQL for a given schema state.

Tables are named ``t<table id>`` with an ``entity`` key column and one
``a<attribute id>`` column per attribute. JSON keys that only ever hold
arrays are read from the fixed array tables instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

from .catalog import AttributeCatalog
from .dsm import ARRAY_TABLE_NAMES, ARRAY_VALUE_COLUMNS, KINDS
from .errors import MalformedLine, SchemaForgeError, UnknownAttribute
from .schema import NULL, MaterializedSchema, SchemaState

if TYPE_CHECKING:
    from .dsm import DsmStore

ENTITY = "_entity"
OPS = {"eq": "=", "lt": "<", "gt": ">"}


@dataclass(frozen=True)
class Filter:
    name: str
    op: str
    literal: str

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"unknown filter operator {self.op!r}")


@dataclass(frozen=True)
class LogicalQuery:
    id: str
    select: tuple[str, ...]
    filters: tuple[Filter, ...] = ()

    def __post_init__(self):
        if not self.select:
            raise ValueError(f"query {self.id} selects nothing")

    def names(self) -> list[str]:
        """Referenced attribute names in first-use order, ``_entity`` excluded."""
        seen = dict.fromkeys(list(self.select) + [f.name for f in self.filters])
        seen.pop(ENTITY, None)
        return list(seen)


@dataclass
class Workload:
    queries: list[LogicalQuery] = field(default_factory=list)

    def __post_init__(self):
        ids = [q.id for q in self.queries]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate query ids in workload")

    def __iter__(self):
        return iter(self.queries)

    def __len__(self) -> int:
        return len(self.queries)


def parse_query_line(line: str) -> LogicalQuery:
    parts = line.split(";")
    if len(parts) not in (2, 3):
        raise ValueError("expected '<id>;<select>;<filters>'")
    qid = parts[0].strip()
    if not qid:
        raise ValueError("empty query id")
    select = tuple(s.strip() for s in parts[1].split(",") if s.strip())
    filters = []
    if len(parts) == 3:
        for spec in filter(None, (f.strip() for f in parts[2].split(","))):
            name, op, literal = (spec.split(":", 2) + ["", ""])[:3]
            if not name or not op:
                raise ValueError(f"bad filter {spec!r}")
            filters.append(Filter(name.strip(), op.strip(), literal))
    return LogicalQuery(qid, select, tuple(filters))


def parse_workload(text: str, source: str = "<workload>") -> Workload:
    queries = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            queries.append(parse_query_line(line))
        except ValueError as exc:
            raise MalformedLine(source, no, str(exc)) from None
    try:
        return Workload(queries)
    except ValueError as exc:
        raise MalformedLine(source, 0, str(exc)) from None


def load_workload(path) -> Workload:
    return parse_workload(Path(path).read_text(encoding="utf-8"), str(path))


# --------------------------------------------------------------------------
# planning


@dataclass
class QueryPlan:
    """Physical tables a query touches under one state.

    ``tables`` are binary-derived table ids in ascending order; ``arrays``
    maps array-only attribute ids to their array-table kind.
    """

    ids: dict[str, int]
    tables: list[int]
    arrays: dict[int, str]

    @property
    def join_count(self) -> int:
        return len(self.tables) + len(self.arrays) - 1


def _resolve(name: str, catalog: AttributeCatalog) -> int:
    try:
        return catalog.resolve(name)
    except KeyError:
        raise UnknownAttribute(name) from None


def array_kind(attr: int, catalog: AttributeCatalog, store: DsmStore | None) -> str | None:
    """Array table kind for a key with array values and no binary table."""
    if store is None or attr in store.binaries:
        return None
    kinds = store.array_kinds(catalog.name_of[attr])
    if not kinds:
        return None
    if len(kinds) > 1:
        raise SchemaForgeError(
            f"key {catalog.name_of[attr]!r} spans several array tables {kinds}"
        )
    return kinds[0]


def plan_query(
    q: LogicalQuery, state: SchemaState, catalog: AttributeCatalog, store: DsmStore | None = None
) -> QueryPlan:
    ids = {name: _resolve(name, catalog) for name in q.names()}
    tables, arrays = set(), {}
    for name, attr in ids.items():
        kind = array_kind(attr, catalog, store)
        if kind is not None:
            arrays[attr] = kind
            continue
        try:
            tables.add(state.table_of(attr))
        except KeyError:
            raise UnknownAttribute(f"{name} is not housed in state {state.canon!r}") from None
    if not tables and not arrays:
        raise UnknownAttribute(f"query {q.id} references no attribute")
    return QueryPlan(ids, sorted(tables), arrays)


# --------------------------------------------------------------------------
# SQL text


def quote(value) -> str:
    if value is NULL:
        return "NULL"
    if isinstance(value, int):
        return str(value)
    return "'" + str(value).replace("'", "''") + "'"


def _numeric(literal: str) -> bool:
    try:
        return math.isfinite(float(literal))
    except ValueError:
        return False


def _condition(column: str, op: str, literal: str) -> str:
    if op != "eq" and _numeric(literal):
        return f"CAST({column} AS REAL) {OPS[op]} {literal.strip()}"
    return f"{column} {OPS[op]} {quote(literal)}"


def rewrite_query(
    q: LogicalQuery, state: SchemaState, catalog: AttributeCatalog, store: DsmStore | None = None
) -> str:
    plan = plan_query(q, state, catalog, store)
    qualify = len(plan.tables) + len(plan.arrays) > 1 or bool(plan.arrays)

    def array_alias(attr: int) -> str:
        return f"r{attr}"

    def column(name: str) -> str:
        if name == ENTITY:
            if plan.tables:
                return f"t{plan.tables[0]}.entity" if qualify else "entity"
            return f"{array_alias(next(iter(plan.arrays)))}.objId"
        attr = plan.ids[name]
        if attr in plan.arrays:
            return f"{array_alias(attr)}.{ARRAY_VALUE_COLUMNS[plan.arrays[attr]]}"
        return f"t{state.table_of(attr)}.a{attr}" if qualify else f"a{attr}"

    where: list[str] = []
    if plan.tables:
        base_entity = f"t{plan.tables[0]}.entity"
        from_parts = [f"t{plan.tables[0]}"]
        for tid in plan.tables[1:]:
            from_parts.append(f"INNER JOIN t{tid} ON {base_entity} = t{tid}.entity")
        pending = list(plan.arrays)
    else:
        first = next(iter(plan.arrays))
        base_entity = f"{array_alias(first)}.objId"
        from_parts = [f"{ARRAY_TABLE_NAMES[plan.arrays[first]]} AS {array_alias(first)}"]
        where.append(f"{array_alias(first)}.key = {quote(catalog.name_of[first])}")
        pending = list(plan.arrays)[1:]
    for attr in pending:
        alias = array_alias(attr)
        from_parts.append(
            f"INNER JOIN {ARRAY_TABLE_NAMES[plan.arrays[attr]]} AS {alias} "
            f"ON {alias}.objId = {base_entity} AND {alias}.key = {quote(catalog.name_of[attr])}"
        )

    for f in q.filters:
        where.append(_condition(column(f.name), f.op, f.literal))
    # merged tables carry outer-join nulls; an attribute's own table never does
    for name, attr in plan.ids.items():
        if attr not in plan.arrays and len(state.tables[state.table_of(attr)]) > 1:
            where.append(f"{column(name)} IS NOT NULL")

    sql = f"SELECT {', '.join(column(n) for n in q.select)} FROM {' '.join(from_parts)}"
    if where:
        sql += " WHERE " + " AND ".join(where)
    return sql


def render_queries(
    workload: Workload, state: SchemaState, catalog: AttributeCatalog, store: DsmStore | None = None
) -> str:
    lines = []
    for q in workload:
        lines.append(f"-- {q.id}")
        lines.append(rewrite_query(q, state, catalog, store) + ";")
    return "\n".join(lines) + ("\n" if lines else "")


def array_ddl() -> list[str]:
    out = []
    for kind in KINDS:
        out.append(
            f"CREATE TABLE {ARRAY_TABLE_NAMES[kind]} "
            f"(objId TEXT, key TEXT, idx INTEGER, {ARRAY_VALUE_COLUMNS[kind]} TEXT);"
        )
    return out


def generate_ddl(state: SchemaState, catalog: AttributeCatalog | None = None) -> str:
    lines = []
    for tid, attrs in state.tables.items():
        if catalog is not None:
            names = ", ".join(catalog.name_of.get(a, "?") for a in attrs)
            lines.append(f"-- t{tid}: {names}")
        cols = ", ".join(["entity TEXT"] + [f"a{a} TEXT" for a in attrs])
        lines.append(f"CREATE TABLE t{tid} ({cols});")
    lines.extend(array_ddl())
    return "\n".join(lines) + "\n"


def generate_load(ms: MaterializedSchema) -> str:
    lines = []
    for tid, table in ms.tables.items():
        for row in table.rows:
            lines.append(f"INSERT INTO t{tid} VALUES ({', '.join(quote(v) for v in row)});")
    for table in ms.arrays.values():
        for row in table.rows:
            lines.append(
                f"INSERT INTO {table.name} VALUES ({', '.join(quote(v) for v in row)});"
            )
    return "\n".join(lines) + ("\n" if lines else "")
