"""Schema states, their string encoding, join transitions and materialization.

A state is a partition of the attribute ids into tables. Each table is named
by its smallest attribute id and lists its attributes in ascending order, so
``{1: [1, 3], 2: [2]}`` encodes as ``"1 3 0 2"`` with ``0`` separating tables.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import TYPE_CHECKING, Iterable, Mapping

from .errors import (
    ActionNotSingleton,
    IncompatibleEntityDomains,
    MalformedEncoding,
    UnknownTarget,
)

if TYPE_CHECKING:
    from .catalog import ConstraintPool
    from .dsm import ArrayTable, DsmStore

SEPARATOR = "0"
ROW_OVERHEAD = 8
NULL = None


class SchemaState:
    """Immutable mapping ``table id -> ascending attribute ids``."""

    __slots__ = ("_tables", "_canon", "_owner")

    def __init__(self, tables: Mapping[int, Iterable[int]]):
        norm: dict[int, tuple[int, ...]] = {}
        owner: dict[int, int] = {}
        for tid in sorted(tables):
            attrs = tuple(tables[tid])
            if not attrs:
                raise ValueError(f"table {tid} has no attributes")
            if any(a <= 0 for a in attrs):
                raise ValueError(f"table {tid}: attribute ids must be positive")
            if any(x >= y for x, y in zip(attrs, attrs[1:])):
                raise ValueError(f"table {tid}: attributes not strictly ascending {attrs}")
            if attrs[0] != tid:
                raise ValueError(f"table {tid} must be named after its smallest attribute {attrs[0]}")
            for a in attrs:
                if a in owner:
                    raise ValueError(f"attribute {a} appears in tables {owner[a]} and {tid}")
                owner[a] = tid
            norm[tid] = attrs
        self._tables = MappingProxyType(norm)
        self._owner = owner
        self._canon = encode_state(norm)

    @property
    def tables(self) -> Mapping[int, tuple[int, ...]]:
        return self._tables

    @property
    def canon(self) -> str:
        return self._canon

    def table_of(self, attr: int) -> int:
        return self._owner[attr]

    def attributes(self) -> list[int]:
        return sorted(self._owner)

    def as_dict(self) -> dict[int, list[int]]:
        return {t: list(a) for t, a in self._tables.items()}

    def is_partition_of(self, ids: Iterable[int]) -> bool:
        return sorted(ids) == self.attributes()

    def __len__(self) -> int:
        return len(self._tables)

    def __eq__(self, other) -> bool:
        if isinstance(other, SchemaState):
            return self._canon == other._canon
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._canon)

    def __repr__(self) -> str:
        return f"SchemaState({self.as_dict()})"


def encode_state(tables: Mapping[int, Iterable[int]]) -> str:
    if isinstance(tables, SchemaState):
        return tables.canon
    return f" {SEPARATOR} ".join(
        " ".join(str(a) for a in tables[tid]) for tid in sorted(tables)
    )


def decode_state(text: str) -> SchemaState:
    tokens = text.split()
    if not tokens:
        return SchemaState({})
    try:
        ids = [int(t) for t in tokens]
    except ValueError:
        raise MalformedEncoding(f"non-integer token in {text!r}") from None
    groups: list[list[int]] = [[]]
    for i in ids:
        if i < 0:
            raise MalformedEncoding(f"negative id {i}")
        if i == 0:
            groups.append([])
        else:
            groups[-1].append(i)
    if any(not g for g in groups):
        raise MalformedEncoding(f"empty table segment in {text!r}")
    tables = {}
    for g in groups:
        if any(x >= y for x, y in zip(g, g[1:])):
            raise MalformedEncoding(f"attributes not strictly ascending: {g}")
        if g[0] in tables:
            raise MalformedEncoding(f"table {g[0]} listed twice")
        tables[g[0]] = g
    try:
        return SchemaState(tables)
    except ValueError as exc:
        raise MalformedEncoding(str(exc)) from None


@dataclass(frozen=True)
class JoinOutcome:
    accepted: bool
    state: SchemaState


def apply_join(
    state: SchemaState, action: int, target: int, pool: ConstraintPool | None = None
) -> JoinOutcome:
    """Move the singleton table of ``action`` into table ``target``.

    A pool that does not allow ``(action, target)`` yields a rejected outcome
    carrying the unchanged state. ``pool=None`` allows every pair.
    """
    tables = state.tables
    if target not in tables:
        raise UnknownTarget(f"no table {target} in state {state.canon!r}")
    home = state.table_of(action)
    if tables[home] != (action,):
        raise ActionNotSingleton(f"attribute {action} already shares table {home}")
    if home == target:
        raise UnknownTarget(f"attribute {action} cannot join its own table")
    if pool is not None and not pool.allows(action, target):
        return JoinOutcome(False, state)
    merged = tuple(sorted(tables[target] + (action,)))
    new = {t: a for t, a in tables.items() if t not in (home, target)}
    new[merged[0]] = merged
    return JoinOutcome(True, SchemaState(new))


# --------------------------------------------------------------------------
# physical materialization


@dataclass
class MaterializedTable:
    table_id: int
    attributes: tuple[int, ...]
    rows: list[tuple] = field(default_factory=list)

    @property
    def columns(self) -> tuple[str, ...]:
        return ("entity",) + tuple(f"a{a}" for a in self.attributes)

    def __len__(self) -> int:
        return len(self.rows)


@dataclass
class MaterializedSchema:
    tables: dict[int, MaterializedTable] = field(default_factory=dict)
    arrays: dict[str, ArrayTable] = field(default_factory=dict)

    @property
    def row_counts(self) -> dict[int, int]:
        return {t: len(m) for t, m in self.tables.items()}


def _check_connected(attrs: tuple[int, ...], pool: ConstraintPool) -> None:
    reached = {attrs[0]}
    frontier = [attrs[0]]
    while frontier:
        a = frontier.pop()
        for b in attrs:
            if b not in reached and pool.allows(a, b):
                reached.add(b)
                frontier.append(b)
    if len(reached) != len(attrs):
        stray = sorted(set(attrs) - reached)
        raise IncompatibleEntityDomains(
            f"table {attrs[0]}: no pool join path to attributes {stray}"
        )


def _values_by_entity(store: DsmStore, attr: int) -> dict[str, list[str]]:
    out: dict[str, list[str]] = defaultdict(list)
    table = store.binaries.get(attr)
    if table is not None:
        for entity, value in table.rows:
            out[entity].append(value)
    return out


def merge_tables(store: DsmStore, attrs: tuple[int, ...]) -> list[tuple]:
    """Full outer join of the binary tables of ``attrs`` on the entity key."""
    if len(attrs) == 1:
        table = store.binaries.get(attrs[0])
        return list(table.rows) if table is not None else []
    columns = [_values_by_entity(store, a) for a in attrs]
    entities = dict.fromkeys(e for col in columns for e in col)
    rows = []
    for entity in entities:
        options = [col.get(entity) or [NULL] for col in columns]
        rows.extend((entity,) + combo for combo in itertools.product(*options))
    return rows


def materialize(
    state: SchemaState, store: DsmStore, pool: ConstraintPool | None = None
) -> MaterializedSchema:
    ms = MaterializedSchema(arrays=dict(store.arrays))
    for tid, attrs in state.tables.items():
        if pool is not None and len(attrs) > 1:
            _check_connected(attrs, pool)
        ms.tables[tid] = MaterializedTable(tid, attrs, merge_tables(store, attrs))
    return ms


def table_cardinality(store: DsmStore, attrs: tuple[int, ...]) -> int:
    """Row count ``merge_tables`` would produce, without building the rows."""
    if len(attrs) == 1:
        table = store.binaries.get(attrs[0])
        return len(table) if table is not None else 0
    counts: dict[str, list[int]] = {}
    for pos, a in enumerate(attrs):
        table = store.binaries.get(a)
        if table is None:
            continue
        for entity, _ in table.rows:
            per = counts.setdefault(entity, [0] * len(attrs))
            per[pos] += 1
    total = 0
    for per in counts.values():
        prod = 1
        for c in per:
            prod *= max(1, c)
        total += prod
    return total


def _cell_bytes(value) -> int:
    return 0 if value is NULL else len(str(value).encode("utf-8"))


def storage_size(ms: MaterializedSchema) -> int:
    total = 0
    for table in ms.tables.values():
        for row in table.rows:
            total += ROW_OVERHEAD + sum(_cell_bytes(v) for v in row)
    for table in ms.arrays.values():
        for row in table.rows:
            total += ROW_OVERHEAD + sum(_cell_bytes(v) for v in row)
    return total
