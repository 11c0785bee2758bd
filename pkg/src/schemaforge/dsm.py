"""Fully decomposed storage: one (entity, value) table per attribute id.

JSON arrays do not get binary tables. Their elements land in one of three
fixed-schema array tables (``objId, key, index, value``) chosen by element
type, and those tables never take part in joins.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .catalog import KEY_SEP, AttributeCatalog, RelationalTable, SourceDataset, render_scalar
from .errors import MissingKeyColumn, UnknownKey, UnknownPredicate
from .schema import SchemaState

STRING, NUMBER, BOOL = "string", "number", "bool"
KINDS = (STRING, NUMBER, BOOL)

ARRAY_TABLE_NAMES = {
    STRING: "ArrayStringTable",
    NUMBER: "ArrayNumberTable",
    BOOL: "ArrayBoolTable",
}
ARRAY_VALUE_COLUMNS = {STRING: "valStr", NUMBER: "valNum", BOOL: "valBool"}


def kind_of(value) -> str:
    if isinstance(value, bool):
        return BOOL
    if isinstance(value, (int, float)):
        return NUMBER
    return STRING


@dataclass
class BinaryTable:
    table_id: int
    name: str
    kind: str = STRING
    rows: list[tuple[str, str]] = field(default_factory=list)

    def add(self, entity: str, value: str, kind: str) -> None:
        if not self.rows:
            self.kind = kind
        elif kind != self.kind:
            self.kind = STRING
        self.rows.append((entity, value))

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def single_valued(self) -> bool:
        return len({e for e, _ in self.rows}) == len(self.rows)


@dataclass
class ArrayTable:
    kind: str
    rows: list[tuple[str, str, int, str]] = field(default_factory=list)

    @property
    def name(self) -> str:
        return ARRAY_TABLE_NAMES[self.kind]

    def __len__(self) -> int:
        return len(self.rows)


def _empty_arrays() -> dict[str, ArrayTable]:
    return {k: ArrayTable(k) for k in KINDS}


@dataclass
class DsmStore:
    binaries: dict[int, BinaryTable] = field(default_factory=dict)
    arrays: dict[str, ArrayTable] = field(default_factory=_empty_arrays)

    @property
    def row_counts(self) -> dict[int, int]:
        return {i: len(t) for i, t in sorted(self.binaries.items())}

    def joinable_ids(self) -> list[int]:
        """Ids whose binary table exists and holds at most one value per entity."""
        return [i for i, t in sorted(self.binaries.items()) if t.single_valued]

    def array_kinds(self, key: str) -> list[str]:
        return [k for k in KINDS if any(r[1] == key for r in self.arrays[k].rows)]

    def value_cells(self) -> int:
        return sum(len(t) for t in self.binaries.values()) + sum(
            len(a) for a in self.arrays.values()
        )


def _route_array(values: list) -> tuple[str, list[str]]:
    kinds = {kind_of(v) if not isinstance(v, (dict, list)) and v is not None else None for v in values}
    if len(kinds) == 1 and None not in kinds:
        kind = kinds.pop()
        return kind, [render_scalar(v) for v in values]
    rendered = [v if isinstance(v, str) else json.dumps(v, sort_keys=True) for v in values]
    return STRING, rendered


def decompose_json(docs, catalog: AttributeCatalog):
    binaries: dict[int, BinaryTable] = {}
    arrays = _empty_arrays()
    for oid, pairs in docs:
        for key, value in pairs:
            if key not in catalog.id_of:
                raise UnknownKey(key)
            if value is None:
                continue
            if isinstance(value, list):
                kind, rendered = _route_array(value)
                rows = arrays[kind].rows
                rows.extend((oid, key, idx, v) for idx, v in enumerate(rendered))
                continue
            tid = catalog.id_of[key]
            table = binaries.setdefault(tid, BinaryTable(tid, key))
            table.add(oid, render_scalar(value), kind_of(value))
    return binaries, arrays


def decompose_rdf(triples, catalog: AttributeCatalog) -> dict[int, BinaryTable]:
    binaries: dict[int, BinaryTable] = {}
    for s, p, o in triples:
        if p not in catalog.id_of:
            raise UnknownPredicate(p)
        tid = catalog.id_of[p]
        binaries.setdefault(tid, BinaryTable(tid, p)).add(s, o, STRING)
    return binaries


def _cell_kind(text: str) -> str:
    try:
        float(text)
    except ValueError:
        return STRING
    return NUMBER


def decompose_relational(tables: list[RelationalTable], catalog: AttributeCatalog) -> dict[int, BinaryTable]:
    binaries: dict[int, BinaryTable] = {}
    for table in tables:
        missing = [k for k in table.key_columns if k not in table.columns]
        if missing:
            raise MissingKeyColumn(f"table {table.name!r} lacks key column(s) {missing}")
        key_pos = [table.columns.index(k) for k in table.key_columns]
        for col in table.attribute_columns:
            if col not in catalog.id_of:
                raise UnknownKey(col)
            pos = table.columns.index(col)
            tid = catalog.id_of[col]
            out = binaries.setdefault(tid, BinaryTable(tid, col))
            for row in table.rows:
                if row[pos] is None:
                    continue
                entity = KEY_SEP.join(row[k] or "" for k in key_pos)
                out.add(entity, row[pos], _cell_kind(row[pos]))
    return binaries


def build_store(ds: SourceDataset, catalog: AttributeCatalog) -> DsmStore:
    json_tables, arrays = decompose_json(ds.json_docs, catalog)
    store = DsmStore(arrays=arrays)
    store.binaries.update(json_tables)
    store.binaries.update(decompose_rdf(ds.rdf_triples, catalog))
    store.binaries.update(decompose_relational(ds.rel_tables, catalog))
    store.binaries = dict(sorted(store.binaries.items()))
    return store


def initial_state(catalog: AttributeCatalog) -> SchemaState:
    return SchemaState({i: (i,) for i in catalog.actions})


def source_value_cells(ds: SourceDataset) -> int:
    """Scalar cells in the raw sources (array elements count one each)."""
    total = 0
    for _, pairs in ds.json_docs:
        for _, v in pairs:
            if isinstance(v, list):
                total += len(v)
            elif v is not None:
                total += 1
    total += len(ds.rdf_triples)
    for t in ds.rel_tables:
        cols = [t.columns.index(c) for c in t.attribute_columns]
        total += sum(1 for row in t.rows for c in cols if row[c] is not None)
    return total


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.\-]", "_", name)


def dump_csv(store: DsmStore, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for tid, table in store.binaries.items():
        path = out / f"{tid}_{_safe(table.name)}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("entity", "value"))
            w.writerows(table.rows)
        written.append(path)
    for table in store.arrays.values():
        path = out / f"{table.name}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("objId", "key", "index", "val"))
            w.writerows(table.rows)
        written.append(path)
    return written

