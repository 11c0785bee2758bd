"""Source ingestion, attribute id assignment and the join constraint pool.

Every JSON key, RDF predicate and relational attribute gets one integer id.
The ids live in three disjoint bands separated by two thresholds::

    JSON keys        1 .. n
    predicates       threshold1 + 1 .. threshold1 + m
    rel. attributes  threshold2 + 1 .. threshold2 + p

Each id doubles as a join action and as the name of the table it seeds.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import (
    ConfigError,
    DuplicateObjectId,
    MalformedLine,
    NameCollision,
    ThresholdTooSmall,
)

JSON = "json"
RDF = "rdf"
REL = "rel"
BANDS = (JSON, RDF, REL)

OBJECT_ID_KEY = "_id"
KEY_SEP = "\x1f"

# join-key column labels used by the default pool
JSON_ENTITY_COL = "_id"
RDF_ENTITY_COL = "subject"


def render_scalar(value) -> str:
    """Text form of a scalar: numbers as decimal strings, booleans lower-case."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    return str(value)


# --------------------------------------------------------------------------
# source dataset


@dataclass
class RelationalTable:
    name: str
    key_columns: tuple[str, ...]
    columns: tuple[str, ...]
    rows: list[tuple[str | None, ...]] = field(default_factory=list)

    @property
    def attribute_columns(self) -> tuple[str, ...]:
        return tuple(c for c in self.columns if c not in self.key_columns)


@dataclass
class SourceDataset:
    """Parsed multi-model input.

    ``json_docs`` holds ``(object_id, [(key, value), ...])`` with nested objects
    already flattened to dotted key paths; values are scalars, ``None`` or lists.
    """

    json_docs: list[tuple[str, list[tuple[str, object]]]] = field(default_factory=list)
    rdf_triples: list[tuple[str, str, str]] = field(default_factory=list)
    rel_tables: list[RelationalTable] = field(default_factory=list)

    @property
    def counts(self) -> tuple[int, int, int]:
        """(objects, triples, relational rows)."""
        return (
            len(self.json_docs),
            len(self.rdf_triples),
            sum(len(t.rows) for t in self.rel_tables),
        )


@dataclass
class CsvSource:
    table: str
    path: Path
    key_columns: tuple[str, ...]


@dataclass
class IngestConfig:
    json_path: Path | None = None
    rdf_path: Path | None = None
    csv_sources: list[CsvSource] = field(default_factory=list)
    threshold1: int | None = None
    threshold2: int | None = None
    constraint_pool_path: Path | None = None
    workload_path: Path | None = None
    stats_path: Path | None = None
    # remaining keys (training defaults, cost constants) kept verbatim
    extra: dict[str, str] = field(default_factory=dict)

    def input_paths(self) -> list[Path]:
        paths = [p for p in (self.json_path, self.rdf_path) if p is not None]
        paths += [s.path for s in self.csv_sources]
        return paths


_PATH_KEYS = ("json_path", "rdf_path", "constraint_pool_path", "workload_path", "stats_path")


def load_config(path) -> IngestConfig:
    """Read a flat ``key = value`` config file.

    Relative paths are resolved against the directory holding the config.
    ``csv_paths`` is a comma-separated list of ``table:path:keycols`` entries;
    composite keys separate their columns with ``|``.
    """
    path = Path(path)
    base = path.parent
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for no, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise MalformedLine(path, no, "expected 'key = value'")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()

    cfg = IngestConfig()
    for key in _PATH_KEYS:
        if values.get(key):
            setattr(cfg, key, base / values.pop(key))
        else:
            values.pop(key, None)
    for key in ("threshold1", "threshold2"):
        if values.get(key):
            try:
                setattr(cfg, key, int(values.pop(key)))
            except ValueError:
                raise ConfigError(f"{key} must be an integer") from None
        else:
            values.pop(key, None)
    csv_spec = values.pop("csv_paths", "")
    for entry in filter(None, (e.strip() for e in csv_spec.split(","))):
        parts = entry.split(":")
        if len(parts) != 3 or not parts[0] or not parts[1]:
            raise ConfigError(f"bad csv_paths entry {entry!r}; want table:path:keycols")
        keys = tuple(k.strip() for k in parts[2].split("|") if k.strip())
        if not keys:
            raise ConfigError(f"csv table {parts[0]!r} declares no key columns")
        cfg.csv_sources.append(CsvSource(parts[0], base / parts[1], keys))
    cfg.extra = values
    return cfg


def _flatten(obj: Mapping, prefix: str = "") -> Iterable[tuple[str, object]]:
    for key, value in obj.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            yield from _flatten(value, name + ".")
        else:
            yield name, value


def read_json_lines(path) -> list[tuple[str, list[tuple[str, object]]]]:
    docs = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for no, raw in enumerate(fh, 1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise MalformedLine(path, no, exc.msg) from None
            if not isinstance(obj, dict):
                raise MalformedLine(path, no, "not a JSON object")
            if OBJECT_ID_KEY in obj:
                oid = render_scalar(obj.pop(OBJECT_ID_KEY))
            else:
                oid = str(len(docs) + 1)
            if oid in seen:
                raise DuplicateObjectId(oid, no)
            seen.add(oid)
            docs.append((oid, list(_flatten(obj))))
    return docs


_IRI = r"<([^>]*)>"
_BNODE = r"(_:[A-Za-z0-9_.\-]+)"
_LITERAL = r'"((?:[^"\\]|\\.)*)"(?:@[A-Za-z0-9\-]+|\^\^<[^>]*>)?'
_NT_LINE = re.compile(
    rf"^\s*(?:{_IRI}|{_BNODE})\s+{_IRI}\s+(?:{_IRI}|{_BNODE}|{_LITERAL})\s*\.\s*$"
)
_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


def _unescape(text: str) -> str:
    def sub(m: re.Match) -> str:
        esc = m.group(1)
        if esc[0] in "uU":
            return chr(int(esc[1:], 16))
        return _ESCAPES[esc]

    return re.sub(r"\\(u[0-9A-Fa-f]{4}|U[0-9A-Fa-f]{8}|[tbnrf\"'\\])", sub, text)


def parse_ntriple(line: str) -> tuple[str, str, str] | None:
    """Parse one N-Triples line; ``None`` for blank/comment lines.

    IRIs lose their angle brackets and literals lose quotes, language tags
    and datatypes. Raises ``ValueError`` on anything else.
    """
    stripped = line.strip()
    if not stripped or stripped.startswith("#"):
        return None
    m = _NT_LINE.match(stripped)
    if m is None:
        raise ValueError("not an N-Triples statement")
    s_iri, s_bnode, pred, o_iri, o_bnode, o_lit = m.groups()
    subject = s_iri if s_iri is not None else s_bnode
    if o_iri is not None:
        obj = o_iri
    elif o_bnode is not None:
        obj = o_bnode
    else:
        obj = _unescape(o_lit)
    if not subject or not pred or obj == "":
        raise ValueError("empty triple field")
    return subject, pred, obj


def read_ntriples(path) -> list[tuple[str, str, str]]:
    triples = []
    with open(path, encoding="utf-8") as fh:
        for no, raw in enumerate(fh, 1):
            try:
                triple = parse_ntriple(raw)
            except ValueError as exc:
                raise MalformedLine(path, no, str(exc)) from None
            if triple is not None:
                triples.append(triple)
    return triples


def read_csv_table(source: CsvSource) -> RelationalTable:
    with open(source.path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return RelationalTable(source.table, source.key_columns, source.key_columns)
        header = tuple(h.strip() for h in header)
        table = RelationalTable(source.table, source.key_columns, header)
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedLine(
                    source.path, reader.line_num, f"expected {len(header)} fields, got {len(row)}"
                )
            table.rows.append(tuple(v if v != "" else None for v in row))
    return table


def ingest_sources(config: IngestConfig) -> SourceDataset:
    for p in config.input_paths():
        if not Path(p).exists():
            raise FileNotFoundError(p)
    ds = SourceDataset()
    if config.json_path is not None:
        ds.json_docs = read_json_lines(config.json_path)
    if config.rdf_path is not None:
        ds.rdf_triples = read_ntriples(config.rdf_path)
    for source in config.csv_sources:
        ds.rel_tables.append(read_csv_table(source))
    return ds


# --------------------------------------------------------------------------
# attribute catalog


@dataclass(frozen=True)
class AttributeCatalog:
    n: int
    m: int
    p: int
    threshold1: int
    threshold2: int
    id_of: Mapping[str, int]
    name_of: Mapping[int, str]
    # relational attribute id -> declared key columns of its source table
    rel_keys: Mapping[int, tuple[str, ...]] = field(default_factory=dict)

    @property
    def q(self) -> int:
        return self.n + self.m + self.p

    @property
    def actions(self) -> tuple[int, ...]:
        return tuple(sorted(self.name_of))

    def band_of(self, attr_id: int) -> str:
        if attr_id not in self.name_of:
            raise KeyError(attr_id)
        if attr_id <= self.threshold1:
            return JSON
        if attr_id <= self.threshold2:
            return RDF
        return REL

    def ids_in(self, band: str) -> list[int]:
        return [i for i in self.actions if self.band_of(i) == band]

    def resolve(self, name: str) -> int:
        """Id for ``name``; IRIs may also be addressed by their local name."""
        if name in self.id_of:
            return self.id_of[name]
        hits = [i for n, i in self.id_of.items() if _local_name(n) == name]
        if len(hits) == 1:
            return hits[0]
        if hits:
            raise KeyError(f"{name!r} is ambiguous")
        raise KeyError(name)


def _local_name(name: str) -> str:
    return re.split(r"[/#]", name)[-1]


def _auto_threshold(count: int) -> int:
    # smallest power of ten strictly greater than count, at least 10
    t = 10
    while t <= count:
        t *= 10
    return t


def _ordered(names: Iterable[str], order: str) -> list[str]:
    unique = list(dict.fromkeys(names))
    if order == "lexicographic":
        return sorted(unique)
    if order == "appearance":
        return unique
    raise ValueError(f"unknown id order {order!r}")


def build_catalog(
    ds: SourceDataset,
    threshold1: int | None = None,
    threshold2: int | None = None,
    *,
    order: str = "lexicographic",
) -> AttributeCatalog:
    """Assign ids densely inside each band.

    ``order="lexicographic"`` (default) sorts names within a band;
    ``order="appearance"`` keeps first-seen order. Thresholds left as ``None``
    are picked as the next power of ten above the band they close off.
    """
    keys = _ordered((k for _, kv in ds.json_docs for k, _ in kv), order)
    preds = _ordered((p for _, p, _ in ds.rdf_triples), order)
    rel_keys: dict[str, tuple[str, ...]] = {}
    for table in ds.rel_tables:
        for col in table.attribute_columns:
            if col in rel_keys:
                raise NameCollision(f"relational attribute {col!r} appears in two tables")
            rel_keys[col] = table.key_columns
    attrs = _ordered(rel_keys, order)

    n, m, p = len(keys), len(preds), len(attrs)
    if threshold1 is None:
        threshold1 = _auto_threshold(n)
    if threshold2 is None:
        threshold2 = threshold1 + _auto_threshold(m)
    if n > threshold1:
        raise ThresholdTooSmall(JSON, n, threshold1)
    if threshold1 + m > threshold2:
        raise ThresholdTooSmall(RDF, m, threshold2 - threshold1)

    id_of: dict[str, int] = {}
    for base, names in ((0, keys), (threshold1, preds), (threshold2, attrs)):
        for offset, name in enumerate(names, 1):
            if name in id_of:
                raise NameCollision(f"name {name!r} is used by two data models")
            id_of[name] = base + offset
    name_of = {i: name for name, i in id_of.items()}
    return AttributeCatalog(
        n=n,
        m=m,
        p=p,
        threshold1=threshold1,
        threshold2=threshold2,
        id_of=id_of,
        name_of=name_of,
        rel_keys={id_of[a]: rel_keys[a] for a in attrs},
    )


def dump_catalog(catalog: AttributeCatalog, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"threshold1={catalog.threshold1}\n")
        fh.write(f"threshold2={catalog.threshold2}\n")
        for i in catalog.actions:
            keys = "|".join(catalog.rel_keys.get(i, ()))
            fh.write(f"{i}\t{catalog.band_of(i)}\t{catalog.name_of[i]}\t{keys}\n")


def load_catalog(path) -> AttributeCatalog:
    header: dict[str, int] = {}
    rows = []
    with open(path, encoding="utf-8") as fh:
        for no, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line:
                continue
            if "\t" not in line:
                k, _, v = line.partition("=")
                header[k] = int(v)
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise MalformedLine(path, no, "expected id, band, name, keys")
            rows.append((int(parts[0]), parts[1], parts[2], parts[3]))
    counts = {b: sum(1 for r in rows if r[1] == b) for b in BANDS}
    return AttributeCatalog(
        n=counts[JSON],
        m=counts[RDF],
        p=counts[REL],
        threshold1=header["threshold1"],
        threshold2=header["threshold2"],
        id_of={name: i for i, _, name, _ in rows},
        name_of={i: name for i, _, name, _ in rows},
        rel_keys={i: tuple(k.split("|")) for i, band, _, k in rows if band == REL},
    )


# --------------------------------------------------------------------------
# constraint pool


@dataclass(frozen=True)
class ConstraintPool:
    """Whitelist of attribute pairs allowed to share a table.

    ``pairs`` maps ``(low_id, high_id)`` to the join-key column of each side,
    in the same order. Lookups are symmetric.
    """

    pairs: Mapping[tuple[int, int], tuple[str, str]] = field(default_factory=dict)

    def allows(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.pairs

    def columns(self, a: int, b: int) -> tuple[str, str]:
        cols = self.pairs[(min(a, b), max(a, b))]
        return cols if a <= b else (cols[1], cols[0])

    def partners(self, a: int) -> set[int]:
        out = set()
        for x, y in self.pairs:
            if x == a:
                out.add(y)
            elif y == a:
                out.add(x)
        return out

    def __len__(self) -> int:
        return len(self.pairs)

    @classmethod
    def from_pairs(cls, entries: Iterable[tuple[int, int, str, str]]) -> ConstraintPool:
        pairs = {}
        for a, b, col_a, col_b in entries:
            if a == b:
                continue
            pairs[(a, b) if a < b else (b, a)] = (col_a, col_b) if a < b else (col_b, col_a)
        return cls(pairs)


def default_pool(catalog: AttributeCatalog, joinable: Iterable[int] | None = None) -> ConstraintPool:
    """Same-band pool: JSON keys pair on object id, predicates on subject,
    relational attributes when their tables declare the same key columns.

    ``joinable`` restricts the pool to the given ids (the DSM store passes the
    ids whose binary table holds at most one value per entity).
    """
    allowed = set(catalog.actions) if joinable is None else set(joinable)
    entries = []
    for band in BANDS:
        ids = [i for i in catalog.ids_in(band) if i in allowed]
        for x, a in enumerate(ids):
            for b in ids[x + 1 :]:
                if band == JSON:
                    entries.append((a, b, JSON_ENTITY_COL, JSON_ENTITY_COL))
                elif band == RDF:
                    entries.append((a, b, RDF_ENTITY_COL, RDF_ENTITY_COL))
                elif catalog.rel_keys[a] == catalog.rel_keys[b]:
                    cols = "|".join(catalog.rel_keys[a])
                    entries.append((a, b, cols, cols))
    return ConstraintPool.from_pairs(entries)


def load_pool(path, catalog: AttributeCatalog | None = None) -> ConstraintPool:
    """Read ``idA,idB,colA=colB`` lines; ``#`` starts a comment."""
    entries = []
    with open(path, encoding="utf-8") as fh:
        for no, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",", 2)
            if len(parts) != 3 or "=" not in parts[2]:
                raise MalformedLine(path, no, "expected idA,idB,colA=colB")
            try:
                a, b = int(parts[0]), int(parts[1])
            except ValueError:
                raise MalformedLine(path, no, "ids must be integers") from None
            if catalog is not None:
                for i in (a, b):
                    if i not in catalog.name_of:
                        raise MalformedLine(path, no, f"id {i} is not in the catalog")
            col_a, _, col_b = parts[2].partition("=")
            entries.append((a, b, col_a.strip(), col_b.strip()))
    return ConstraintPool.from_pairs(entries)


def dump_pool(pool: ConstraintPool, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for (a, b), (ca, cb) in sorted(pool.pairs.items()):
            fh.write(f"{a},{b},{ca}={cb}\n")
