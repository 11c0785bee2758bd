"""Cost environments: map a schema state to the workload's total cost in seconds.

``AnalyticEnvironment`` is a deterministic scan/join cost model over exact
table cardinalities. ``SqlEnvironment`` loads each state into a real engine
through a driver and times the rewritten queries.
"""

from __future__ import annotations

import os
import sqlite3
import statistics
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Protocol

from .catalog import AttributeCatalog, ConstraintPool
from .dsm import DsmStore
from .errors import ConfigError, MalformedLine, SqlError, Timeout
from .rewrite import LogicalQuery, QueryPlan, Workload, generate_ddl, generate_load, plan_query, rewrite_query
from .schema import SchemaState, materialize, table_cardinality

C_SCAN = 1e-7
C_JOIN = 3e-7
REPEATS = 3
DB_URL_VAR = "SCHEMAFORGE_DB_URL"


def compute_reward(t_prev: float, t_next: float) -> float:
    """Reduction in workload time; negative when the new schema is slower."""
    return t_prev - t_next


@dataclass
class CostStatistics:
    row_counts: dict[int, int] = field(default_factory=dict)
    c_scan: float = C_SCAN
    c_join: float = C_JOIN
    array_rows: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.c_scan < 0 or self.c_join < 0:
            raise ValueError("cost constants must be nonnegative")
        if any(v < 0 for v in self.row_counts.values()):
            raise ValueError("row counts must be nonnegative")


def load_row_overrides(path) -> dict[int, int]:
    """Parse ``table_id=rows`` lines."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for no, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tid, sep, rows = line.partition("=")
            try:
                if not sep:
                    raise ValueError
                out[int(tid)] = int(rows)
            except ValueError:
                raise MalformedLine(path, no, "expected table_id=rows") from None
    return out


def plan_cost(plan: QueryPlan, stats: CostStatistics) -> float:
    rows = [stats.row_counts.get(t, 0) for t in plan.tables]
    scan = sum(rows) + sum(stats.array_rows.get(k, 0) for k in plan.arrays.values())
    join = 0
    if rows:
        left = rows[0]
        for right in rows[1:]:
            join += left + right
            # entity equi-join: the running result never outgrows its smaller side
            left = min(left, right)
    return stats.c_scan * scan + stats.c_join * join


def analytic_cost(
    state: SchemaState,
    workload: Workload,
    stats: CostStatistics,
    catalog: AttributeCatalog,
    store: DsmStore | None = None,
) -> float:
    return sum(query_costs(state, workload, stats, catalog, store).values())


def query_costs(state, workload, stats, catalog, store=None) -> dict[str, float]:
    return {
        q.id: plan_cost(plan_query(q, state, catalog, store), stats) for q in workload
    }


class CostEnvironment(Protocol):
    def evaluate(self, state: SchemaState) -> float: ...

    def per_query(self, state: SchemaState) -> dict[str, float]: ...


class _Memo:
    """Canon-keyed cache of per-query costs; inserts are serialized."""

    def __init__(self):
        self._cache: dict[str, dict[str, float]] = {}
        self._lock = threading.Lock()
        self.misses = 0

    def get(self, state: SchemaState, compute) -> dict[str, float]:
        with self._lock:
            hit = self._cache.get(state.canon)
        if hit is not None:
            return hit
        value = compute(state)
        with self._lock:
            if state.canon not in self._cache:
                self._cache[state.canon] = value
                self.misses += 1
            return self._cache[state.canon]

    def __len__(self) -> int:
        return len(self._cache)


class AnalyticEnvironment:
    def __init__(
        self,
        catalog: AttributeCatalog,
        store: DsmStore,
        workload: Workload,
        *,
        c_scan: float = C_SCAN,
        c_join: float = C_JOIN,
        row_overrides: dict[int, int] | None = None,
        workers: int = 1,
    ):
        self.catalog = catalog
        self.store = store
        self.workload = workload
        self.c_scan = c_scan
        self.c_join = c_join
        self.row_overrides = dict(row_overrides or {})
        self.workers = workers
        self._memo = _Memo()
        self._cards: dict[tuple[int, ...], int] = {}
        self._array_rows = {k: len(t) for k, t in store.arrays.items()}

    def statistics(self, state: SchemaState) -> CostStatistics:
        counts = {}
        for tid, attrs in state.tables.items():
            if tid in self.row_overrides:
                counts[tid] = self.row_overrides[tid]
                continue
            if attrs not in self._cards:
                self._cards[attrs] = table_cardinality(self.store, attrs)
            counts[tid] = self._cards[attrs]
        return CostStatistics(counts, self.c_scan, self.c_join, dict(self._array_rows))

    def _compute(self, state: SchemaState) -> dict[str, float]:
        stats = self.statistics(state)

        def one(q: LogicalQuery) -> float:
            return plan_cost(plan_query(q, state, self.catalog, self.store), stats)

        queries = list(self.workload)
        if self.workers > 1 and len(queries) > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                costs = list(pool.map(one, queries))
        else:
            costs = [one(q) for q in queries]
        return {q.id: c for q, c in zip(queries, costs)}

    def per_query(self, state: SchemaState) -> dict[str, float]:
        return dict(self._memo.get(state, self._compute))

    def evaluate(self, state: SchemaState) -> float:
        return sum(self._memo.get(state, self._compute).values())

    @property
    def evaluations(self) -> int:
        return self._memo.misses


# --------------------------------------------------------------------------
# SQL execution


class Driver(Protocol):
    def execute(self, sql: str) -> tuple[int, float]: ...


class SqliteDriver:
    """Embedded driver; ``timeout`` aborts statements running longer (seconds)."""

    def __init__(self, path: str = ":memory:", timeout: float | None = None):
        self.conn = sqlite3.connect(path)
        self.timeout = timeout

    def execute(self, sql: str) -> tuple[int, float]:
        deadline = None if self.timeout is None else time.perf_counter() + self.timeout
        if deadline is not None:
            self.conn.set_progress_handler(lambda: int(time.perf_counter() > deadline), 1000)
        start = time.perf_counter()
        try:
            cur = self.conn.execute(sql)
            rows = cur.fetchall()
        except sqlite3.OperationalError as exc:
            if deadline is not None and "interrupted" in str(exc):
                raise TimeoutError(str(exc)) from None
            raise
        finally:
            if deadline is not None:
                self.conn.set_progress_handler(None, 0)
        elapsed = time.perf_counter() - start
        self.conn.commit()
        return len(rows), elapsed

    def close(self) -> None:
        self.conn.close()


def driver_from_env() -> SqliteDriver:
    url = os.environ.get(DB_URL_VAR, "")
    if not url or url in ("sqlite://", "sqlite:///:memory:"):
        return SqliteDriver()
    if url.startswith("sqlite:///"):
        return SqliteDriver(url[len("sqlite:///") :])
    raise ConfigError(f"{DB_URL_VAR}={url!r}: only sqlite URLs have a built-in driver")


def executor_query_costs(
    state: SchemaState,
    workload: Workload,
    driver: Driver,
    catalog: AttributeCatalog,
    store: DsmStore | None = None,
    repeats: int = REPEATS,
) -> dict[str, float]:
    out = {}
    for q in workload:
        sql = rewrite_query(q, state, catalog, store)
        timings = []
        for _ in range(repeats):
            try:
                _, elapsed = driver.execute(sql)
            except TimeoutError as exc:
                raise Timeout(q.id, str(exc) or "timed out") from None
            except Exception as exc:
                raise SqlError(q.id, str(exc)) from exc
            timings.append(elapsed)
        out[q.id] = statistics.median(timings)
    return out


def executor_evaluate(state, workload, driver, catalog, store=None, repeats: int = REPEATS) -> float:
    """Sum over queries of the median of ``repeats`` timed runs."""
    return sum(executor_query_costs(state, workload, driver, catalog, store, repeats).values())


def run_script(driver: Driver, script: str) -> None:
    for line in script.splitlines():
        line = line.strip()
        if line and not line.startswith("--"):
            driver.execute(line)


class SqlEnvironment:
    """Materializes each new state into the driver's database and times the workload."""

    def __init__(
        self,
        catalog: AttributeCatalog,
        store: DsmStore,
        workload: Workload,
        driver: Driver,
        pool: ConstraintPool | None = None,
        repeats: int = REPEATS,
    ):
        self.catalog = catalog
        self.store = store
        self.workload = workload
        self.driver = driver
        self.pool = pool
        self.repeats = repeats
        self._memo = _Memo()
        self._lock = threading.Lock()
        self._created: list[str] = []

    def _load(self, state: SchemaState) -> None:
        for name in self._created:
            self.driver.execute(f"DROP TABLE IF EXISTS {name}")
        ddl = generate_ddl(state)
        self._created = [
            line.split()[2] for line in ddl.splitlines() if line.startswith("CREATE TABLE")
        ]
        run_script(self.driver, ddl)
        run_script(self.driver, generate_load(materialize(state, self.store, self.pool)))

    def _compute(self, state: SchemaState) -> dict[str, float]:
        # one connection: loading and timing must not interleave
        with self._lock:
            self._load(state)
            return executor_query_costs(
                state, self.workload, self.driver, self.catalog, self.store, self.repeats
            )

    def per_query(self, state: SchemaState) -> dict[str, float]:
        return dict(self._memo.get(state, self._compute))

    def evaluate(self, state: SchemaState) -> float:
        return sum(self._memo.get(state, self._compute).values())
