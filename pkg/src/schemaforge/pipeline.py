"""Glue from a config file to a trained schema and its artifacts."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .catalog import (
    AttributeCatalog,
    ConstraintPool,
    IngestConfig,
    SourceDataset,
    build_catalog,
    default_pool,
    ingest_sources,
    load_config,
    load_pool,
)
from .dsm import DsmStore, build_store, initial_state
from .env import C_JOIN, C_SCAN, AnalyticEnvironment, SqlEnvironment, driver_from_env, load_row_overrides
from .errors import ConfigError
from .qlearn import DoubleQTables, TrainConfig, TrainingReport, train
from .rewrite import Workload, generate_ddl, generate_load, load_workload, render_queries
from .schema import SchemaState, decode_state, materialize, storage_size


@dataclass
class Project:
    config: IngestConfig
    dataset: SourceDataset
    catalog: AttributeCatalog
    store: DsmStore
    pool: ConstraintPool
    workload: Workload

    @classmethod
    def from_config(cls, config: IngestConfig | str | Path) -> Project:
        if not isinstance(config, IngestConfig):
            config = load_config(config)
        ds = ingest_sources(config)
        order = config.extra.get("id_order", "lexicographic")
        catalog = build_catalog(ds, config.threshold1, config.threshold2, order=order)
        store = build_store(ds, catalog)
        if config.constraint_pool_path is not None:
            pool = load_pool(config.constraint_pool_path, catalog)
        else:
            pool = default_pool(catalog, store.joinable_ids())
        workload = load_workload(config.workload_path) if config.workload_path else Workload()
        return cls(config, ds, catalog, store, pool, workload)

    @property
    def initial(self) -> SchemaState:
        return initial_state(self.catalog)

    def environment(self, kind: str = "analytic", workers: int = 1, driver=None):
        extra = self.config.extra
        if kind == "analytic":
            overrides = None
            if self.config.stats_path is not None:
                overrides = load_row_overrides(self.config.stats_path)
            return AnalyticEnvironment(
                self.catalog,
                self.store,
                self.workload,
                c_scan=float(extra.get("c_scan", C_SCAN)),
                c_join=float(extra.get("c_join", C_JOIN)),
                row_overrides=overrides,
                workers=workers,
            )
        if kind == "sql":
            return SqlEnvironment(
                self.catalog, self.store, self.workload, driver or driver_from_env(), self.pool
            )
        raise ConfigError(f"unknown environment {kind!r}")

    def train(self, cfg: TrainConfig, env=None, qt: DoubleQTables | None = None, **kw) -> TrainingReport:
        env = env or self.environment(cfg.env)
        report = train(cfg, self.initial, env, self.pool, qt, **kw)
        best = self.state(report.best_canon)
        report.per_query_costs = env.per_query(best)
        report.storage_bytes = storage_size(materialize(best, self.store, self.pool))
        return report

    def state(self, canon: str) -> SchemaState:
        state = decode_state(canon)
        if not state.is_partition_of(self.catalog.actions):
            raise ConfigError(f"schema {canon!r} does not partition the catalog ids")
        return state

    def sql_artifacts(self, state: SchemaState) -> dict[str, str]:
        return {
            "schema.sql": generate_ddl(state, self.catalog),
            "load.sql": generate_load(materialize(state, self.store, self.pool)),
            "queries.sql": render_queries(self.workload, state, self.catalog, self.store),
        }


def format_report(report: TrainingReport, catalog: AttributeCatalog) -> str:
    """Deterministic text report; wall time is left out on purpose."""
    lines = [
        f"initial_schema: {report.initial_canon}",
        f"initial_cost_seconds: {report.initial_cost!r}",
        f"best_schema: {report.best_canon}",
        f"best_cost_seconds: {report.best_cost!r}",
        f"storage_bytes: {report.storage_bytes}",
        f"episodes: {len(report.convergence)}",
        "tables:",
    ]
    for tid, attrs in decode_state(report.best_canon).tables.items():
        names = ", ".join(catalog.name_of[a] for a in attrs)
        lines.append(f"  t{tid}: {names}")
    lines.append("per_query_cost_seconds:")
    for qid, cost in report.per_query_costs.items():
        lines.append(f"  {qid}: {cost!r}")
    return "\n".join(lines) + "\n"
