"""Learn relational schemas for multi-model (JSON, RDF, relational) data."""

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
from .env import AnalyticEnvironment, SqlEnvironment, SqliteDriver, analytic_cost, compute_reward
from .pipeline import Project, format_report
from .qlearn import DoubleQTables, TrainConfig, run_episode, train
from .rewrite import LogicalQuery, Workload, generate_ddl, generate_load, parse_workload, rewrite_query
from .schema import SchemaState, apply_join, decode_state, encode_state, materialize, storage_size

__version__ = "0.1.0"

__all__ = [
    "analytic_cost",
    "AnalyticEnvironment",
    "apply_join",
    "AttributeCatalog",
    "build_catalog",
    "build_store",
    "compute_reward",
    "ConstraintPool",
    "decode_state",
    "default_pool",
    "DoubleQTables",
    "DsmStore",
    "encode_state",
    "format_report",
    "generate_ddl",
    "generate_load",
    "ingest_sources",
    "IngestConfig",
    "initial_state",
    "load_config",
    "load_pool",
    "LogicalQuery",
    "materialize",
    "parse_workload",
    "Project",
    "rewrite_query",
    "run_episode",
    "SchemaState",
    "SourceDataset",
    "SqlEnvironment",
    "SqliteDriver",
    "storage_size",
    "train",
    "TrainConfig",
    "Workload",
]
