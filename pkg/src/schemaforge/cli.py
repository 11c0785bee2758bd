"""``schema-forge`` command line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .catalog import dump_catalog
from .errors import ConfigError, IngestError, MalformedEncoding, SchemaForgeError, ThresholdTooSmall
from .pipeline import Project, format_report
from .qlearn import TrainConfig

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

TRAIN_HELP = """\
Values are taken, in order of precedence, from command-line flags, then the
config file (keys episodes, epsilon, alpha, gamma, max_iters, seed, env,
workers), then built-in defaults."""


def _error(msg: str, code: int) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def _load(config_path: str) -> Project:
    path = Path(config_path)
    if not path.exists():
        raise FileNotFoundError(path)
    return Project.from_config(path)


def _guard(fn):
    """Map library failures onto the exit-code contract."""

    def wrapped(args) -> int:
        try:
            return fn(args)
        except FileNotFoundError as exc:
            return _error(f"{exc.filename or exc.args[0]} not found", EXIT_USAGE)
        except (ConfigError, IngestError, ThresholdTooSmall, MalformedEncoding, ValueError) as exc:
            return _error(str(exc), EXIT_USAGE)
        except SchemaForgeError as exc:
            return _error(str(exc), EXIT_RUNTIME)

    return wrapped


@_guard
def cmd_ingest(args) -> int:
    project = _load(args.config)
    cat, store = project.catalog, project.store
    objects, triples, rows = project.dataset.counts
    print(f"json objects      {objects}")
    print(f"rdf triples       {triples}")
    print(f"relational rows   {rows}")
    print(f"json keys (n)     {cat.n}")
    print(f"predicates (m)    {cat.m}")
    print(f"attributes (p)    {cat.p}")
    print(f"actions (q)       {cat.q}")
    print(f"thresholds        {cat.threshold1} {cat.threshold2}")
    print(f"binary tables     {len(store.binaries)}")
    for table in store.arrays.values():
        print(f"{table.name:<17} {len(table)} rows")
    print(f"join pairs        {len(project.pool)}")
    cache = Path(args.cache) if args.cache else Path(args.config).with_suffix(".catalog")
    dump_catalog(cat, cache)
    print(f"catalog written to {cache}")
    return EXIT_OK


def _train_config(args, extra: dict[str, str]) -> TrainConfig:
    def pick(flag, key, cast, default):
        value = getattr(args, flag)
        if value is not None:
            return value
        if key in extra:
            return cast(extra[key])
        return default

    d = TrainConfig()
    return TrainConfig(
        alpha=pick("alpha", "alpha", float, d.alpha),
        gamma=pick("gamma", "gamma", float, d.gamma),
        epsilon=pick("epsilon", "epsilon", float, d.epsilon),
        episodes=pick("episodes", "episodes", int, d.episodes),
        max_iterations=pick("max_iters", "max_iters", int, d.max_iterations),
        seed=pick("seed", "seed", int, d.seed),
        env=pick("env", "env", str, d.env),
    )


@_guard
def cmd_train(args) -> int:
    project = _load(args.config)
    cfg = _train_config(args, project.config.extra)
    workers = args.workers or int(project.config.extra.get("workers", 1))
    env = project.environment(cfg.env, workers=workers)
    report = project.train(cfg, env)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "convergence.csv").write_text(report.convergence_csv(), encoding="utf-8")
    (out / "report.txt").write_text(format_report(report, project.catalog), encoding="utf-8")
    best = project.state(report.best_canon)
    (out / "best_schema.sql").write_text(
        project.sql_artifacts(best)["schema.sql"], encoding="utf-8"
    )
    report.qtables.save(out / "qtables.txt")
    print(f"best schema   {report.best_canon}")
    print(f"best cost     {report.best_cost:.6g} s (initial {report.initial_cost:.6g} s)")
    print(f"episodes      {len(report.convergence)}")
    print(f"wall time     {report.wall_time:.3f} s")
    print(f"artifacts in  {out}")
    return EXIT_OK


@_guard
def cmd_export_ddl(args) -> int:
    project = _load(args.config)
    state = project.state(args.schema)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in project.sql_artifacts(state).items():
        (out / name).write_text(text, encoding="utf-8")
    print(f"wrote schema.sql, load.sql, queries.sql to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="schema-forge",
        description="Learn a relational schema for multi-model data.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse sources, print statistics, cache the catalog")
    p.add_argument("--config", required=True)
    p.add_argument("--cache", help="catalog cache path (default: <config>.catalog)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser(
        "train",
        help="run the Double Q-tables search",
        description=TRAIN_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--config", required=True)
    p.add_argument("--episodes", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--env", choices=("analytic", "sql"))
    p.add_argument("--out", default="out")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("export-ddl", help="write DDL, load script and queries for a schema")
    p.add_argument("--schema", required=True, help='canonical state, e.g. "1 3 0 2"')
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="export")
    p.set_defaults(func=cmd_export_ddl)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
