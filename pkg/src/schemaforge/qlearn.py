"""Double Q-tables and the episode loop that searches for a low-cost schema.

``qt_a`` scores (state, action) pairs and picks which attribute to join next;
``qt_join`` is a dense q x q table scoring (action, target table) and picks
the table it joins into. Each episode consumes every action at most once.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .catalog import ConstraintPool
from .env import CostEnvironment, compute_reward
from .errors import EmptyActionSpace, MalformedLine, NoJoinCandidate
from .schema import SchemaState, apply_join

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    alpha: float = 0.1
    gamma: float = 0.9
    epsilon: float = 0.1
    episodes: int = 100
    max_iterations: int = 100
    seed: int = 0
    env: str = "analytic"

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0 <= self.gamma <= 1:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if not 0 <= self.epsilon <= 1:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.episodes < 0 or self.max_iterations < 0:
            raise ValueError("episodes and max_iterations must be nonnegative")


class DoubleQTables:
    def __init__(self, actions: Iterable[int]):
        self.actions = tuple(sorted(actions))
        self.index = {a: i for i, a in enumerate(self.actions)}
        self.qt_a: dict[str, dict[int, float]] = {}
        self.qt_join = np.zeros((len(self.actions), len(self.actions)))

    @property
    def q(self) -> int:
        return len(self.actions)

    def row(self, canon: str) -> dict[int, float]:
        return self.qt_a.setdefault(canon, {})

    def value(self, canon: str, action: int) -> float:
        return self.qt_a.get(canon, {}).get(action, 0.0)

    def join_value(self, action: int, table: int) -> float:
        return float(self.qt_join[self.index[action], self.index[table]])

    def set_join_value(self, action: int, table: int, value: float) -> None:
        self.qt_join[self.index[action], self.index[table]] = value

    def copy(self) -> DoubleQTables:
        out = DoubleQTables(self.actions)
        out.qt_a = {s: dict(r) for s, r in self.qt_a.items()}
        out.qt_join = self.qt_join.copy()
        return out

    def dumps(self) -> str:
        lines = ["qta"]
        for canon in sorted(self.qt_a):
            for action, v in sorted(self.qt_a[canon].items()):
                lines.append(f"{canon}|{action}={float(v)!r}")
        lines.append("qtjoin")
        rows, cols = np.nonzero(self.qt_join)
        for r, c in zip(rows, cols):
            v = float(self.qt_join[r, c])
            lines.append(f"{self.actions[r]},{self.actions[c]}={v!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str, actions: Iterable[int]) -> DoubleQTables:
        qt = cls(actions)
        section = None
        for no, raw in enumerate(text.splitlines(), 1):
            line = raw.rstrip("\n")
            if line in ("qta", "qtjoin"):
                section = line
                continue
            if not line.strip():
                continue
            try:
                key, value = line.rsplit("=", 1)
                if section == "qta":
                    canon, action = key.rsplit("|", 1)
                    qt.row(canon)[int(action)] = float(value)
                elif section == "qtjoin":
                    a, t = key.split(",")
                    qt.set_join_value(int(a), int(t), float(value))
                else:
                    raise ValueError("entry before section header")
            except (ValueError, KeyError) as exc:
                raise MalformedLine("<qtables>", no, str(exc)) from None
        return qt

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path, actions: Iterable[int]) -> DoubleQTables:
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read(), actions)


def _greedy(values: dict[int, float], candidates: list[int]) -> int:
    best, best_v = candidates[0], values.get(candidates[0], 0.0)
    for c in candidates[1:]:
        v = values.get(c, 0.0)
        if v > best_v:
            best, best_v = c, v
    return best


def _epsilon_greedy(values: dict[int, float], candidates: list[int], epsilon: float, rng) -> int:
    if epsilon > 0 and rng.random() < epsilon:
        return candidates[int(rng.integers(len(candidates)))]
    return _greedy(values, candidates)


def select_action(qt_a: dict, canon: str, remaining: Iterable[int], epsilon: float, rng) -> int:
    """Epsilon-greedy over ``qt_a[canon]``; greedy ties go to the lowest id."""
    candidates = sorted(remaining)
    if not candidates:
        raise EmptyActionSpace("no actions left")
    return _epsilon_greedy(qt_a.get(canon, {}), candidates, epsilon, rng)


def join_candidates(action: int, state: SchemaState, pool: ConstraintPool | None) -> list[int]:
    home = state.table_of(action)
    if state.tables[home] != (action,):
        return []
    return [
        t for t in state.tables if t != home and (pool is None or pool.allows(action, t))
    ]


def select_join_target(
    qt: DoubleQTables, action: int, state: SchemaState, pool: ConstraintPool | None, epsilon: float, rng
) -> int:
    candidates = join_candidates(action, state, pool)
    if not candidates:
        raise NoJoinCandidate(f"attribute {action} has no table to join in {state.canon!r}")
    if len(candidates) == 1:
        return candidates[0]
    row = {t: qt.join_value(action, t) for t in candidates}
    return _epsilon_greedy(row, candidates, epsilon, rng)


def update(
    qt: DoubleQTables,
    canon: str,
    action: int,
    target: int | None,
    reward: float,
    next_canon: str,
    remaining: Iterable[int],
    cfg: TrainConfig,
) -> None:
    """One Q-learning step on ``qt_a`` and a one-step value update on ``qt_join``."""
    nxt = qt.qt_a.get(next_canon, {})
    future = max((nxt.get(a, 0.0) for a in remaining), default=0.0)
    row = qt.row(canon)
    old = row.get(action, 0.0)
    row[action] = old + cfg.alpha * (reward + cfg.gamma * future - old)
    if target is not None:
        j = qt.join_value(action, target)
        qt.set_join_value(action, target, j + cfg.alpha * (reward - j))


@dataclass
class Step:
    state: str
    action: int
    target: int | None
    accepted: bool
    reward: float
    next_state: str
    cost: float


@dataclass
class EpisodeTrace:
    steps: list[Step] = field(default_factory=list)
    initial: tuple[str, float] = ("", 0.0)
    best: tuple[str, float] = ("", math.inf)
    final_state: SchemaState | None = None
    valid: bool = True

    @property
    def total_reward(self) -> float:
        return sum(s.reward for s in self.steps)


def run_episode(
    qt: DoubleQTables,
    initial: SchemaState,
    env: CostEnvironment,
    pool: ConstraintPool | None,
    cfg: TrainConfig,
    rng,
) -> EpisodeTrace:
    state = initial
    t_prev = env.evaluate(state)
    trace = EpisodeTrace(initial=(state.canon, t_prev), best=(state.canon, t_prev))
    remaining = set(qt.actions)
    try:
        while remaining and len(trace.steps) < cfg.max_iterations:
            action = select_action(qt.qt_a, state.canon, remaining, cfg.epsilon, rng)
            remaining.discard(action)
            try:
                target = select_join_target(qt, action, state, pool, cfg.epsilon, rng)
            except NoJoinCandidate:
                target = None
            nxt, accepted, reward = state, False, 0.0
            if target is not None:
                outcome = apply_join(state, action, target, pool)
                if outcome.accepted:
                    nxt, accepted = outcome.state, True
                    t_next = env.evaluate(nxt)
                    reward = compute_reward(t_prev, t_next)
                    t_prev = t_next
                    if t_next < trace.best[1]:
                        trace.best = (nxt.canon, t_next)
            update(qt, state.canon, action, target, reward, nxt.canon, remaining, cfg)
            trace.steps.append(
                Step(state.canon, action, target, accepted, reward, nxt.canon, t_prev)
            )
            state = nxt
    except Exception as exc:
        trace.valid = False
        trace.final_state = state
        exc.partial_trace = trace
        raise
    trace.final_state = state
    return trace


@dataclass
class TrainingReport:
    best_canon: str
    best_cost: float
    initial_canon: str
    initial_cost: float
    per_query_costs: dict[str, float] = field(default_factory=dict)
    convergence: list[tuple[int, float, float]] = field(default_factory=list)
    storage_bytes: int = 0
    wall_time: float = 0.0
    qtables: DoubleQTables | None = None
    traces: list[EpisodeTrace] = field(default_factory=list)

    def convergence_csv(self) -> str:
        lines = ["episode,episode_best_cost_seconds,global_best_cost_seconds"]
        lines += [f"{e},{eb!r},{gb!r}" for e, eb, gb in self.convergence]
        return "\n".join(lines) + "\n"


def train(
    cfg: TrainConfig,
    initial: SchemaState,
    env: CostEnvironment,
    pool: ConstraintPool | None,
    qt: DoubleQTables | None = None,
    *,
    keep_traces: bool = False,
) -> TrainingReport:
    """Run ``cfg.episodes`` episodes and keep the cheapest state ever evaluated.

    ``per_query_costs`` and ``storage_bytes`` are left for the caller, which
    owns the store; see :func:`schemaforge.pipeline.Project.train`.
    """
    started = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    if qt is None:
        qt = DoubleQTables(initial.attributes())
    init_cost = env.evaluate(initial)
    best = (initial.canon, init_cost)
    report = TrainingReport(best[0], best[1], initial.canon, init_cost, qtables=qt)
    for episode in range(cfg.episodes):
        trace = run_episode(qt, initial, env, pool, cfg, rng)
        if trace.best[1] < best[1]:
            best = trace.best
        report.convergence.append((episode, trace.best[1], best[1]))
        if keep_traces:
            report.traces.append(trace)
        log.debug("episode %d best %.6g global %.6g", episode, trace.best[1], best[1])
    report.best_canon, report.best_cost = best
    report.wall_time = time.perf_counter() - started
    return report
