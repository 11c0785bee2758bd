"""Schema states as partitions, join actions, and what they do to storage and cost."""
from __future__ import annotations

from schemaforge import Project, apply_join, decode_state, materialize, storage_size
from schemaforge.datasets import toy_config

project = Project.from_config(toy_config())
env = project.environment()

# %% Which tables may a given attribute be moved into?
print("pool partners of 1:", sorted(project.pool.partners(1)))

# %% Move attribute 2 into table 1, then 4 into the result
state = project.initial
for action, target in [(2, 1), (4, 1)]:
    outcome = apply_join(state, action, target, project.pool)
    print(f"join {action} -> {target}: accepted={outcome.accepted}  {outcome.state.canon}")
    state = outcome.state

# %% A rejected move leaves the state alone (11 is RDF, 1 is JSON)
print("cross-band join accepted?", apply_join(state, 11, 1, project.pool).accepted)

# %% Materialize and compare storage and analytic workload cost
for label, s in [("initial", project.initial), ("merged", state)]:
    ms = materialize(s, project.store, project.pool)
    print(f"{label:<8} tables={len(s)}  bytes={storage_size(ms)}  cost={env.evaluate(s):.3e} s")

# %% States round-trip through their canonical text form
assert decode_state(state.canon) == state
