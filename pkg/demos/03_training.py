"""Train the two-table Q-learning policy on the toy workload and inspect convergence."""
from __future__ import annotations

from schemaforge import Project, TrainConfig, format_report
from schemaforge.datasets import toy_config

project = Project.from_config(toy_config())

# %% 100 episodes with the default learning rate, discount and exploration
report = project.train(TrainConfig(episodes=100, epsilon=0.1, seed=7))
print(format_report(report, project.catalog))

# %% The global best only ever goes down
for episode, episode_best, global_best in report.convergence[::10]:
    print(f"episode {episode:>3}  episode best {episode_best:.3e}  global best {global_best:.3e}")

# %% Where did the learned join values concentrate?
qt = report.qtables
action, table = divmod(int(qt.qt_join.argmax()), qt.q)
print("strongest join preference:", qt.actions[action], "->", qt.actions[table])
