from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from schemaforge.datasets import toy_config  # noqa: E402
from schemaforge.pipeline import Project  # noqa: E402

MIXED_JSON = [
    {"_id": 1, "customer": "Mary", "totalPrice": 135, "isMember": True, "items": ["product1", "product2"]},
    {"_id": 2, "customer": "John", "totalPrice": 50},
    {"_id": 3, "customer": "Anne", "isMember": False, "items": ["product3"]},
]
MIXED_NT = """\
<Mary> <type> <Person> .
<Mary> <bornIn> "Helsinki" .
<Mary> <write> "Poems" .
<John> <type> <Person> .
<John> <bornIn> "Oslo" .
"""
MIXED_CSV = "pid,rate\nMary,5\nJohn,3\n"


def write_mixed(root: Path, *, order: str | None = None) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    (root / "orders.jsonl").write_text(
        "".join(json.dumps(d) + "\n" for d in MIXED_JSON), encoding="utf-8"
    )
    (root / "persons.nt").write_text(MIXED_NT, encoding="utf-8")
    (root / "feedback.csv").write_text(MIXED_CSV, encoding="utf-8")
    lines = [
        "json_path = orders.jsonl",
        "rdf_path = persons.nt",
        "csv_paths = feedback:feedback.csv:pid",
        "threshold1 = 10",
        "threshold2 = 20",
    ]
    if order:
        lines.append(f"id_order = {order}")
    conf = root / "mixed.conf"
    conf.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return conf


@pytest.fixture
def mixed_conf(tmp_path) -> Path:
    return write_mixed(tmp_path / "mixed")


@pytest.fixture
def mixed(mixed_conf) -> Project:
    return Project.from_config(mixed_conf)


@pytest.fixture(scope="session")
def toy() -> Project:
    return Project.from_config(toy_config())


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, title = results[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}")
