import json
import time
from importlib import resources
from pathlib import Path

import pytest

from narrativekit import corpus as C
from narrativekit.pipeline import load_config, run

_ACCEPTANCE: list[str] = []


def record(criterion: str, passed: bool, detail: str = "") -> None:
    """Log one acceptance line; shown in the terminal summary."""
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}" + (f" -- {detail}" if detail else "")
    print(line)
    _ACCEPTANCE.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def mini_path() -> Path:
    return Path(str(resources.files("narrativekit.data").joinpath("mini_corpus.jsonl")))


@pytest.fixture(scope="session")
def mini_corpus(mini_path):
    return C.load_corpus(mini_path)


@pytest.fixture(scope="session")
def mini_filtered(mini_corpus):
    return C.filter_by_lemmas(mini_corpus)


@pytest.fixture
def write_jsonl(tmp_path):
    def _write(records, name="corpus.jsonl"):
        p = tmp_path / name
        with open(p, "w", encoding="utf-8") as fh:
            for r in records:
                fh.write((r if isinstance(r, str) else json.dumps(r)) + "\n")
        return p
    return _write


@pytest.fixture(scope="session")
def mini_runs(tmp_path_factory):
    """Two independent ``all`` runs on the bundled mini-corpus, seed 42."""
    out = []
    for i in range(2):
        ws = tmp_path_factory.mktemp(f"run{i}")
        cfg = load_config("builtin:mini", workspace=str(ws), seed=42)
        t0 = time.perf_counter()
        report = run("all", cfg)
        out.append({"workspace": ws, "config": cfg, "report": report,
                    "seconds": time.perf_counter() - t0})
    return out
