import json
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


def read_jsonl(name):
    with open(DATA / name, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


@pytest.fixture(scope="session")
def corpus():
    return read_jsonl("verify_corpus.jsonl")


@pytest.fixture(scope="session")
def reference_problems():
    from sgac.data import Problem

    return [Problem.from_json(d) for d in read_jsonl("reference_candidates.jsonl")]


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
