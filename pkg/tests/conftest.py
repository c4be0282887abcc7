from __future__ import annotations

import pytest

from bdroute.graph import Graph

S, A, B, D = 0, 1, 2, 3

_ACCEPTANCE: list[str] = []


@pytest.fixture
def t1() -> Graph:
    """Four-node example: s->a->d is cheapest, s->b->d fastest, s->d is a poor direct link."""
    return Graph(4, [(S, A, 1, 2), (A, D, 1, 2), (S, B, 2, 1), (B, D, 2, 1), (S, D, 5, 5)])


@pytest.fixture(scope="session")
def acceptance_log():
    def record(criterion: str, passed: bool, detail: str) -> None:
        _ACCEPTANCE.append(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
