import pathlib

import numpy as np
import pytest

from netab.graph import complete_graph, from_edges, generate_er, pairs_network

DATA = pathlib.Path(__file__).parent / "data"


def path_graph(n):
    return from_edges(n, [(i, i + 1) for i in range(n - 1)])


def star(k):
    return from_edges(k + 1, [(0, i) for i in range(1, k + 1)])


def random_network(rng, n, p=None):
    """Random graph on exactly ``n`` vertices, every vertex of degree >= 1."""
    p = rng.uniform(0.15, 0.7) if p is None else p
    while True:
        iu = np.triu_indices(n, k=1)
        hit = rng.random(iu[0].size) < p
        net = from_edges(n, np.column_stack([iu[0][hit], iu[1][hit]]))
        if net.degrees.min() > 0:
            return net


@pytest.fixture
def k4():
    return complete_graph(4)


@pytest.fixture
def pairs12():
    return pairs_network(12)


@pytest.fixture(scope="session")
def sample_edges():
    return DATA / "ego52.edges"


@pytest.fixture(scope="session")
def er_100():
    return generate_er(100, 0.1, 42)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion; printed in the summary."""
    def record(label: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
