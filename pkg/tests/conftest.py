import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from netopt.topology import NetworkGraph  # noqa: E402

ACCEPTANCE_LINES = []


def make_graph(num_nodes, edges, bandwidth=10e6, power=0.1):
    """Graph with uniform parameters from undirected edge pairs."""
    m = len(edges)
    return NetworkGraph.from_edges(num_nodes, edges, [bandwidth] * m, [power] * m, [power] * m)


def weights_for(graph, directed, default=1.0):
    """Weight table with ``directed[(u, v)]`` on listed links and ``default`` elsewhere."""
    w = np.full(graph.num_links, default)
    for (u, v), value in directed.items():
        w[graph.link_id(u, v)] = value
    return w


@pytest.fixture
def diamond():
    # s=0, a=1, b=2, c=3, d=4
    graph = make_graph(5, [(0, 1), (1, 4), (0, 2), (2, 3), (3, 4)])
    weights = weights_for(graph, {(0, 1): 0.9, (1, 4): 0.1, (0, 2): 0.3, (2, 3): 0.3, (3, 4): 0.3})
    return graph, weights


@pytest.fixture
def record_acceptance():
    def record(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
