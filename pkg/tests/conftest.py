import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@st.composite
def digraphs(draw, max_nodes=7):
    """Arbitrary weighted digraph (possibly disconnected) as a weight matrix."""
    n = draw(st.integers(1, max_nodes))
    mask = draw(st.lists(st.booleans(), min_size=n * n, max_size=n * n))
    vals = draw(st.lists(st.floats(0.1, 2.0), min_size=n * n, max_size=n * n))
    w = np.array(vals).reshape(n, n) * np.array(mask).reshape(n, n)
    np.fill_diagonal(w, 0.0)
    return w


@pytest.fixture(autouse=True)
def _clear_tol_env(monkeypatch):
    monkeypatch.delenv("GCL_TOL_ZERO", raising=False)


def graph_and_mutation(seed, max_agents=30):
    """Corpus graph for ``seed`` plus its edge-deleted variant when one exists."""
    from groupcons.errors import GraphError
    from groupcons.generate import delete_edges, random_corpus_graph

    g = random_corpus_graph(seed, max_agents=max_agents)
    try:
        return [g, delete_edges(g, seed)]
    except GraphError:
        return [g]
