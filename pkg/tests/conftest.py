import numpy as np
import pytest

from kesbn.data import EXAMPLE1_G1_ARCS, EXAMPLE1_G2_ARCS, Dataset, trap_dataset
from kesbn.graph import Dag


def random_dag(rng, n, p=0.4):
    perm = rng.permutation(n)
    arcs = [(int(perm[i]), int(perm[j])) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return Dag(n, arcs)


def random_dataset(rng, n, rows, max_card=3):
    cards = tuple(int(c) for c in rng.integers(2, max_card + 1, size=n))
    values = np.stack([rng.integers(0, c, size=rows) for c in cards], axis=1)
    return Dataset(tuple(f"V{i}" for i in range(n)), cards, values)


def closure_by_search(g):
    """Reachability by depth-first search from every node."""
    succ = {v: [h for t, h in g.arcs() if t == v] for v in range(g.n)}
    out = np.zeros((g.n, g.n), dtype=bool)
    for s in range(g.n):
        stack = list(succ[s])
        while stack:
            v = stack.pop()
            if not out[s, v]:
                out[s, v] = True
                stack.extend(succ[v])
    return out


@pytest.fixture
def g1():
    return Dag(4, EXAMPLE1_G1_ARCS)


@pytest.fixture
def g2():
    return Dag(4, EXAMPLE1_G2_ARCS)


@pytest.fixture(scope="session")
def trap1():
    return trap_dataset(1, 20000, 7)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num:2d}. {title}: {detail}")
