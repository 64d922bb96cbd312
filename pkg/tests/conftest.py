import itertools
import math

import numpy as np
import pytest

from polytree.generate import GenConfig, generate_sem, random_prufer_tree
from polytree.graphs import Dag

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_feasible_config(rng, p_range=(5, 50), d_range=(1, 5), seed=0):
    """Parameters for which the forced-in-degree hub itself can host rho_max."""
    p = int(rng.integers(*p_range, endpoint=True))
    d = int(rng.integers(*d_range, endpoint=True))
    d = min(d, p - 1)
    omega_min = float(rng.uniform(0.05, 0.2))
    budget = 1 - omega_min
    rho_min = float(rng.uniform(0.1, min(0.5, math.sqrt(budget / d) * 0.9)))
    rho_max = math.sqrt(rng.uniform(rho_min ** 2, budget - rho_min ** 2 * (d - 1)))
    return GenConfig(p, d, rho_min, rho_max, omega_min, seed=seed)


def random_sem(rng, **kw):
    cfg = random_feasible_config(rng, seed=int(rng.integers(2**32)), **kw)
    return generate_sem(cfg)


def random_polytree_dag(rng, p):
    """Uniform tree with independent fair-coin edge directions."""
    if p < 3:
        return Dag(p, frozenset({(0, 1)} if p == 2 else ()))
    t = random_prufer_tree(p, rng)
    edges = [(i, j) if rng.random() < 0.5 else (j, i) for i, j in t.sorted_edges()]
    return Dag(p, frozenset(edges))


def brute_force_v_structures(g):
    adjacent = {frozenset(e) for e in g.edges}
    out = set()
    for i, k, j in itertools.permutations(range(g.p), 3):
        if i < j and (i, k) in g.edges and (j, k) in g.edges and frozenset((i, j)) not in adjacent:
            out.add((i, k, j))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
