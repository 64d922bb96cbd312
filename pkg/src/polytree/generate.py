"""Random polytree SEMs and the two lower-bound model families."""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleConfig, InfeasibleDegree, InvalidRho
from .graphs import Dag, Skeleton
from .sem import LinearSem

_FEAS_TOL = 1e-12


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class GenConfig:
    p: int
    d_in_max: int
    rho_min: float
    rho_max: float
    omega_min: float
    seed: int = 0

    def __post_init__(self):
        if self.p < 3:
            raise InfeasibleConfig("p must be at least 3")
        if not 1 <= self.d_in_max <= self.p - 1:
            raise InfeasibleConfig("d_in_max must lie in [1, p-1]")
        if not 0 < self.rho_min <= self.rho_max < 1:
            raise InfeasibleConfig("need 0 < rho_min <= rho_max < 1")
        if self.omega_min <= 0:
            raise InfeasibleConfig("omega_min must be positive")
        budget = 1 - self.omega_min
        if self.rho_max ** 2 > budget + _FEAS_TOL:
            raise InfeasibleConfig("rho_max^2 + omega_min exceeds 1")
        if self.d_in_max * self.rho_min ** 2 > budget + _FEAS_TOL:
            raise InfeasibleConfig("d_in_max * rho_min^2 + omega_min exceeds 1")


# -- Prufer sequences --------------------------------------------------------

def prufer_decode(seq, p: int | None = None) -> Skeleton:
    seq = [int(x) for x in seq]
    p = len(seq) + 2 if p is None else p
    if len(seq) != p - 2 or any(not 0 <= x < p for x in seq):
        raise ValueError(f"not a Prufer sequence for p={p}: {seq}")
    degree = [1] * p
    for x in seq:
        degree[x] += 1
    leaves = [v for v in range(p) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, x))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    u, v = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((u, v))
    return Skeleton(p, frozenset(edges))


def prufer_encode(t: Skeleton) -> list[int]:
    if not t.is_tree():
        raise ValueError("Prufer encoding needs a tree")
    adj = [set(n) for n in t.neighbors()]
    leaves = [v for v in range(t.p) if len(adj[v]) == 1]
    heapq.heapify(leaves)
    seq = []
    for _ in range(t.p - 2):
        leaf = heapq.heappop(leaves)
        (nbr,) = adj[leaf]
        seq.append(nbr)
        adj[nbr].discard(leaf)
        if len(adj[nbr]) == 1:
            heapq.heappush(leaves, nbr)
    return seq


def random_prufer_tree(p: int, seed=None) -> Skeleton:
    """Uniform labeled tree on ``p`` nodes."""
    if p < 3:
        raise ValueError("p must be at least 3")
    rng = _rng(seed)
    return prufer_decode(rng.integers(0, p, size=p - 2), p)


def _forced_prufer_tree(p: int, d_in_max: int, rng: np.random.Generator) -> tuple[Skeleton, int]:
    seq = rng.integers(0, p, size=p - 2)
    hub = int(rng.integers(0, p))
    if d_in_max > 1:
        slots = rng.choice(p - 2, size=d_in_max - 1, replace=False)
        seq[slots] = hub
    return prufer_decode(seq, p), hub


def orient_with_forced_indegree(t: Skeleton, d_in_max: int, seed=None, hub: int | None = None) -> Dag:
    """Orient a tree so that ``hub`` gets exactly ``d_in_max`` parents and no
    other node exceeds that many.

    Edges away from the hub are oriented by fair coin flips in breadth-first
    order; a flip that would push an already saturated node over the cap is
    reversed (the far endpoint is always unsaturated at that point).
    """
    if not t.is_tree():
        raise ValueError("expected a tree skeleton")
    if d_in_max < 1:
        raise InfeasibleDegree("d_in_max must be at least 1")
    rng = _rng(seed)
    nbrs = t.neighbors()
    if hub is None:
        eligible = [v for v in range(t.p) if len(nbrs[v]) >= d_in_max]
        if not eligible:
            raise InfeasibleDegree(f"no node has degree >= {d_in_max}")
        hub = int(rng.choice(eligible))
    elif len(nbrs[hub]) < d_in_max:
        raise InfeasibleDegree(f"node {hub} has degree {len(nbrs[hub])} < {d_in_max}")

    indeg = [0] * t.p
    edges = set()
    inward = set(rng.choice(nbrs[hub], size=d_in_max, replace=False).tolist())
    for v in nbrs[hub]:
        if v in inward:
            edges.add((v, hub))
            indeg[hub] += 1
        else:
            edges.add((hub, v))
            indeg[v] += 1

    seen = {hub, *nbrs[hub]}
    frontier = list(nbrs[hub])
    while frontier:
        nxt = []
        for u in frontier:
            for v in nbrs[u]:
                if v in seen:
                    continue
                seen.add(v)
                if rng.random() < 0.5 and indeg[u] < d_in_max:
                    edges.add((v, u))
                    indeg[u] += 1
                else:
                    edges.add((u, v))
                    indeg[v] += 1
                nxt.append(v)
        frontier = nxt
    return Dag(t.p, frozenset(edges))


# -- coefficients ------------------------------------------------------------

def sample_betas(g: Dag, cfg: GenConfig, seed=None) -> LinearSem:
    """Standardized coefficients with rho_min <= |beta| <= rho_max and every
    noise variance at least omega_min; both magnitude bounds are attained."""
    rng = _rng(cfg.seed if seed is None else seed)
    budget = 1.0 - cfg.omega_min
    r2min, r2max = cfg.rho_min ** 2, cfg.rho_max ** 2
    parents = g.parents()
    indeg = [len(pa) for pa in parents]
    sq: dict[tuple[int, int], float] = {}

    top = [v for v in range(g.p) if indeg[v] > 0 and r2min * (indeg[v] - 1) + r2max <= budget + _FEAS_TOL]
    if not top:
        raise InfeasibleConfig("no node can host an edge at rho_max")
    i = int(rng.choice(top))
    sq[(int(rng.choice(parents[i])), i)] = r2max

    low = [v for v in range(g.p) if indeg[v] > 0 and v != i]
    if low:
        k = int(rng.choice(low))
        sq[(int(rng.choice(parents[k])), k)] = r2min
    elif indeg[i] >= 2:
        rest = [u for u in parents[i] if (u, i) not in sq]
        sq[(int(rng.choice(rest)), i)] = r2min
    else:
        raise InfeasibleConfig("no second edge available for rho_min")

    remaining = [e for e in g.sorted_edges() if e not in sq]
    remaining = [remaining[t] for t in rng.permutation(len(remaining))]
    chosen_in = [0.0] * g.p
    left = list(indeg)
    for (u, j), b2 in sq.items():
        chosen_in[j] += b2
        left[j] -= 1
    for u, j in remaining:
        # slack above the rho_min floor still reserved for the unchosen edges into j
        slack = max(budget - left[j] * r2min - chosen_in[j], 0.0)
        x = 1.0 - rng.random() ** (1.0 / left[j])
        b2 = min(r2max, r2min + slack * x)
        sq[(u, j)] = b2
        chosen_in[j] += b2
        left[j] -= 1

    signs = rng.choice(np.array([-1.0, 1.0]), size=len(sq))
    coefs = {e: float(s * math.sqrt(sq[e])) for e, s in zip(sorted(sq), signs)}
    return LinearSem.standardized_from_edges(g.p, coefs)


def random_polytree(cfg: GenConfig, seed=None) -> Dag:
    rng = _rng(cfg.seed if seed is None else seed)
    t, hub = _forced_prufer_tree(cfg.p, cfg.d_in_max, rng)
    return orient_with_forced_indegree(t, cfg.d_in_max, rng, hub=hub)


def generate_sem(cfg: GenConfig, seed=None, max_tries: int = 100) -> LinearSem:
    """Random polytree with forced maximum in-degree and sampled coefficients.

    A tree on which the two extreme coefficients cannot be placed (possible
    for small ``p`` with a large forced in-degree) is redrawn.
    """
    rng = _rng(cfg.seed if seed is None else seed)
    for _ in range(max_tries):
        g = random_polytree(cfg, rng)
        try:
            return sample_betas(g, cfg, rng)
        except InfeasibleConfig:
            continue
    raise InfeasibleConfig(f"no feasible polytree found in {max_tries} draws")


# -- lower-bound families ----------------------------------------------------

def _check_skeleton_family(p: int, rho: float) -> None:
    if p < 4:
        raise ValueError("p must be at least 4")
    if not 0 < rho < 1 / math.sqrt(p):
        raise InvalidRho(f"need 0 < rho < 1/sqrt(p) = {1 / math.sqrt(p):.4g}")


def _check_star_family(p: int, rho: float) -> None:
    if p < 5:
        raise ValueError("p must be at least 5")
    if not 0 < rho < 0.5:
        raise InvalidRho("need 0 < rho < 1/2")


def hardness_skeleton_member(p: int, rho: float, j: int) -> LinearSem:
    """Model ``j`` of the skeleton family: the in-star ``i -> p-2`` for all
    ``i < p-2`` plus the edge ``p-1 -> j``.  Every edge has correlation ``rho``."""
    _check_skeleton_family(p, rho)
    if not 0 <= j < p - 2:
        raise IndexError(j)
    coefs = {(i, p - 2): rho for i in range(p - 2)}
    coefs[(p - 1, j)] = rho
    return LinearSem.standardized_from_edges(p, coefs)


def hardness_cpdag_member(p: int, rho: float, pair: tuple[int, int]) -> LinearSem:
    """Star on hub ``p-1`` where leaves ``pair`` point into the hub and every
    other leaf is a child of the hub."""
    _check_star_family(p, rho)
    a, b = pair
    hub = p - 1
    coefs = {(v, hub) if v in (a, b) else (hub, v): rho for v in range(p - 1)}
    return LinearSem.standardized_from_edges(p, coefs)


def hardness_cpdag_pairs(p: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(p - 1), 2))


def hardness_ensemble_skeleton(p: int, rho: float) -> list[LinearSem]:
    """All ``p-2`` models of the skeleton family (pairwise distinct skeletons)."""
    _check_skeleton_family(p, rho)
    return [hardness_skeleton_member(p, rho, j) for j in range(p - 2)]


def hardness_ensemble_cpdag(p: int, rho: float) -> list[LinearSem]:
    """All ``(p-1)(p-2)/2`` stars: one skeleton, distinct v-structure sets."""
    _check_star_family(p, rho)
    return [hardness_cpdag_member(p, rho, pair) for pair in hardness_cpdag_pairs(p)]
