"""Directed and partially directed graphs over nodes ``0..p-1``.

All graph objects are frozen; operations return new objects.  Undirected
pairs are always stored as ``(min, max)`` tuples.
"""
from __future__ import annotations

import itertools
import math
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

from .errors import (
    FormatError,
    InvalidCpdag,
    InvalidGraph,
    LimitExceeded,
    NotAPolytree,
    OrientationConflict,
)

Edge = tuple[int, int]


def _pair(i: int, j: int) -> Edge:
    return (i, j) if i < j else (j, i)


def _check_nodes(p: int, pairs: Iterable[Edge], what: str) -> None:
    for i, j in pairs:
        if not (0 <= i < p and 0 <= j < p):
            raise InvalidGraph(f"{what} {i},{j} out of range for p={p}")
        if i == j:
            raise InvalidGraph(f"self-loop on node {i}")


def _adjacency(p: int, pairs: Iterable[Edge]) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(p)]
    for i, j in pairs:
        adj[i].append(j)
        adj[j].append(i)
    for nbrs in adj:
        nbrs.sort()
    return adj


def _undirected_components(p: int, pairs: Iterable[Edge]) -> list[list[int]]:
    adj = _adjacency(p, pairs)
    seen = [False] * p
    comps = []
    for s in range(p):
        if seen[s]:
            continue
        seen[s] = True
        comp, stack = [s], [s]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    stack.append(v)
        comps.append(sorted(comp))
    return comps


def _is_forest(p: int, pairs: frozenset[Edge]) -> bool:
    comps = _undirected_components(p, pairs)
    return len(pairs) == p - len(comps)


@dataclass(frozen=True)
class Skeleton:
    p: int
    edges: frozenset[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        edges = frozenset(_pair(i, j) for i, j in self.edges)
        _check_nodes(self.p, edges, "edge")
        object.__setattr__(self, "edges", edges)

    def neighbors(self) -> list[list[int]]:
        return _adjacency(self.p, self.edges)

    def is_tree(self) -> bool:
        return len(self.edges) == self.p - 1 and _is_forest(self.p, self.edges)

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)


@dataclass(frozen=True)
class Dag:
    p: int
    edges: frozenset[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        edges = frozenset((int(i), int(j)) for i, j in self.edges)
        _check_nodes(self.p, edges, "edge")
        for i, j in edges:
            if (j, i) in edges:
                raise InvalidGraph(f"both {i}->{j} and {j}->{i} present")
        object.__setattr__(self, "edges", edges)
        if len(self.topological_order()) != self.p:
            raise InvalidGraph("graph contains a directed cycle")

    def parents(self) -> list[list[int]]:
        pa: list[list[int]] = [[] for _ in range(self.p)]
        for i, j in self.edges:
            pa[j].append(i)
        for lst in pa:
            lst.sort()
        return pa

    def children(self) -> list[list[int]]:
        ch: list[list[int]] = [[] for _ in range(self.p)]
        for i, j in self.edges:
            ch[i].append(j)
        for lst in ch:
            lst.sort()
        return ch

    def in_degrees(self) -> list[int]:
        deg = [0] * self.p
        for _, j in self.edges:
            deg[j] += 1
        return deg

    def max_in_degree(self) -> int:
        return max(self.in_degrees(), default=0)

    def topological_order(self) -> list[int]:
        """Kahn ordering, smallest available label first.  Shorter than p iff cyclic."""
        indeg = [0] * self.p
        ch: list[list[int]] = [[] for _ in range(self.p)]
        for i, j in self.edges:
            indeg[j] += 1
            ch[i].append(j)
        ready = [v for v in range(self.p) if indeg[v] == 0]
        ready.sort(reverse=True)
        order = []
        while ready:
            u = ready.pop()
            order.append(u)
            for v in ch[u]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    ready.append(v)
            ready.sort(reverse=True)
        return order

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)


@dataclass(frozen=True)
class Cpdag:
    """Mixed graph: directed edges plus undirected pairs.

    Construction only enforces the structural invariants (range, no loops,
    each pair in at most one edge set).  Intermediate graphs produced while
    orienting do not satisfy the completed-CPDAG properties; call
    :meth:`validate` where those are required.
    """

    p: int
    directed_edges: frozenset[Edge] = field(default_factory=frozenset)
    undirected_edges: frozenset[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        directed = frozenset((int(i), int(j)) for i, j in self.directed_edges)
        undirected = frozenset(_pair(int(i), int(j)) for i, j in self.undirected_edges)
        _check_nodes(self.p, directed, "edge")
        _check_nodes(self.p, undirected, "edge")
        for i, j in directed:
            if (j, i) in directed:
                raise InvalidGraph(f"both {i}->{j} and {j}->{i} present")
            if _pair(i, j) in undirected:
                raise InvalidGraph(f"pair {i},{j} is both directed and undirected")
        object.__setattr__(self, "directed_edges", directed)
        object.__setattr__(self, "undirected_edges", undirected)

    @classmethod
    def from_dag(cls, g: Dag) -> "Cpdag":
        """Wrap a DAG as a fully directed mixed graph (no CPDAG computation)."""
        return cls(g.p, g.edges, frozenset())

    @property
    def skeleton(self) -> Skeleton:
        return Skeleton(self.p, frozenset(_pair(i, j) for i, j in self.directed_edges) | self.undirected_edges)

    def n_edges(self) -> int:
        return len(self.directed_edges) + len(self.undirected_edges)

    def validate(self) -> "Cpdag":
        """Raise InvalidCpdag unless this looks like the CPDAG of a polytree."""
        if not _is_forest(self.p, self.skeleton.edges):
            raise InvalidCpdag("skeleton contains a cycle")
        heads = {j for _, j in self.directed_edges}
        for i, j in self.undirected_edges:
            for v in (i, j):
                if v in heads:
                    raise InvalidCpdag(
                        f"node {v} has an undirected edge and an incoming directed edge"
                    )
        return self

    def sorted_directed(self) -> list[Edge]:
        return sorted(self.directed_edges)

    def sorted_undirected(self) -> list[Edge]:
        return sorted(self.undirected_edges)


class VStructure(NamedTuple):
    left: int
    collider: int
    right: int


def skeleton(g: Dag) -> Skeleton:
    return Skeleton(g.p, frozenset(_pair(i, j) for i, j in g.edges))


def is_polytree(g: Dag) -> bool:
    return skeleton(g).is_tree()


def find_v_structures(g: Dag) -> set[VStructure]:
    adjacent = skeleton(g).edges
    found = set()
    for k, pa in enumerate(g.parents()):
        for i, j in itertools.combinations(pa, 2):
            if (i, j) not in adjacent:
                found.add(VStructure(i, k, j))
    return found


def apply_rule1(c: Cpdag, rng: random.Random | None = None) -> Cpdag:
    """Orient ``j - k`` as ``j -> k`` whenever some ``i -> j`` exists with ``i``
    not adjacent to ``k``, until nothing changes.

    Raises OrientationConflict if propagation would direct an edge into a node
    that already has an incoming edge from elsewhere; on the mixed graphs that
    arise from a polytree this never happens.  ``rng`` shuffles the visiting
    order (the result does not depend on it).
    """
    p = c.p
    undirected = set(c.undirected_edges)
    directed = set(c.directed_edges)
    adjacent = c.skeleton.edges
    und_adj: list[set[int]] = [set() for _ in range(p)]
    for i, j in undirected:
        und_adj[i].add(j)
        und_adj[j].add(i)
    pa: list[set[int]] = [set() for _ in range(p)]
    for i, j in directed:
        pa[j].add(i)

    queue = sorted(directed)
    if rng is not None:
        rng.shuffle(queue)
    work = deque(queue)
    while work:
        i, j = work.popleft()
        targets = sorted(und_adj[j])
        if rng is not None:
            rng.shuffle(targets)
        for k in targets:
            if k == i or _pair(i, k) in adjacent or k not in und_adj[j]:
                continue
            if pa[k]:
                raise OrientationConflict(_pair(j, k))
            und_adj[j].discard(k)
            und_adj[k].discard(j)
            undirected.discard(_pair(j, k))
            directed.add((j, k))
            pa[k].add(j)
            work.append((j, k))
    return Cpdag(p, frozenset(directed), frozenset(undirected))


def cpdag_of_polytree(g: Dag) -> Cpdag:
    if not is_polytree(g):
        raise NotAPolytree("input DAG's skeleton is not a spanning tree")
    directed = set()
    for v in find_v_structures(g):
        directed.add((v.left, v.collider))
        directed.add((v.right, v.collider))
    undirected = skeleton(g).edges - {_pair(i, j) for i, j in directed}
    return apply_rule1(Cpdag(g.p, frozenset(directed), undirected))


def vm_vd_partition(c: Cpdag) -> tuple[frozenset[int], frozenset[int]]:
    """Split nodes into those touching an undirected edge and the rest."""
    c.validate()
    vm = frozenset(v for e in c.undirected_edges for v in e)
    vd = frozenset(range(c.p)) - vm
    return vm, vd


def undirected_components(c: Cpdag) -> list[list[int]]:
    """Node sets of the undirected forest's components (singletons included)."""
    return _undirected_components(c.p, c.undirected_edges)


def equivalence_class_size(c: Cpdag) -> int:
    c.validate()
    return math.prod(len(comp) for comp in undirected_components(c))


def _orient_away(root: int, adj: list[list[int]], comp_edges: list[Edge]) -> list[Edge]:
    out = []
    seen = {root}
    stack = [root]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                out.append((u, v))
                stack.append(v)
    assert len(out) == len(comp_edges)
    return out


def enumerate_equivalent_dags(c: Cpdag, limit: int = 100_000) -> list[Dag]:
    """All DAGs in the equivalence class: each undirected tree is rooted at
    one of its nodes and oriented away from the root."""
    size = equivalence_class_size(c)
    if size > limit:
        raise LimitExceeded(f"equivalence class has {size} members (limit {limit})")
    adj = _adjacency(c.p, c.undirected_edges)
    comps = [comp for comp in undirected_components(c) if len(comp) > 1]
    per_comp = []
    for comp in comps:
        members = set(comp)
        comp_edges = [e for e in c.undirected_edges if e[0] in members]
        per_comp.append([_orient_away(r, adj, comp_edges) for r in comp])
    dags = []
    for choice in itertools.product(*per_comp):
        edges = set(c.directed_edges)
        for oriented in choice:
            edges.update(oriented)
        dags.append(Dag(c.p, frozenset(edges)))
    return dags


def iter_all_orientations(s: Skeleton) -> Iterator[Dag]:
    """Every acyclic orientation of a skeleton (brute force, for small graphs)."""
    edges = s.sorted_edges()
    for bits in itertools.product((0, 1), repeat=len(edges)):
        oriented = frozenset((i, j) if b == 0 else (j, i) for (i, j), b in zip(edges, bits))
        try:
            yield Dag(s.p, oriented)
        except InvalidGraph:
            continue


# -- edge-list text format -------------------------------------------------

def _content_lines(text: str) -> Iterator[tuple[int, str]]:
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _parse_header(lines: Iterator[tuple[int, str]]) -> int:
    try:
        lineno, line = next(lines)
    except StopIteration:
        raise FormatError("empty graph file") from None
    key, sep, value = line.partition("=")
    if not sep or key.strip() != "p":
        raise FormatError(f"line {lineno}: expected 'p=<count>', got {line!r}")
    try:
        p = int(value)
    except ValueError:
        raise FormatError(f"line {lineno}: bad node count {value!r}") from None
    if p < 1:
        raise FormatError(f"line {lineno}: node count must be positive")
    return p


def _parse_edge(lineno: int, line: str) -> tuple[int, int, str, str]:
    """Return (i, j, kind, trailing) where kind is '->' or '--'."""
    body, _, trailing = line.partition(":")
    for kind in ("->", "--"):
        if kind in body:
            left, _, right = body.partition(kind)
            try:
                return int(left), int(right), kind, trailing.strip()
            except ValueError:
                break
    raise FormatError(f"line {lineno}: cannot parse edge {line!r}")


def parse_cpdag(text: str) -> Cpdag:
    lines = _content_lines(text)
    p = _parse_header(lines)
    directed, undirected = set(), set()
    for lineno, line in lines:
        i, j, kind, _ = _parse_edge(lineno, line)
        (directed.add((i, j)) if kind == "->" else undirected.add(_pair(i, j)))
    try:
        return Cpdag(p, frozenset(directed), frozenset(undirected))
    except InvalidGraph as exc:
        raise FormatError(str(exc)) from exc


def parse_dag(text: str) -> Dag:
    c = parse_cpdag(text)
    if c.undirected_edges:
        raise FormatError("undirected edge in a DAG file")
    try:
        return Dag(c.p, c.directed_edges)
    except InvalidGraph as exc:
        raise FormatError(str(exc)) from exc


def format_graph(g: Dag | Cpdag | Skeleton) -> str:
    if isinstance(g, Dag):
        directed, undirected = g.sorted_edges(), []
    elif isinstance(g, Cpdag):
        directed, undirected = g.sorted_directed(), g.sorted_undirected()
    else:
        directed, undirected = [], g.sorted_edges()
    lines = [f"p={g.p}"]
    lines += [f"{i} -> {j}" for i, j in directed]
    lines += [f"{i} -- {j}" for i, j in undirected]
    return "\n".join(lines) + "\n"
