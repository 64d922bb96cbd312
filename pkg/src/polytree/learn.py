"""Polytree structure learning from data.

Pipeline: sample correlations -> maximum-weight spanning tree on
``|rho_hat|`` (Kruskal) -> collider detection by thresholding the
correlation of each pair of neighbours -> orientation propagation.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConstantColumn, InsufficientSamples, OrientationConflict
from .graphs import Cpdag, Skeleton, _pair, _undirected_components, apply_rule1
from .tdist import t_ppf


class OrientationConflictWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LearnConfig:
    alpha: float = 0.1
    rho_crit_override: float | None = None

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.rho_crit_override is not None and not 0 < self.rho_crit_override < 1:
            raise ValueError("rho_crit_override must lie in (0, 1)")

    def threshold(self, n: int) -> float:
        if self.rho_crit_override is not None:
            return self.rho_crit_override
        return rho_crit(n, self.alpha)


@dataclass(frozen=True, eq=False)
class LearnResult:
    correlations: np.ndarray
    skeleton: Skeleton
    rho_crit: float
    cpdag: Cpdag
    n_conflicts: int = 0


def sample_correlations(data) -> np.ndarray:
    x = np.asarray(data, dtype=float)
    if x.ndim != 2:
        raise ValueError("data must be a 2-D array (samples x variables)")
    n, p = x.shape
    if n < 2:
        raise InsufficientSamples("need at least 2 samples for correlations")
    flat = np.flatnonzero(np.ptp(x, axis=0) == 0)
    if flat.size:
        raise ConstantColumn(int(flat[0]))
    xc = x - x.mean(axis=0)
    ss = np.einsum("ij,ij->j", xc, xc)
    corr = (xc.T @ xc) / np.sqrt(np.outer(ss, ss))
    corr = np.clip((corr + corr.T) / 2, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


class _DisjointSet:
    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, i):
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, i, j) -> bool:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return False
        if self.size[ri] < self.size[rj]:
            ri, rj = rj, ri
        self.parent[rj] = ri
        self.size[ri] += self.size[rj]
        return True


def chow_liu_skeleton(corr) -> Skeleton:
    """Maximum-weight spanning tree with weights ``|corr|``.

    Ties are broken by the smaller ``(i, j)`` pair, which makes the result
    deterministic and invariant under any strictly increasing transform of
    the weights.
    """
    c = np.asarray(corr, dtype=float)
    p = c.shape[0]
    iu, ju = np.triu_indices(p, 1)
    weight = np.abs(c[iu, ju])
    order = np.lexsort((ju, iu, -weight))
    dsu = _DisjointSet(p)
    edges = []
    for t in order:
        i, j = int(iu[t]), int(ju[t])
        if dsu.union(i, j):
            edges.append((i, j))
            if len(edges) == p - 1:
                break
    return Skeleton(p, frozenset(edges))


def rho_crit(n: int, alpha: float = 0.1) -> float:
    """Correlation threshold of the two-sided zero-correlation t-test at level alpha."""
    if n < 3:
        raise InsufficientSamples("rho_crit needs n >= 3")
    df = n - 2
    t = t_ppf(1.0 - alpha / 2.0, df)
    return math.sqrt(1.0 - 1.0 / (1.0 + t * t / df))


def _collider_demands(s: Skeleton, corr: np.ndarray, threshold: float):
    """Directed edges demanded by detected colliders, plus the pairs demanded
    both ways."""
    demanded = set()
    for k, nbrs in enumerate(s.neighbors()):
        for i, j in itertools.combinations(nbrs, 2):
            if _pair(i, j) in s.edges:
                continue
            if abs(corr[i, j]) < threshold:
                demanded.add((i, k))
                demanded.add((j, k))
    conflicts = {_pair(i, j) for i, j in demanded if (j, i) in demanded}
    return demanded, conflicts


def detect_v_structures(s: Skeleton, corr, threshold: float) -> Cpdag:
    """Orient ``i -> k <- j`` for each path ``i - k - j`` whose end points have
    ``|corr| < threshold``; all other skeleton edges stay undirected."""
    corr = np.asarray(corr, dtype=float)
    demanded, conflicts = _collider_demands(s, corr, threshold)
    if conflicts:
        raise OrientationConflict(min(conflicts))
    undirected = s.edges - {_pair(i, j) for i, j in demanded}
    return Cpdag(s.p, frozenset(demanded), undirected)


def _resolve(p: int, directed: set, undirected: set) -> int:
    """Un-orient collider edges until every undirected component receives at
    most one incoming directed edge, so that propagation cannot clash.
    Returns the number of edges un-oriented."""
    dropped = 0
    while True:
        heads: dict[int, list] = {}
        for e in directed:
            heads.setdefault(e[1], []).append(e)
        bad = []
        for comp in _undirected_components(p, undirected):
            if len(comp) < 2:
                continue
            sources = [v for v in comp if v in heads]
            if len(sources) > 1:
                bad += [e for v in sources for e in heads[v]]
        if not bad:
            return dropped
        for e in bad:
            directed.discard(e)
            undirected.add(_pair(*e))
        dropped += len(bad)


def orient_skeleton(s: Skeleton, corr, threshold: float) -> tuple[Cpdag, int]:
    """Collider detection followed by Rule-1 propagation.

    Finite-sample noise can make two colliders disagree about one edge, or
    make two oriented regions push into the same undirected path.  Such edges
    are left undirected and counted; the returned graph always passes
    :meth:`Cpdag.validate`.
    """
    corr = np.asarray(corr, dtype=float)
    demanded, conflicts = _collider_demands(s, corr, threshold)
    directed = {e for e in demanded if _pair(*e) not in conflicts}
    undirected = set(s.edges) - {_pair(*e) for e in directed}
    dropped = _resolve(s.p, directed, undirected)
    cpdag = apply_rule1(Cpdag(s.p, frozenset(directed), frozenset(undirected)))
    return cpdag.validate(), len(conflicts) + dropped


def learn_from_correlations(corr, threshold: float) -> LearnResult:
    corr = np.asarray(corr, dtype=float)
    s = chow_liu_skeleton(corr)
    cpdag, n_conflicts = orient_skeleton(s, corr, threshold)
    return LearnResult(corr, s, threshold, cpdag, n_conflicts)


def learn(data, cfg: LearnConfig | None = None) -> LearnResult:
    cfg = cfg or LearnConfig()
    x = np.asarray(data, dtype=float)
    n = x.shape[0]
    if n < 3 and cfg.rho_crit_override is None:
        raise InsufficientSamples("learning needs n >= 3")
    return learn_from_correlations(sample_correlations(x), cfg.threshold(n))


def learn_cpdag(data, cfg: LearnConfig | None = None) -> Cpdag:
    result = learn(data, cfg)
    if result.n_conflicts:
        warnings.warn(
            f"{result.n_conflicts} conflicting orientation(s) left undirected",
            OrientationConflictWarning,
            stacklevel=2,
        )
    return result.cpdag
