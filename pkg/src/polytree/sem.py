"""Linear structural equation models on polytrees.

The model is ``X = B^T X + eps`` with independent noises of variance
``omega[j]``.  Because the support of ``B`` is a DAG, ``I - B^T`` is lower
triangular after a topological permutation, so every solve below is a
forward substitution over the topological order.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import EmptyGraph, FormatError, InvalidModel, SingularModel
from .graphs import Dag, _content_lines, _parse_edge, _parse_header, is_polytree

VARIANCE_FLOOR = 1e-12


class NoiseFamily(str, enum.Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"
    RADEMACHER_SCALED = "rademacher_scaled"


class RhoBounds(NamedTuple):
    rho_min: float
    rho_max: float


@dataclass(frozen=True, eq=False)
class LinearSem:
    """Polytree SEM with coefficient matrix ``beta`` (``beta[i, j]`` for ``i -> j``)
    and noise variances ``omega``."""

    dag: Dag
    beta: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        p = self.dag.p
        beta = np.array(self.beta, dtype=float)
        omega = np.array(self.omega, dtype=float)
        if beta.shape != (p, p) or omega.shape != (p,):
            raise InvalidModel(f"expected beta {p}x{p} and omega of length {p}")
        support = {(int(i), int(j)) for i, j in zip(*np.nonzero(beta))}
        if support != set(self.dag.edges):
            raise InvalidModel("support of beta differs from the DAG's edge set")
        if not np.all(np.isfinite(beta)) or not np.all(np.isfinite(omega)):
            raise InvalidModel("non-finite parameter")
        if np.any(omega <= 0):
            raise InvalidModel("noise variances must be positive")
        beta.setflags(write=False)
        omega.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "omega", omega)

    @classmethod
    def from_edges(cls, p: int, coefs: dict[tuple[int, int], float], omega) -> "LinearSem":
        beta = np.zeros((p, p))
        for (i, j), b in coefs.items():
            beta[i, j] = b
        return cls(Dag(p, frozenset(coefs)), beta, np.asarray(omega, dtype=float))

    @classmethod
    def standardized_from_edges(cls, p: int, coefs: dict[tuple[int, int], float]) -> "LinearSem":
        """Unit-variance model: each noise variance is one minus the sum of the
        squared incoming coefficients."""
        omega = np.ones(p)
        for (_, j), b in coefs.items():
            omega[j] -= b * b
        return cls.from_edges(p, coefs, omega)

    @property
    def p(self) -> int:
        return self.dag.p

    def edge_coefficients(self) -> dict[tuple[int, int], float]:
        return {(i, j): float(self.beta[i, j]) for i, j in self.dag.sorted_edges()}

    def is_standardized(self, tol: float = 1e-9) -> bool:
        closure = self.omega + (self.beta ** 2).sum(axis=0)
        return bool(np.all(np.abs(closure - 1.0) <= tol))

    def __eq__(self, other):
        if not isinstance(other, LinearSem):
            return NotImplemented
        return (
            self.dag == other.dag
            and np.array_equal(self.beta, other.beta)
            and np.array_equal(self.omega, other.omega)
        )

    __hash__ = None


def _propagate(m: LinearSem, noise: np.ndarray) -> np.ndarray:
    """Solve ``x_j = noise_j + sum_{i in Pa(j)} beta_ij x_i`` column-wise.

    ``noise`` has one column per node; rows are independent right-hand sides.
    """
    out = np.array(noise, dtype=float, copy=True)
    parents = m.dag.parents()
    for j in m.dag.topological_order():
        for i in parents[j]:
            out[:, j] += m.beta[i, j] * out[:, i]
    return out


def covariance_matrix(m: LinearSem) -> np.ndarray:
    # rows of L are the noise loadings of each X_j; Sigma = L L^T
    load = _propagate(m, np.diag(np.sqrt(m.omega)))
    sigma = load.T @ load
    return (sigma + sigma.T) / 2


def correlation_matrix(m: LinearSem) -> np.ndarray:
    sigma = covariance_matrix(m)
    sd = np.sqrt(np.diag(sigma))
    corr = sigma / np.outer(sd, sd)
    np.fill_diagonal(corr, 1.0)
    return corr


def standardize(m: LinearSem) -> LinearSem:
    var = np.diag(covariance_matrix(m))
    bad = np.flatnonzero(var <= VARIANCE_FLOOR)
    if bad.size:
        raise SingularModel(f"implied variance of node {int(bad[0])} is {var[bad[0]]:.3g}")
    sd = np.sqrt(var)
    beta = m.beta * sd[:, None] / sd[None, :]
    return LinearSem(m.dag, beta, m.omega / var)


def rescale(m: LinearSem, scale) -> LinearSem:
    """Model of ``D X`` for a positive diagonal ``D = diag(scale)``."""
    scale = np.asarray(scale, dtype=float)
    beta = m.beta * scale[None, :] / scale[:, None]
    return LinearSem(m.dag, beta, m.omega * scale ** 2)


def _trek_walk(m: LinearSem, source: int) -> np.ndarray:
    """Correlations of ``source`` with all nodes via the unique tree paths."""
    p = m.p
    row = np.zeros(p)
    row[source] = 1.0
    parents = m.dag.parents()
    children = m.dag.children()
    # state: (node, product so far, has the path already gone downstream)
    stack = [(source, 1.0, False)]
    seen = {source}
    while stack:
        u, prod, down = stack.pop()
        for v in children[u]:
            if v not in seen:
                seen.add(v)
                r = prod * m.beta[u, v]
                row[v] = r
                stack.append((v, r, True))
        for v in parents[u]:
            if v not in seen:
                seen.add(v)
                # stepping upstream after a downstream step puts a collider at u
                r = 0.0 if down else prod * m.beta[v, u]
                row[v] = r
                stack.append((v, r, down))
    return row


def correlation_by_treks(m: LinearSem, i: int, j: int) -> float:
    """Correlation of a standardized polytree SEM from the path between i and j:
    product of edge coefficients if no collider lies on the path, else 0."""
    if i == j:
        return 1.0
    return float(_trek_walk(m, i)[j])


def trek_correlation_matrix(m: LinearSem) -> np.ndarray:
    corr = np.vstack([_trek_walk(m, s) for s in range(m.p)])
    return corr


def rho_bounds(m: LinearSem) -> RhoBounds:
    if not m.dag.edges:
        raise EmptyGraph("model has no edges")
    mags = [abs(b) for b in m.edge_coefficients().values()]
    return RhoBounds(min(mags), max(mags))


def sample(
    m: LinearSem,
    n: int,
    family: NoiseFamily | str = NoiseFamily.GAUSSIAN,
    seed: int | np.random.SeedSequence | np.random.Generator = 0,
) -> np.ndarray:
    """Draw ``n`` i.i.d. rows; deterministic for a given seed."""
    if n < 1:
        raise ValueError("n must be at least 1")
    family = NoiseFamily(family)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    sd = np.sqrt(m.omega)
    if family is NoiseFamily.GAUSSIAN:
        eps = rng.standard_normal((n, m.p))
    elif family is NoiseFamily.UNIFORM:
        eps = rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=(n, m.p))
    else:
        eps = rng.choice(np.array([-1.0, 1.0]), size=(n, m.p))
    return _propagate(m, eps * sd)


# -- SEM text format ---------------------------------------------------------

def format_sem(m: LinearSem) -> str:
    lines = [f"p={m.p}"]
    for (i, j), b in m.edge_coefficients().items():
        lines.append(f"{i} -> {j} : beta={b:.17g}")
    for j in range(m.p):
        lines.append(f"node {j} : omega={m.omega[j]:.17g}")
    return "\n".join(lines) + "\n"


def _parse_float_field(lineno: int, trailing: str, key: str) -> float:
    name, sep, value = trailing.partition("=")
    if not sep or name.strip() != key:
        raise FormatError(f"line {lineno}: expected '{key}=<float>'")
    try:
        return float(value)
    except ValueError:
        raise FormatError(f"line {lineno}: bad float {value!r}") from None


def parse_sem(text: str) -> LinearSem:
    lines = _content_lines(text)
    p = _parse_header(lines)
    coefs: dict[tuple[int, int], float] = {}
    omega: dict[int, float] = {}
    for lineno, line in lines:
        if line.startswith("node"):
            head, _, trailing = line.partition(":")
            try:
                j = int(head[4:])
            except ValueError:
                raise FormatError(f"line {lineno}: bad node line {line!r}") from None
            omega[j] = _parse_float_field(lineno, trailing, "omega")
            continue
        i, j, kind, trailing = _parse_edge(lineno, line)
        if kind != "->":
            raise FormatError(f"line {lineno}: SEM edges must be directed")
        coefs[(i, j)] = _parse_float_field(lineno, trailing, "beta")
    if sorted(omega) != list(range(p)):
        raise FormatError("every node needs exactly one 'node j : omega=' line")
    try:
        return LinearSem.from_edges(p, coefs, [omega[j] for j in range(p)])
    except (InvalidModel, ValueError) as exc:
        raise FormatError(str(exc)) from exc


def require_polytree(m: LinearSem) -> LinearSem:
    if not is_polytree(m.dag):
        raise InvalidModel("model graph is not a polytree")
    return m


__all__ = [
    "LinearSem",
    "NoiseFamily",
    "RhoBounds",
    "correlation_by_treks",
    "correlation_matrix",
    "covariance_matrix",
    "format_sem",
    "parse_sem",
    "rescale",
    "rho_bounds",
    "sample",
    "standardize",
    "trek_correlation_matrix",
]
