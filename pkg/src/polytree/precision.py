"""Inverse correlation matrices of polytree SEMs.

Both the exact matrix and the CPDAG-based estimate are assembled entry by
entry from edge quantities; nothing here inverts a dense matrix.
"""
from __future__ import annotations

import csv
import io
import itertools

import numpy as np

from .errors import DegenerateVariance, DimensionMismatch, FormatError
from .graphs import Cpdag, vm_vd_partition
from .sem import LinearSem

OMEGA_FLOOR = 1e-10


def true_inverse_correlation(m: LinearSem) -> np.ndarray:
    """``(I - B) Omega^{-1} (I - B)^T`` from its closed-form entries.

    For a standardized model this is the inverse correlation matrix.
    """
    p = m.p
    theta = np.zeros((p, p))
    inv_omega = 1.0 / m.omega
    np.fill_diagonal(theta, inv_omega)
    for i, j in m.dag.edges:
        b = m.beta[i, j]
        theta[i, j] -= b * inv_omega[j]
        theta[j, i] -= b * inv_omega[j]
        theta[i, i] += b * b * inv_omega[j]
    for k, pa in enumerate(m.dag.parents()):
        for i, j in itertools.combinations(pa, 2):
            v = m.beta[i, k] * m.beta[j, k] * inv_omega[k]
            theta[i, j] += v
            theta[j, i] += v
    return theta


def estimate_inverse_correlation(c_hat: Cpdag, corr_hat) -> np.ndarray:
    """Inverse correlation from edge correlations, given a polytree CPDAG.

    Nodes touching an undirected edge never get a noise-variance estimate
    (their parent set is not identified); the undirected-edge terms
    ``rho^2 / (1 - rho^2)`` take its place.
    """
    r = np.asarray(corr_hat, dtype=float)
    p = c_hat.p
    if r.shape != (p, p):
        raise DimensionMismatch(f"correlations are {r.shape}, CPDAG has p={p}")
    vm, _ = vm_vd_partition(c_hat)

    parents: list[list[int]] = [[] for _ in range(p)]
    children: list[list[int]] = [[] for _ in range(p)]
    for i, j in c_hat.sorted_directed():
        parents[j].append(i)
        children[i].append(j)

    omega = np.full(p, np.nan)
    for j in range(p):
        if j in vm:
            continue
        w = 1.0 - sum(r[i, j] ** 2 for i in parents[j])
        if w <= OMEGA_FLOOR:
            raise DegenerateVariance(j, w)
        omega[j] = w

    theta = np.zeros((p, p))
    for i, j in c_hat.directed_edges:
        theta[i, j] = theta[j, i] = -r[i, j] / omega[j]
    und_terms = np.zeros(p)
    for i, j in c_hat.undirected_edges:
        denom = 1.0 - r[i, j] ** 2
        if denom <= OMEGA_FLOOR:
            raise DegenerateVariance(i, denom)
        theta[i, j] = theta[j, i] = -r[i, j] / denom
        und_terms[i] += r[i, j] ** 2 / denom
        und_terms[j] += r[i, j] ** 2 / denom
    for k in range(p):
        for i, j in itertools.combinations(parents[k], 2):
            assert theta[i, j] == 0.0, "co-parent pair shared by two colliders"
            theta[i, j] = theta[j, i] = r[i, k] * r[j, k] / omega[k]
    for j in range(p):
        out = sum(r[j, k] ** 2 / omega[k] for k in children[j])
        theta[j, j] = (1.0 + und_terms[j] if j in vm else 1.0 / omega[j]) + out
    return theta


def l1_errors(theta_hat, theta) -> tuple[float, float]:
    """Entrywise absolute error summed over the diagonal and off the diagonal."""
    a = np.asarray(theta_hat, dtype=float)
    b = np.asarray(theta, dtype=float)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    diff = np.abs(a - b)
    diag = float(np.trace(diff))
    return diag, float(diff.sum() - diag)


def format_matrix(theta, sparse: bool = False) -> str:
    theta = np.asarray(theta, dtype=float)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if sparse:
        writer.writerow([f"p={theta.shape[0]}"])
        for i, j in zip(*np.nonzero(theta)):
            writer.writerow([int(i), int(j), f"{theta[i, j]:.17g}"])
    else:
        for row in theta:
            writer.writerow([f"{v:.17g}" for v in row])
    return buf.getvalue()


def parse_matrix(text: str) -> np.ndarray:
    """Read either layout written by :func:`format_matrix`."""
    rows = [row for row in csv.reader(io.StringIO(text)) if row]
    if not rows:
        raise FormatError("empty matrix file")
    try:
        if rows[0][0].startswith("p="):
            p = int(rows[0][0][2:])
            theta = np.zeros((p, p))
            for i, j, v in rows[1:]:
                theta[int(i), int(j)] = float(v)
            return theta
        theta = np.array([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise FormatError(f"bad matrix entry: {exc}") from exc
    if theta.shape[0] != theta.shape[1]:
        raise FormatError("dense matrix is not square")
    return theta
