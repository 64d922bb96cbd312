import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polytree.errors import EmptyGraph, FormatError, InvalidModel, SingularModel
from polytree.graphs import Dag
from polytree.learn import sample_correlations
from polytree.sem import (
    LinearSem,
    correlation_by_treks,
    correlation_matrix,
    covariance_matrix,
    format_sem,
    parse_sem,
    rescale,
    rho_bounds,
    sample,
    standardize,
    trek_correlation_matrix,
)

from conftest import random_polytree_dag, random_sem

V_STRUCT = LinearSem.standardized_from_edges(3, {(0, 2): 0.5, (1, 2): 0.6})


def random_unstandardized(rng, p):
    g = random_polytree_dag(rng, p)
    coefs = {e: float(rng.choice([-1, 1]) * rng.uniform(0.2, 2.0)) for e in g.sorted_edges()}
    return LinearSem.from_edges(p, coefs, rng.uniform(0.1, 3.0, size=p))


class TestModel:
    def test_support_must_match(self):
        with pytest.raises(InvalidModel):
            LinearSem(Dag(2, frozenset({(0, 1)})), np.zeros((2, 2)), np.ones(2))

    def test_positive_omega(self):
        with pytest.raises(InvalidModel):
            LinearSem.from_edges(2, {(0, 1): 0.5}, [1.0, 0.0])

    def test_immutable(self):
        with pytest.raises(ValueError):
            V_STRUCT.beta[0, 2] = 1.0


class TestStandardize:
    def test_identity_on_standardized(self):
        out = standardize(V_STRUCT)
        assert np.max(np.abs(out.beta - V_STRUCT.beta)) < 1e-12
        assert np.max(np.abs(out.omega - V_STRUCT.omega)) < 1e-12

    def test_single_edge(self):
        # Var(X0) = 4, Var(X1) = 0.25 * 4 + 3 = 4
        out = standardize(LinearSem.from_edges(2, {(0, 1): 0.5}, [4.0, 3.0]))
        assert out.beta[0, 1] == pytest.approx(0.5, abs=1e-12)
        assert out.omega == pytest.approx([1.0, 0.75], abs=1e-12)

    def test_unit_chain(self):
        out = standardize(LinearSem.from_edges(2, {(0, 1): 1.0}, [1.0, 1.0]))
        assert out.beta[0, 1] == pytest.approx(1 / math.sqrt(2), abs=1e-12)
        assert out.omega == pytest.approx([1.0, 0.5], abs=1e-12)

    def test_singular(self):
        m = LinearSem.from_edges(2, {(0, 1): 1.0}, [1e-14, 1e-14])
        with pytest.raises(SingularModel):
            standardize(m)

    @given(st.integers(2, 30), st.integers(0, 2**32 - 1))
    @settings(max_examples=100, deadline=None)
    def test_closure_after_standardize(self, p, seed):
        out = standardize(random_unstandardized(np.random.default_rng(seed), p))
        closure = out.omega + (out.beta ** 2).sum(axis=0)
        assert np.max(np.abs(closure - 1.0)) < 1e-12
        assert np.max(np.abs(np.diag(covariance_matrix(out)) - 1.0)) < 1e-12


class TestCovariance:
    def test_v_structure(self):
        sigma = covariance_matrix(V_STRUCT)
        assert V_STRUCT.omega[2] == pytest.approx(0.39)
        assert sigma[0, 2] == pytest.approx(0.5)
        assert sigma[1, 2] == pytest.approx(0.6)
        assert sigma[0, 1] == 0.0
        assert np.diag(sigma) == pytest.approx([1, 1, 1])

    def test_empty(self):
        m = LinearSem.from_edges(4, {}, np.ones(4))
        assert np.array_equal(covariance_matrix(m), np.eye(4))

    def test_matches_dense_formula(self, rng):
        for _ in range(20):
            m = random_unstandardized(rng, int(rng.integers(2, 25)))
            eye = np.eye(m.p)
            inv = np.linalg.inv(eye - m.beta)
            dense = inv.T @ np.diag(m.omega) @ inv
            assert np.allclose(covariance_matrix(m), dense, atol=1e-10)

    def test_determinant_is_noise_product(self, rng):
        for _ in range(50):
            m = random_unstandardized(rng, int(rng.integers(2, 20)))
            det = np.linalg.det(covariance_matrix(m))
            assert det == pytest.approx(np.prod(m.omega), rel=1e-9)

    def test_scaling_invariance(self, rng):
        for _ in range(50):
            m = random_unstandardized(rng, int(rng.integers(2, 20)))
            scaled = rescale(m, rng.uniform(0.1, 10, size=m.p))
            assert np.max(np.abs(correlation_matrix(m) - correlation_matrix(scaled))) < 1e-12


class TestTreks:
    def test_chain_product(self):
        m = LinearSem.standardized_from_edges(3, {(0, 1): 0.5, (1, 2): 0.4})
        assert correlation_by_treks(m, 0, 2) == pytest.approx(0.2)

    def test_collider_zero(self):
        assert correlation_by_treks(V_STRUCT, 0, 1) == 0.0

    def test_fork(self):
        m = LinearSem.standardized_from_edges(3, {(1, 0): 0.7, (1, 2): 0.3})
        assert correlation_by_treks(m, 0, 2) == pytest.approx(0.21)

    def test_matches_covariance_on_generated(self, rng):
        for _ in range(30):
            m = random_sem(rng)
            assert np.max(np.abs(covariance_matrix(m) - trek_correlation_matrix(m))) < 1e-10


class TestRhoBounds:
    def test_single_edge(self):
        m = LinearSem.standardized_from_edges(2, {(0, 1): 0.5})
        assert rho_bounds(m) == (0.5, 0.5)

    def test_v_structure(self):
        assert rho_bounds(V_STRUCT) == (0.5, 0.6)

    def test_empty(self):
        with pytest.raises(EmptyGraph):
            rho_bounds(LinearSem.from_edges(3, {}, np.ones(3)))

    def test_below_inverse_sqrt_max_indegree(self, rng):
        for _ in range(50):
            m = random_sem(rng)
            assert rho_bounds(m).rho_min < 1 / math.sqrt(m.dag.max_in_degree())
        for _ in range(50):
            m = standardize(random_unstandardized(rng, int(rng.integers(3, 20))))
            assert rho_bounds(m).rho_min < 1 / math.sqrt(m.dag.max_in_degree())


class TestSample:
    def test_deterministic(self):
        a = sample(V_STRUCT, 100, seed=42)
        b = sample(V_STRUCT, 100, seed=42)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, sample(V_STRUCT, 100, seed=43))

    def test_gaussian_edge_correlation(self):
        m = LinearSem.standardized_from_edges(2, {(0, 1): 0.5})
        x = sample(m, 200_000, "gaussian", seed=1)
        # standard error (1 - rho^2)/sqrt(n) ~ 0.0017; 0.01 is well beyond 4 sigma
        assert abs(np.corrcoef(x.T)[0, 1] - 0.5) < 0.01

    def test_rademacher_noise(self):
        m = LinearSem.from_edges(2, {(0, 1): 0.5}, [2.0, 0.7])
        x = sample(m, 100_000, "rademacher_scaled", seed=3)
        eps0 = x[:, 0]
        eps1 = x[:, 1] - 0.5 * x[:, 0]
        assert np.allclose(np.abs(eps0), math.sqrt(2.0))
        assert np.allclose(np.abs(eps1), math.sqrt(0.7))
        assert abs(eps1.var() / 0.7 - 1) < 0.01

    def test_uniform_noise(self):
        m = LinearSem.from_edges(1, {}, [3.0])
        x = sample(m, 100_000, "uniform", seed=4)[:, 0]
        assert np.max(np.abs(x)) <= 3.0 + 1e-12
        assert abs(x.var() / 3.0 - 1) < 0.02

    @pytest.mark.parametrize("family", ["gaussian", "uniform", "rademacher_scaled"])
    def test_edge_correlations_converge(self, family, rng):
        m = random_sem(rng, p_range=(10, 20))
        corr = sample_correlations(sample(m, 100_000, family, seed=5))
        for i, j in m.dag.edges:
            assert abs(corr[i, j] - m.beta[i, j]) < 0.015


class TestTextFormat:
    def test_round_trip_exact(self, rng):
        for _ in range(20):
            m = random_sem(rng)
            back = parse_sem(format_sem(m))
            assert back == m

    def test_layout(self):
        text = format_sem(LinearSem.from_edges(2, {(0, 1): 0.5}, [1.0, 0.75]))
        assert text == "p=2\n0 -> 1 : beta=0.5\nnode 0 : omega=1\nnode 1 : omega=0.75\n"

    @pytest.mark.parametrize(
        "text",
        [
            "p=2\n0 -> 1 : beta=0.5\nnode 0 : omega=1\n",
            "p=2\n0 -- 1 : beta=0.5\nnode 0 : omega=1\nnode 1 : omega=1\n",
            "p=2\n0 -> 1 : gamma=0.5\nnode 0 : omega=1\nnode 1 : omega=1\n",
            "p=2\n0 -> 1 : beta=x\nnode 0 : omega=1\nnode 1 : omega=1\n",
            "p=2\n0 -> 1 : beta=0.5\nnode 0 : omega=1\nnode 1 : omega=-1\n",
        ],
    )
    def test_malformed(self, text):
        with pytest.raises(FormatError):
            parse_sem(text)
