"""Stochastic-matrix arithmetic: exponentials, stationary laws, hitting sums."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdsync import (
    ConvergenceError,
    GeneratorMatrix,
    InfiniteExpectedTimeError,
    ProbVector,
    StochMatrix,
    ValidationError,
    first_order_N,
    mat_exp,
    random_generator_matrix,
    stationary_distribution,
)
from rdsync.stochastic_core import fundamental_sum_apply

from refsystems import M_REF, Q2_ENTRIES


def closed_form_N2(eps: float) -> np.ndarray:
    """s=2 noise kernel: diagonal (1+e^{-2 eps})/2, off-diagonal (1-e^{-2 eps})/2."""
    d = (1.0 + math.exp(-2.0 * eps)) / 2.0
    o = (1.0 - math.exp(-2.0 * eps)) / 2.0
    return np.array([[d, o], [o, d]])


def taylor_exp(A: np.ndarray, terms: int = 30) -> np.ndarray:
    """Independent truncated-series oracle, no scaling or squaring."""
    out = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    for k in range(1, terms + 1):
        term = term @ A / k
        out = out + term
    return out


generators = st.integers(min_value=0, max_value=2**31 - 1)


class TestStochMatrix:
    def test_valid(self):
        m = StochMatrix(M_REF)
        assert m.dim == 2

    def test_entries_read_only(self):
        m = StochMatrix(M_REF)
        with pytest.raises(ValueError):
            m.entries[0, 0] = 0.5

    def test_rejects_negative_entry(self):
        with pytest.raises(ValidationError, match=">= 0"):
            StochMatrix(np.array([[1.1, -0.1], [0.5, 0.5]]))

    def test_rejects_bad_row_sum(self):
        with pytest.raises(ValidationError, match="sums to"):
            StochMatrix(np.array([[0.5, 0.4], [0.5, 0.5]]))

    def test_rejects_non_square(self):
        with pytest.raises(ValidationError, match="square"):
            StochMatrix(np.array([[0.5, 0.5]]))


class TestGeneratorMatrix:
    def test_rejects_diagonal_not_minus_one(self):
        with pytest.raises(ValidationError, match="diagonal"):
            GeneratorMatrix(np.array([[-0.5, 0.5], [1.0, -1.0]]))

    def test_rejects_negative_off_diagonal(self):
        with pytest.raises(ValidationError, match="off-diagonal"):
            GeneratorMatrix(np.array([[-1.0, 1.0], [-0.1, -1.0]]))

    def test_rejects_nonzero_row_sum(self):
        with pytest.raises(ValidationError, match="sums to"):
            GeneratorMatrix(np.array([[-1.0, 0.9], [1.0, -1.0]]))


class TestProbVector:
    def test_uniform(self):
        v = ProbVector.uniform(4)
        np.testing.assert_allclose(v.entries, 0.25)

    def test_rejects_negative(self):
        with pytest.raises(ValidationError, match=">= 0"):
            ProbVector(np.array([1.2, -0.2]))

    def test_rejects_bad_sum(self):
        with pytest.raises(ValidationError, match="sums to"):
            ProbVector(np.array([0.5, 0.4]))


class TestMatExp:
    def test_zero_eps_is_identity(self, q2):
        np.testing.assert_array_equal(mat_exp(q2, 0.0).entries, np.eye(2))

    def test_s2_closed_form_at_point_one(self, q2):
        got = mat_exp(q2, 0.1).entries
        np.testing.assert_allclose(got, closed_form_N2(0.1), atol=1e-10)
        np.testing.assert_allclose(got[0, 0], 0.909365, atol=5e-7)

    def test_matches_taylor_oracle_s5(self):
        Q = random_generator_matrix(5, seed=11)
        got = mat_exp(Q, 0.05).entries
        np.testing.assert_allclose(got, taylor_exp(0.05 * Q.entries), atol=1e-10)

    def test_rejects_negative_eps(self, q2):
        with pytest.raises(ValidationError, match=">= 0"):
            mat_exp(q2, -0.01)

    @settings(max_examples=40, deadline=None)
    @given(seed=generators, s=st.integers(2, 8), eps=st.floats(0.0, 0.5))
    def test_rows_stochastic(self, seed, s, eps):
        N = mat_exp(random_generator_matrix(s, seed), eps)
        assert np.all(N.entries >= 0.0)
        np.testing.assert_allclose(N.entries.sum(axis=1), 1.0, atol=1e-10)

    @settings(max_examples=25, deadline=None)
    @given(seed=generators, s=st.integers(2, 6), e1=st.floats(0.0, 0.25), e2=st.floats(0.0, 0.25))
    def test_semigroup(self, seed, s, e1, e2):
        Q = random_generator_matrix(s, seed)
        lhs = mat_exp(Q, e1).entries @ mat_exp(Q, e2).entries
        rhs = mat_exp(Q, e1 + e2).entries
        np.testing.assert_allclose(lhs, rhs, atol=1e-8)


class TestFirstOrderN:
    def test_zero_eps_is_identity(self, q2):
        np.testing.assert_array_equal(first_order_N(q2, 0.0).entries, np.eye(2))

    def test_direct_substitution(self, q2):
        np.testing.assert_allclose(
            first_order_N(q2, 0.1).entries, np.array([[0.9, 0.1], [0.1, 0.9]])
        )

    def test_close_to_exact_at_small_eps(self, q2):
        gap = np.abs(mat_exp(q2, 0.01).entries - first_order_N(q2, 0.01).entries).max()
        assert gap <= 1e-4

    def test_rejects_eps_outside_unit_interval(self, q2):
        with pytest.raises(ValidationError):
            first_order_N(q2, -0.1)
        with pytest.raises(ValidationError):
            first_order_N(q2, 1.5)

    @settings(max_examples=30, deadline=None)
    @given(seed=generators, s=st.integers(2, 12), eps=st.floats(0.0, 0.1))
    def test_quadratic_error_bound(self, seed, s, eps):
        Q = random_generator_matrix(s, seed)
        gap = np.abs(mat_exp(Q, eps).entries - first_order_N(Q, eps).entries).max()
        assert gap <= 2.0 * eps * eps + 1e-15


class TestStationaryDistribution:
    def test_reference_chain(self):
        # pi M = pi solved by hand for the 2x2 chain: pi = (3/7, 4/7)
        pi = stationary_distribution(StochMatrix(M_REF))
        np.testing.assert_allclose(pi.entries, [3.0 / 7.0, 4.0 / 7.0], atol=1e-10)

    def test_identity_fixed_point_is_uniform(self):
        pi = stationary_distribution(StochMatrix(np.eye(3)))
        np.testing.assert_allclose(pi.entries, 1.0 / 3.0)

    def test_periodic_chain_raises(self):
        swap = StochMatrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
        with pytest.raises(ConvergenceError):
            stationary_distribution(swap, tol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seed=generators, s=st.integers(2, 8))
    def test_output_is_stationary(self, seed, s):
        rng = np.random.default_rng(seed)
        # strictly positive rows make the chain irreducible and aperiodic
        P = rng.random((s, s)) + 0.05
        P /= P.sum(axis=1, keepdims=True)
        M = StochMatrix(P)
        pi = stationary_distribution(M, tol=1e-13)
        np.testing.assert_allclose(pi.entries @ P, pi.entries, atol=1e-10)


class TestFundamentalSumApply:
    def test_reference_blocks(self):
        # (I - Mbar) x = 1 gives x = (5, 5) and (2.5, 2.5) by symmetry
        u = ProbVector.uniform(2)
        assert fundamental_sum_apply(np.array([[0.2, 0.6], [0.6, 0.2]]), u) == pytest.approx(
            5.0, abs=1e-9
        )
        assert fundamental_sum_apply(np.array([[0.1, 0.5], [0.5, 0.1]]), u) == pytest.approx(
            2.5, abs=1e-9
        )

    def test_zero_matrix_is_one_step(self):
        assert fundamental_sum_apply(np.zeros((3, 3)), ProbVector.uniform(3)) == pytest.approx(
            1.0
        )

    def test_singular_raises_infinite(self):
        stochastic = np.array([[0.0, 1.0], [1.0, 0.0]])
        with pytest.raises(InfiniteExpectedTimeError):
            fundamental_sum_apply(stochastic, ProbVector.uniform(2))

    def test_rejects_super_stochastic_rows(self):
        with pytest.raises(ValidationError, match="row sums"):
            fundamental_sum_apply(np.array([[0.9, 0.9], [0.1, 0.1]]), ProbVector.uniform(2))

    @settings(max_examples=30, deadline=None)
    @given(seed=generators, s=st.integers(1, 8))
    def test_matches_neumann_partial_sum(self, seed, s):
        rng = np.random.default_rng(seed)
        Mbar = rng.random((s, s))
        Mbar *= 0.9 / Mbar.sum(axis=1).max()  # spectral radius <= row-sum max = 0.9
        w = rng.random(s) + 0.01
        mu0 = ProbVector(w / w.sum())
        direct = fundamental_sum_apply(Mbar, mu0)
        x = mu0.entries.copy()
        partial = 0.0
        for _ in range(200):
            partial += x.sum()
            x = x @ Mbar
        assert direct == pytest.approx(partial, abs=1e-8)


class TestRandomGeneratorMatrix:
    def test_s2_is_unique(self):
        for seed in (0, 1, 99):
            np.testing.assert_array_equal(
                random_generator_matrix(2, seed).entries, Q2_ENTRIES
            )

    def test_deterministic_given_seed(self):
        a = random_generator_matrix(3, seed=42)
        b = random_generator_matrix(3, seed=42)
        np.testing.assert_array_equal(a.entries, b.entries)

    def test_row_sums_zero(self):
        Q = random_generator_matrix(3, seed=42)
        np.testing.assert_allclose(Q.entries.sum(axis=1), 0.0, atol=1e-12)

    def test_rejects_small_s(self):
        with pytest.raises(ValidationError):
            random_generator_matrix(1, seed=0)
