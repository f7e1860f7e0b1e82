"""Singular-value helpers against an independent SVD oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from concentra.dips import lambda_dips
from concentra.linalg import (
    SquareMatrix,
    nu1,
    sigma1_lower_bound,
    singular_values,
    smallest_singular_value,
)
from concentra.ustat import lambda_matrix_u


class TestSmallestSingularValue:
    def test_identity(self):
        assert smallest_singular_value(SquareMatrix.identity(3)) == pytest.approx(1.0)

    def test_diagonal(self):
        assert smallest_singular_value(SquareMatrix.diagonal([2.0, 5.0])) == pytest.approx(2.0)
        assert smallest_singular_value(SquareMatrix.diagonal([-3.0, 7.0])) == pytest.approx(3.0)

    def test_lambda_dips_n3_vs_svd_oracle(self):
        """Frozen oracle: numpy SVD of [[5/3,-1,-1],[0,1,0],[0,0,1]]."""
        mat = lambda_dips(3)
        assert mat.entries == pytest.approx(
            np.array([[5.0 / 3.0, -1.0, -1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        )
        oracle = np.linalg.svd(mat.entries, compute_uv=False).min()
        assert smallest_singular_value(mat) == pytest.approx(oracle, rel=1e-12)
        # Value computed once from the oracle and pinned.
        assert smallest_singular_value(mat) == pytest.approx(0.7274948963856643, rel=1e-10)

    def test_random_matrices_vs_svd(self):
        rng = np.random.default_rng(2024)
        for _ in range(300):
            k = int(rng.integers(1, 9))
            a = rng.uniform(-1, 1, size=(k, k))
            mine = singular_values(a)
            ref = np.sort(np.linalg.svd(a, compute_uv=False))
            # Relative agreement on well-separated spectra, absolute on tiny ones.
            np.testing.assert_allclose(mine, ref, rtol=1e-9, atol=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(min_value=-1e3, max_value=1e3).filter(lambda c: abs(c) > 1e-6))
    def test_scaling_homogeneity(self, c):
        a = np.array([[1.0, 2.0, 0.5], [0.0, -1.5, 1.0], [2.0, 0.0, 3.0]])
        assert smallest_singular_value(c * a) == pytest.approx(
            abs(c) * smallest_singular_value(a), rel=1e-9
        )

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            smallest_singular_value(np.array([[np.nan, 0.0], [0.0, 1.0]]))
        with pytest.raises(ValueError):
            SquareMatrix(np.array([[np.inf]]))

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            SquareMatrix(np.ones((2, 3)))


class TestSigma1LowerBound:
    def test_identity3(self):
        assert sigma1_lower_bound(SquareMatrix.identity(3)) == pytest.approx(1.0 / 3.0)

    def test_one_by_one_is_abs(self):
        for c in (0.25, -4.0, 17.5):
            assert sigma1_lower_bound(np.array([[c]])) == pytest.approx(abs(c))

    def test_matches_det_trace_form(self):
        """Oracle: direct det(A^t A) / trace(A^t A)^(k-1) evaluation."""
        rng = np.random.default_rng(5)
        for _ in range(50):
            k = int(rng.integers(2, 7))
            a = rng.uniform(-1, 1, size=(k, k))
            gram = a.T @ a
            direct = np.sqrt(np.linalg.det(gram) / np.trace(gram) ** (k - 1))
            assert sigma1_lower_bound(a) == pytest.approx(direct, rel=1e-9, abs=1e-14)

    def test_lambda_u_bound_constant(self):
        """Lower bound on the coupling matrix dominates sqrt(kappa_d)/n^2's root."""
        from concentra.ustat import kappa_d

        for d, n in [(2, 10), (3, 10), (3, 100), (6, 100)]:
            lam = lambda_matrix_u(d, n)
            assert sigma1_lower_bound(lam) >= np.sqrt(kappa_d(d)) / n - 1e-15

    def test_never_exceeds_sigma1(self):
        rng = np.random.default_rng(99)
        for _ in range(500):
            k = int(rng.integers(2, 7))
            a = rng.uniform(-1, 1, size=(k, k))
            if np.linalg.svd(a, compute_uv=False).min() < 1e-6:
                continue
            assert sigma1_lower_bound(a) <= smallest_singular_value(a) + 1e-9

    def test_zero_matrix_rejected(self):
        with pytest.raises(ValueError):
            sigma1_lower_bound(np.zeros((3, 3)))


class TestNu1:
    def test_reciprocal_of_sigma1(self):
        a = np.array([[2.0, 0.0], [0.0, 5.0]])
        assert nu1(a) == pytest.approx(0.5)

    def test_singular_rejected(self):
        with pytest.raises(ValueError):
            nu1(np.zeros((2, 2)))
