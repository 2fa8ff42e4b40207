"""Sample covariance, eigendecomposition, pseudo-inverse and norms."""

import numpy as np
import pytest

from precshrink import DataMatrix, SingularMatrixError, matrix_norms, pseudo_inverse, sample_covariance
from precshrink.linalg import REGIME_INVERTIBLE, REGIME_PSEUDO, rank_tolerance


def diag_sample(values, n):
    """Data matrix whose sample covariance is exactly diag(values)."""
    p = len(values)
    y = np.zeros((p, n))
    for i, value in enumerate(values):
        y[i, i] = np.sqrt(n * value)
    return y


class TestDataMatrix:
    def test_requires_two_dims(self):
        with pytest.raises(ValueError, match="2-dimensional"):
            DataMatrix(np.zeros(3))

    def test_requires_two_observations(self):
        with pytest.raises(ValueError, match="n >= 2"):
            DataMatrix(np.zeros((3, 1)))

    def test_rejects_non_finite(self):
        bad = np.ones((2, 3))
        bad[0, 1] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            DataMatrix(bad)


class TestSampleCovariance:
    def test_identity_data(self):
        stats = sample_covariance(np.eye(2))
        np.testing.assert_array_equal(stats.matrix, 0.5 * np.eye(2))

    def test_no_centering_by_default(self):
        y = np.array([[1.0, 1.0, 1.0], [1.0, 2.0, 3.0]])
        stats = sample_covariance(y)
        np.testing.assert_allclose(stats.matrix, (y @ y.T) / 3.0, atol=1e-15)

    def test_centering_flag(self):
        rng = np.random.default_rng(0)
        y = rng.standard_normal((3, 50)) + 5.0
        stats = sample_covariance(y, center=True)
        centered = y - y.mean(axis=1, keepdims=True)
        np.testing.assert_allclose(stats.matrix, (centered @ centered.T) / 50.0, atol=1e-12)

    def test_law_of_large_numbers(self):
        rng = np.random.default_rng(42)
        y = rng.standard_normal((10, 1000))
        stats = sample_covariance(y)
        _, _, spectral = matrix_norms(stats.matrix - np.eye(10))
        assert spectral < 0.3

    def test_regime_invertible(self):
        rng = np.random.default_rng(1)
        stats = sample_covariance(rng.standard_normal((5, 20)))
        assert stats.regime == REGIME_INVERTIBLE
        np.testing.assert_allclose(stats.matrix @ stats.inverse, np.eye(5), atol=1e-8)

    def test_regime_pseudo_rank(self):
        rng = np.random.default_rng(2)
        stats = sample_covariance(rng.standard_normal((4, 2)))
        assert stats.regime == REGIME_PSEUDO
        tol = rank_tolerance(stats.eigenvalues, stats.p)
        assert int(np.sum(stats.eigenvalues > tol)) == 2

    def test_equal_dimensions_use_pseudo(self):
        rng = np.random.default_rng(3)
        stats = sample_covariance(rng.standard_normal((4, 4)))
        assert stats.regime == REGIME_PSEUDO

    def test_identical_data_raises(self):
        y = np.ones((3, 5))
        with pytest.raises(SingularMatrixError):
            sample_covariance(y)

    def test_eigendecomposition_reconstruction(self):
        rng = np.random.default_rng(4)
        for p in (5, 50, 200, 500):
            stats = sample_covariance(rng.standard_normal((p, 2 * p)))
            rebuilt = (stats.eigenvectors * stats.eigenvalues) @ stats.eigenvectors.T
            err = np.linalg.norm(rebuilt - stats.matrix) / np.linalg.norm(stats.matrix)
            assert err < 1e-10

    def test_ratio_and_sizes(self):
        rng = np.random.default_rng(5)
        stats = sample_covariance(rng.standard_normal((6, 24)))
        assert (stats.p, stats.n) == (6, 24)
        assert stats.ratio == 0.25

    def test_dual_shares_nonzero_eigenvalues(self):
        rng = np.random.default_rng(6)
        y = rng.standard_normal((8, 5))
        stats = sample_covariance(y)
        dual = np.linalg.eigvalsh((y.T @ y) / 5.0)
        kept = stats.eigenvalues[stats.eigenvalues > rank_tolerance(stats.eigenvalues, 8)]
        np.testing.assert_allclose(np.sort(kept), np.sort(dual), atol=1e-9)

    def test_cached_inverse_norms(self):
        rng = np.random.default_rng(7)
        stats = sample_covariance(rng.standard_normal((5, 30)))
        np.testing.assert_allclose(stats.inverse_frobenius_sq, np.sum(stats.inverse**2), rtol=1e-12)
        np.testing.assert_allclose(stats.inverse_trace_norm, np.trace(stats.inverse), rtol=1e-10)


class TestPseudoInverse:
    def test_diagonal(self):
        stats = sample_covariance(np.array([[2.0, 0.0], [0.0, 0.0]]))
        np.testing.assert_allclose(pseudo_inverse(stats), np.diag([0.5, 0.0]), atol=1e-15)

    def test_reduces_to_inverse(self):
        rng = np.random.default_rng(8)
        stats = sample_covariance(rng.standard_normal((4, 40)))
        np.testing.assert_allclose(pseudo_inverse(stats), stats.inverse, atol=1e-10)

    def test_moore_penrose_identities(self):
        rng = np.random.default_rng(9)
        stats = sample_covariance(rng.standard_normal((6, 3)))
        s, sp = stats.matrix, stats.inverse
        np.testing.assert_allclose(s @ sp @ s, s, atol=1e-8)
        np.testing.assert_allclose(sp @ s @ sp, sp, atol=1e-8)
        np.testing.assert_allclose((s @ sp).T, s @ sp, atol=1e-8)
        np.testing.assert_allclose((sp @ s).T, sp @ s, atol=1e-8)

    def test_matches_numpy_pinv(self):
        rng = np.random.default_rng(10)
        stats = sample_covariance(rng.standard_normal((7, 4)))
        np.testing.assert_allclose(
            stats.inverse, np.linalg.pinv(stats.matrix, hermitian=True), atol=1e-10
        )

    def test_scale_consistency(self):
        rng = np.random.default_rng(11)
        y = rng.standard_normal((6, 3))
        scale = 3.7
        base = sample_covariance(y).inverse
        scaled = sample_covariance(np.sqrt(scale) * y).inverse
        np.testing.assert_allclose(scaled, base / scale, rtol=1e-10, atol=1e-12)

    def test_degenerate_zero_matrix_warns(self):
        stats_input = np.zeros((3, 2))
        with pytest.warns(RuntimeWarning, match="degenerate"):
            stats = sample_covariance(stats_input)
        np.testing.assert_array_equal(stats.inverse, np.zeros((3, 3)))


class TestMatrixNorms:
    def test_identity(self):
        assert matrix_norms(np.eye(3)) == (3.0, 3.0, 1.0)

    def test_indefinite_diagonal(self):
        frob_sq, trace_norm, spectral = matrix_norms(np.diag([1.0, -2.0]))
        assert frob_sq == 5.0
        assert trace_norm == pytest.approx(3.0, abs=1e-12)
        assert spectral == pytest.approx(2.0, abs=1e-12)

    def test_positive_diagonal(self):
        frob_sq, trace_norm, spectral = matrix_norms(np.diag([1.0, 3.0]))
        assert frob_sq == 10.0
        assert trace_norm == pytest.approx(4.0, abs=1e-12)
        assert spectral == pytest.approx(3.0, abs=1e-12)

    def test_general_matrix_uses_singular_values(self):
        a = np.array([[0.0, 1.0], [0.0, 0.0]])
        frob_sq, trace_norm, spectral = matrix_norms(a)
        assert frob_sq == 1.0
        assert trace_norm == pytest.approx(1.0, abs=1e-12)
        assert spectral == pytest.approx(1.0, abs=1e-12)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError, match="square"):
            matrix_norms(np.zeros((2, 3)))
