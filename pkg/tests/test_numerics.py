"""
Tests for matrix helpers and seeded random streams.
"""

import numpy as np
import pytest

from shallowmimic.exceptions import ConfigurationError, DomainError, ShapeError
from shallowmimic.numerics import (
    Axis,
    RngStream,
    as_matrix,
    axis_stats,
    matmul,
    sample_gaussian,
    transpose,
)
from shallowmimic.numerics.matrix import dense_product, standardize_columns


class TestAsMatrix:
    """Tests for as_matrix."""

    def test_converts_nested_lists(self):
        """Test that nested lists become a float64 matrix."""
        m = as_matrix([[1, 2], [3, 4]])
        assert m.dtype == np.float64
        assert m.shape == (2, 2)
        assert m.flags["C_CONTIGUOUS"]

    @pytest.mark.parametrize("data", [[1.0, 2.0], 3.0, np.zeros((2, 2, 2))])
    def test_rejects_wrong_rank(self, data):
        """Test that non two-dimensional input raises ShapeError."""
        with pytest.raises(ShapeError):
            as_matrix(data)

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_rejects_non_finite(self, bad):
        """Test that NaN and infinities raise DomainError."""
        with pytest.raises(DomainError):
            as_matrix([[1.0, bad]])


class TestMatmul:
    """Tests for matmul and transpose."""

    def test_identity(self):
        """Test that multiplying by I returns the input."""
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(matmul(a, np.eye(2)), a)

    def test_known_product(self):
        """Test a hand-computed 2x3 by 3x1 product."""
        a = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        b = np.array([[1.0], [0.0], [-1.0]])
        np.testing.assert_array_equal(matmul(a, b), [[-2.0], [-2.0]])

    def test_inner_dimension_mismatch(self):
        """Test that a 2x3 by 2x3 product raises ShapeError."""
        with pytest.raises(ShapeError):
            matmul(np.ones((2, 3)), np.ones((2, 3)))

    def test_transpose_of_product(self, rng):
        """Test that (AB)^T equals B^T A^T."""
        a = rng.standard_normal((3, 4))
        b = rng.standard_normal((4, 2))
        np.testing.assert_allclose(
            transpose(matmul(a, b)), matmul(transpose(b), transpose(a)), atol=1e-12
        )

    @pytest.mark.parametrize("seed", range(5))
    def test_associativity(self, seed):
        """Test that (AB)C equals A(BC) on random chains."""
        rng = RngStream(seed)
        a = rng.standard_normal((4, 6))
        b = rng.standard_normal((6, 3))
        c = rng.standard_normal((3, 5))
        left = matmul(matmul(a, b), c)
        right = matmul(a, matmul(b, c))
        assert np.linalg.norm(left - right) <= 1e-9 * np.linalg.norm(right)

    def test_dense_product_is_batch_invariant(self, rng):
        """Test that a row gives the same bits alone and inside a batch."""
        x = rng.standard_normal((37, 19))
        w = rng.standard_normal((11, 19))
        full = dense_product(x, w)
        for row in (0, 5, 36):
            np.testing.assert_array_equal(dense_product(x[row : row + 1], w)[0], full[row])


class TestAxisStats:
    """Tests for axis_stats."""

    def test_per_column(self):
        """Test column means and population standard deviations."""
        mean, std = axis_stats(np.array([[1.0, 2.0], [3.0, 6.0]]))
        np.testing.assert_array_equal(mean, [2.0, 4.0])
        np.testing.assert_array_equal(std, [1.0, 2.0])

    def test_per_row(self):
        """Test statistics aggregated over columns."""
        mean, std = axis_stats(np.array([[1.0, 3.0], [2.0, 2.0]]), Axis.COLS)
        np.testing.assert_array_equal(mean, [2.0, 2.0])
        np.testing.assert_array_equal(std, [1.0, 0.0])

    def test_single_row(self):
        """Test that one row gives its own values and zero spread."""
        mean, std = axis_stats(np.array([[2.0, 7.0]]))
        np.testing.assert_array_equal(mean, [2.0, 7.0])
        np.testing.assert_array_equal(std, [0.0, 0.0])

    def test_standardized_columns(self, rng):
        """Test that standardized columns have mean 0 and std 1."""
        m = rng.standard_normal((50, 4)) * np.array([1.0, 10.0, 0.1, 3.0]) + 5.0
        mean, std = axis_stats(m)

        again_mean, again_std = axis_stats(standardize_columns(m, mean, std, 1e-8))

        np.testing.assert_allclose(again_mean, 0.0, atol=1e-12)
        np.testing.assert_allclose(again_std, 1.0, atol=1e-12)

    def test_empty_matrix(self):
        """Test that an empty matrix raises DomainError."""
        with pytest.raises(DomainError):
            axis_stats(np.zeros((0, 3)))


class TestRngStream:
    """Tests for RngStream seeding and spawning."""

    def test_root_matches_default_rng(self):
        """Test that the root stream reproduces numpy.random.default_rng."""
        ours = RngStream(42).random(5)
        reference = np.random.default_rng(42).random(5)
        np.testing.assert_array_equal(ours, reference)

    def test_same_seed_same_draws(self):
        """Test determinism for identical seeds."""
        np.testing.assert_array_equal(
            RngStream(3).standard_normal((4, 4)), RngStream(3).standard_normal((4, 4))
        )

    def test_children_are_independent_of_parent_draws(self):
        """Test that spawning does not depend on how much the parent consumed."""
        fresh = RngStream(5)
        used = RngStream(5)
        used.random(100)
        np.testing.assert_array_equal(fresh.spawn(1).random(3), used.spawn(1).random(3))

    def test_distinct_children_differ(self):
        """Test that different stream ids give different draws."""
        root = RngStream(5)
        assert not np.array_equal(root.spawn(0).random(4), root.spawn(1).random(4))

    @pytest.mark.parametrize("seed", [-1, 2**64, 1.5, True])
    def test_invalid_seed(self, seed):
        """Test that seeds outside u64 raise ConfigurationError."""
        with pytest.raises(ConfigurationError):
            RngStream(seed)

    def test_dropout_mask_scaling(self):
        """Test that kept units carry 1 / (1 - rate)."""
        mask = RngStream(0).dropout_mask((1000,), 0.5)
        assert set(np.unique(mask)) <= {0.0, 2.0}

    def test_dropout_mask_expectation(self):
        """Test that inverted dropout masks average to one."""
        mask = RngStream(4).dropout_mask((20000, 3), 0.3)
        np.testing.assert_allclose(mask.mean(axis=0), 1.0, rtol=0.02)


class TestSampleGaussian:
    """Tests for sample_gaussian."""

    def test_zero_sigma(self):
        """Test that sigma = 0 yields mu everywhere."""
        np.testing.assert_array_equal(sample_gaussian(RngStream(0), 3, 2, 1.5, 0.0), 1.5)

    def test_sample_mean(self):
        """Test that 10^4 standard draws average within 0.05 of 0."""
        draws = sample_gaussian(RngStream(9), 100, 100)
        assert abs(float(draws.mean())) < 0.05

    def test_negative_sigma(self):
        """Test that a negative sigma raises DomainError."""
        with pytest.raises(DomainError):
            sample_gaussian(RngStream(0), 2, 2, 0.0, -1.0)
