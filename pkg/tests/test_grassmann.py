"""
Tests for subspaces of the Grassmann manifold.
"""
import numpy as np
import pytest
from scipy import stats

from src.geometry.grassmann import (
    Subspace,
    apply_transform,
    intersection_dim,
    projector,
    subspace_from_matrix,
    subspace_intersection,
    subspace_sum,
    uniform_sample,
    whitened_frames,
)
from src.geometry.manifold import CovarianceParameter, ScalarField, normalize_parameter, random_parameter
from src.utils import DimensionMismatch, RankDeficient, SingularTransform


def span(*columns, m=4):
    """Subspace spanned by standard basis vectors e_i (1-based)."""
    return subspace_from_matrix(np.eye(m)[:, [c - 1 for c in columns]])


class TestSubspace:
    """Test cases for frames and subspace equality."""

    def test_standard_frame_kept(self):
        subspace = span(1, 2)
        np.testing.assert_allclose(np.abs(subspace.frame), np.eye(4)[:, :2], atol=1e-15)
        assert (subspace.m, subspace.r) == (4, 2)

    def test_frame_is_orthonormal(self, rng):
        subspace = subspace_from_matrix(rng.standard_normal((5, 3)))
        np.testing.assert_allclose(subspace.frame.T @ subspace.frame, np.eye(3), atol=1e-12)

    def test_change_of_basis(self, rng):
        frame = rng.standard_normal((5, 2))
        mixing = rng.standard_normal((2, 2)) + 2 * np.eye(2)
        assert subspace_from_matrix(frame) == subspace_from_matrix(frame @ mixing)

    def test_rank_deficient(self):
        with pytest.raises(RankDeficient):
            subspace_from_matrix(np.array([[1.0, 1.0], [0.0, 0.0], [2.0, 2.0]]))

    def test_dimension_bounds(self):
        with pytest.raises(DimensionMismatch):
            Subspace(ScalarField.REAL, np.eye(3))

    def test_from_orthonormal_reorthonormalizes(self):
        subspace = Subspace.from_orthonormal(np.array([[2.0], [0.0], [0.0]]))
        np.testing.assert_allclose(np.abs(subspace.frame[:, 0]), [1.0, 0.0, 0.0])

    def test_unhashable(self):
        with pytest.raises(TypeError):
            hash(span(1))

    def test_complex_frame(self, rng):
        subspace = uniform_sample(ScalarField.COMPLEX, 4, 2, rng)
        assert subspace.field is ScalarField.COMPLEX
        np.testing.assert_allclose(subspace.frame.conj().T @ subspace.frame, np.eye(2), atol=1e-12)


class TestUniformSample:
    """Test cases for draws from G_I."""

    def test_reproducible(self, rng_factory):
        first = uniform_sample(ScalarField.REAL, 4, 2, rng_factory(7))
        second = uniform_sample(ScalarField.REAL, 4, 2, rng_factory(7))
        np.testing.assert_array_equal(first.frame, second.frame)

    def test_invalid_dimensions(self, rng):
        with pytest.raises(DimensionMismatch):
            uniform_sample(ScalarField.REAL, 3, 3, rng)

    def test_mean_projector(self, rng):
        m, r, draws = 4, 2, 20000
        identity = CovarianceParameter.identity(m)
        projectors = np.array([projector(identity, uniform_sample(ScalarField.REAL, m, r, rng))
                               for _ in range(draws)])
        mean = projectors.mean(axis=0)
        standard_error = projectors.std(axis=0) / np.sqrt(draws)
        assert np.all(np.abs(mean - (r / m) * np.eye(m)) <= 5 * standard_error + 1e-12)

    def test_lines_in_the_plane(self, rng):
        angles = []
        for _ in range(2000):
            x = uniform_sample(ScalarField.REAL, 2, 1, rng).frame[:, 0]
            angles.append(np.mod(np.arctan2(x[1], x[0]), np.pi))
        assert stats.kstest(np.array(angles) / np.pi, 'uniform').pvalue > 1e-3


class TestIntersections:
    """Test cases for intersection dimensions, sums and intersections."""

    def test_examples(self):
        assert intersection_dim(span(1, 2), span(1, 2)) == 2
        assert intersection_dim(span(1, 2), span(3, 4)) == 0
        assert intersection_dim(span(1, 2), span(2, 3)) == 1

    def test_symmetric_and_bounded(self, rng):
        for _ in range(20):
            r, s = rng.integers(1, 5, size=2)
            first = uniform_sample(ScalarField.REAL, 5, int(r), rng)
            # shares at least the first column of the frame of U
            second = subspace_from_matrix(np.hstack([first.frame[:, :1], rng.standard_normal((5, int(s) - 1))]))
            d = intersection_dim(first, second)
            assert d == intersection_dim(second, first)
            assert max(0, first.dim + second.dim - 5) <= d <= min(first.dim, second.dim)

    def test_mismatched_spaces(self):
        with pytest.raises(DimensionMismatch):
            intersection_dim(span(1, m=3), span(1, m=4))

    def test_sum_and_intersection(self):
        assert subspace_sum(span(1, 2), span(2, 3)) == span(1, 2, 3)
        assert subspace_intersection(span(1, 2), span(2, 3)) == span(2)

    def test_trivial_results(self):
        assert subspace_sum(span(1, 2), span(3, 4)) is None
        assert subspace_intersection(span(1, 2), span(3, 4)) is None


class TestProjector:
    """Test cases for sigma-orthogonal projectors."""

    def test_euclidean_case(self, rng):
        subspace = uniform_sample(ScalarField.REAL, 4, 2, rng)
        expected = subspace.frame @ subspace.frame.T
        np.testing.assert_allclose(projector(CovarianceParameter.identity(4), subspace), expected, atol=1e-12)

    def test_explicit_plane_example(self):
        sigma = CovarianceParameter(ScalarField.REAL, np.diag([2.0, 0.5]))
        line = subspace_from_matrix(np.array([[1.0], [1.0]]))
        # X X* sigma^{-1} / (X* sigma^{-1} X) with X = (1, 1)
        expected = np.array([[0.5, 2.0], [0.5, 2.0]]) / 2.5
        np.testing.assert_allclose(projector(sigma, line), expected, atol=1e-12)

    def test_projector_properties(self, rng):
        sigma = random_parameter(ScalarField.COMPLEX, 4, rng)
        subspace = uniform_sample(ScalarField.COMPLEX, 4, 2, rng)
        pi = projector(sigma, subspace)
        np.testing.assert_allclose(pi @ pi, pi, atol=1e-10)
        assert abs(np.trace(pi) - 2) < 1e-10
        np.testing.assert_allclose(pi @ subspace.frame, subspace.frame, atol=1e-10)
        # self-sigma-adjoint
        np.testing.assert_allclose(sigma.matrix @ pi.conj().T @ sigma.inverse, pi, atol=1e-10)

    def test_frame_independent(self, rng):
        sigma = random_parameter(ScalarField.REAL, 4, rng)
        frame = rng.standard_normal((4, 2))
        mixing = rng.standard_normal((2, 2)) + 2 * np.eye(2)
        np.testing.assert_allclose(projector(sigma, subspace_from_matrix(frame)),
                                   projector(sigma, subspace_from_matrix(frame @ mixing)), atol=1e-10)

    def test_equivariance(self, rng):
        sigma = random_parameter(ScalarField.REAL, 4, rng)
        subspace = uniform_sample(ScalarField.REAL, 4, 2, rng)
        transform = rng.standard_normal((4, 4)) + 3 * np.eye(4)
        moved = normalize_parameter(transform @ sigma.matrix @ transform.T)
        np.testing.assert_allclose(projector(moved, apply_transform(transform, subspace)),
                                   transform @ projector(sigma, subspace) @ np.linalg.inv(transform),
                                   atol=1e-8)

    def test_whitened_frames(self, rng):
        sigma = random_parameter(ScalarField.REAL, 4, rng)
        subspace = uniform_sample(ScalarField.REAL, 4, 2, rng)
        q = whitened_frames(sigma, subspace.frame[None])[0]
        np.testing.assert_allclose(q @ q.T, sigma.inv_sqrt @ projector(sigma, subspace) @ sigma.sqrt, atol=1e-10)


class TestApplyTransform:
    """Test cases for the action of invertible matrices."""

    def test_identity(self, rng):
        subspace = uniform_sample(ScalarField.REAL, 4, 2, rng)
        assert apply_transform(np.eye(4), subspace) == subspace

    def test_diagonal_fixes_axis(self):
        assert apply_transform(np.diag([3.0, 1.0, 0.5]), span(1, m=3)) == span(1, m=3)

    def test_composition(self, rng):
        subspace = uniform_sample(ScalarField.REAL, 4, 2, rng)
        a = rng.standard_normal((4, 4))
        b = rng.standard_normal((4, 4))
        assert apply_transform(a, apply_transform(b, subspace)) == apply_transform(a @ b, subspace)

    def test_singular(self):
        with pytest.raises(SingularTransform):
            apply_transform(np.diag([1.0, 1.0, 0.0]), span(1, m=3))
