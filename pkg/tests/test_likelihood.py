"""
Tests for the negative log-likelihood and its Riemannian derivatives.
"""
import numpy as np
import pytest
import scipy.linalg

from src.estimation.likelihood import (
    EmpiricalMeasure,
    degenerate_directions,
    gradient,
    hessian_apply,
    hessian_matrix,
    hessian_quadratic,
    mean_projector,
    neg_log_likelihood,
    residual,
)
from src.estimation.model import log_density
from src.geometry.grassmann import projector, subspace_from_matrix, uniform_sample
from src.geometry.manifold import (
    CovarianceParameter,
    ScalarField,
    TangentVector,
    geodesic,
    random_parameter,
    tangent_basis,
)
from src.utils import BasePointMismatch, DimensionMismatch


def span(*columns, m=4):
    return subspace_from_matrix(np.eye(m)[:, [c - 1 for c in columns]])


def random_instance(rng):
    """Random (P, sigma, v) with |v| = 1."""
    field = ScalarField.COMPLEX if rng.random() < 0.3 else ScalarField.REAL
    m = int(rng.integers(2, 6))
    r = int(rng.integers(1, m))
    n = int(rng.integers(1, 9))
    atoms = [uniform_sample(field, m, r, rng) for _ in range(n)]
    measure = EmpiricalMeasure.weighted(atoms, rng.uniform(0.5, 1.5, size=n))
    sigma = random_parameter(field, m, rng, scale=0.5)
    basis = tangent_basis(sigma)
    whitened = sum(c * b.whitened for c, b in zip(rng.standard_normal(len(basis)), basis))
    vector = TangentVector.from_whitened(sigma, whitened)
    return measure, sigma, (1.0 / vector.norm()) * vector


def along(measure, sigma, vector, t):
    return neg_log_likelihood(measure, geodesic(sigma, vector, t))


class TestEmpiricalMeasure:
    """Test cases for weighted atom lists."""

    def test_uniform(self):
        measure = EmpiricalMeasure.uniform([span(1, 2), span(3, 4), span(1, 3)])
        assert measure.n == len(measure) == 3
        assert (measure.m, measure.r) == (4, 2)
        assert measure.is_uniform
        assert measure.frames.shape == (3, 4, 2)

    def test_weighted_normalizes(self):
        measure = EmpiricalMeasure.weighted([span(1), span(2)], [1.0, 3.0])
        np.testing.assert_allclose(measure.weights, [0.25, 0.75])
        assert not measure.is_uniform

    def test_rejects_bad_weights(self):
        with pytest.raises(ValueError, match="sum"):
            EmpiricalMeasure((span(1), span(2)), np.array([0.5, 0.6]))
        with pytest.raises(ValueError, match="positive"):
            EmpiricalMeasure((span(1), span(2)), np.array([1.5, -0.5]))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            EmpiricalMeasure.uniform([])

    def test_rejects_mixed_dimensions(self):
        with pytest.raises(DimensionMismatch):
            EmpiricalMeasure.uniform([span(1, 2), span(1)])

    def test_transformed(self, rng):
        measure = EmpiricalMeasure.uniform([uniform_sample(ScalarField.REAL, 3, 1, rng) for _ in range(4)])
        transform = rng.standard_normal((3, 3)) + 2 * np.eye(3)
        moved = measure.transformed(transform)
        assert moved.n == 4
        np.testing.assert_array_equal(moved.weights, measure.weights)


class TestNegLogLikelihood:
    """Test cases for l_P."""

    def test_zero_at_identity(self, rng):
        measure = EmpiricalMeasure.uniform([uniform_sample(ScalarField.REAL, 4, 2, rng) for _ in range(6)])
        assert neg_log_likelihood(measure, CovarianceParameter.identity(4)) == pytest.approx(0.0, abs=1e-14)

    def test_single_atom(self, rng):
        atom = uniform_sample(ScalarField.COMPLEX, 4, 2, rng)
        sigma = random_parameter(ScalarField.COMPLEX, 4, rng)
        assert neg_log_likelihood(EmpiricalMeasure.uniform([atom]), sigma) == pytest.approx(
            log_density(sigma, atom), abs=1e-12)

    def test_axes_in_the_plane_are_flat(self):
        measure = EmpiricalMeasure.uniform([span(1, m=2), span(2, m=2)])
        for a in (0.1, 1.0, 7.0):
            sigma = CovarianceParameter(ScalarField.REAL, np.diag([a, 1 / a]))
            assert neg_log_likelihood(measure, sigma) == pytest.approx(0.0, abs=1e-14)

    def test_order_independent(self, rng):
        atoms = [uniform_sample(ScalarField.REAL, 5, 2, rng) for _ in range(30)]
        sigma = random_parameter(ScalarField.REAL, 5, rng)
        forward = EmpiricalMeasure.uniform(atoms)
        backward = EmpiricalMeasure.uniform(atoms[::-1])
        assert neg_log_likelihood(forward, sigma) == pytest.approx(neg_log_likelihood(backward, sigma), abs=1e-14)
        np.testing.assert_allclose(mean_projector(forward, sigma), mean_projector(backward, sigma), atol=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            neg_log_likelihood(EmpiricalMeasure.uniform([span(1, 2)]), CovarianceParameter.identity(3))


class TestGradient:
    """Test cases for the Riemannian gradient."""

    def test_single_coordinate_plane(self):
        measure = EmpiricalMeasure.uniform([span(1, 2)])
        grad = gradient(measure, CovarianceParameter.identity(4))
        np.testing.assert_allclose(grad.matrix, 0.5 * np.eye(4) - np.diag([1.0, 1.0, 0.0, 0.0]), atol=1e-14)

    def test_matches_mean_projector(self, rng):
        measure, sigma, _ = random_instance(rng)
        expected = (measure.r / measure.m) * np.eye(measure.m) - mean_projector(measure, sigma)
        np.testing.assert_allclose(gradient(measure, sigma).matrix, expected, atol=1e-10)

    def test_mean_projector_definition(self, rng):
        measure, sigma, _ = random_instance(rng)
        expected = sum(w * projector(sigma, atom) for w, atom in zip(measure.weights, measure.atoms))
        np.testing.assert_allclose(mean_projector(measure, sigma), expected, atol=1e-10)

    def test_finite_differences(self, rng):
        h = 1e-5
        for _ in range(100):
            measure, sigma, vector = random_instance(rng)
            difference = (along(measure, sigma, vector, h) - along(measure, sigma, vector, -h)) / (2 * h)
            slope = float(np.real(np.sum(gradient(measure, sigma).whitened * np.conj(vector.whitened))))
            assert abs(slope - difference) <= 1e-6 * max(1.0, abs(difference))


class TestHessian:
    """Test cases for the covariant derivative of the gradient."""

    def test_zero_vector(self, rng):
        measure, sigma, _ = random_instance(rng)
        assert hessian_apply(measure, sigma, TangentVector.zero(sigma)).norm() == 0.0

    def test_invariant_directions(self):
        measure = EmpiricalMeasure.uniform([span(1, 2)])
        identity = CovarianceParameter.identity(4)
        block = np.zeros((4, 4))
        block[:2, :2] = [[1.0, 2.0], [2.0, -3.0]]
        block[2:, 2:] = [[0.5, 0.1], [0.1, 1.5]]
        vector = TangentVector(identity, block)
        assert hessian_apply(measure, identity, vector).norm() < 1e-12

    def test_finite_differences(self, rng):
        h = 1e-4
        for _ in range(100):
            measure, sigma, vector = random_instance(rng)
            difference = (along(measure, sigma, vector, h) - 2 * neg_log_likelihood(measure, sigma)
                          + along(measure, sigma, vector, -h)) / h ** 2
            assert abs(hessian_quadratic(measure, sigma, vector) - difference) <= 1e-4 * max(1.0, abs(difference))

    def test_positive_semidefinite(self, rng):
        for _ in range(100):
            measure, sigma, _ = random_instance(rng)
            assert np.linalg.eigvalsh(hessian_matrix(measure, sigma)).min() >= -1e-9

    def test_self_adjoint(self, rng):
        measure, sigma, first = random_instance(rng)
        basis = tangent_basis(sigma)
        second = TangentVector.from_whitened(sigma, basis[0].whitened + 0.5 * basis[-1].whitened)
        left = np.real(np.sum(hessian_apply(measure, sigma, first).whitened * np.conj(second.whitened)))
        right = np.real(np.sum(first.whitened * np.conj(hessian_apply(measure, sigma, second).whitened)))
        assert left == pytest.approx(right, abs=1e-12)

    def test_base_point_mismatch(self, rng):
        measure, sigma, vector = random_instance(rng)
        with pytest.raises(BasePointMismatch):
            hessian_apply(measure, CovarianceParameter.identity(sigma.m, sigma.field), vector)


class TestAffineDirections:
    """Test cases for the flat directions of l_P."""

    def setup_method(self):
        rng = np.random.default_rng(2024)
        # lines inside <e1, e2> or <e3, e4>, all invariant under diag(1, 1, -1, -1)
        self.atoms = []
        for block in ((0, 1), (2, 3), (0, 1), (2, 3), (0, 1), (2, 3)):
            frame = np.zeros((4, 1))
            frame[list(block), 0] = rng.standard_normal(2)
            self.atoms.append(subspace_from_matrix(frame))
        self.identity = CovarianceParameter.identity(4)
        self.vector = TangentVector(self.identity, np.diag([0.5, 0.5, -0.5, -0.5]))
        self.rng = rng

    def test_flat_along_invariant_direction(self):
        measure = EmpiricalMeasure.uniform(self.atoms)
        assert hessian_quadratic(measure, self.identity, self.vector) <= 1e-10
        ts = np.linspace(-2.0, 2.0, 21)
        values = np.array([along(measure, self.identity, self.vector, t) for t in ts])
        chord = values[0] + (values[-1] - values[0]) * (ts - ts[0]) / (ts[-1] - ts[0])
        assert np.max(np.abs(values - chord)) <= 1e-8

    def test_perturbed_atom_is_strictly_convex(self):
        atoms = list(self.atoms)
        atoms[0] = uniform_sample(ScalarField.REAL, 4, 1, self.rng)
        measure = EmpiricalMeasure.uniform(atoms)
        h = 0.5
        second = (along(measure, self.identity, self.vector, h) - 2 * neg_log_likelihood(measure, self.identity)
                  + along(measure, self.identity, self.vector, -h)) / h ** 2
        assert second >= 1e-4

    def test_criterion_matches_invariance(self):
        measure = EmpiricalMeasure.uniform(self.atoms)
        for atom in measure.atoms:
            pi = projector(self.identity, atom)
            assert np.linalg.norm((np.eye(4) - pi) @ self.vector.matrix @ pi) <= 1e-9


class TestResidualAndDegeneracy:
    """Test cases for the likelihood-equation residual and the Hessian near-kernel."""

    def test_symmetric_sample(self):
        measure = EmpiricalMeasure.uniform([span(1, m=2), span(2, m=2)])
        assert residual(measure, CovarianceParameter.identity(2)) < 1e-15

    def test_single_atom_never_stationary(self, rng):
        measure = EmpiricalMeasure.uniform([uniform_sample(ScalarField.REAL, 4, 2, rng)])
        for _ in range(5):
            assert residual(measure, random_parameter(ScalarField.REAL, 4, rng)) > 0.1

    def test_flat_direction_in_the_plane(self):
        measure = EmpiricalMeasure.uniform([span(1, m=2), span(2, m=2)])
        directions = degenerate_directions(measure, CovarianceParameter.identity(2))
        assert len(directions) == 1
        np.testing.assert_allclose(np.abs(directions[0].matrix), np.eye(2) / np.sqrt(2), atol=1e-10)

    def test_single_atom_kernel(self, rng):
        for field in ScalarField:
            sigma = random_parameter(field, 4, rng)
            atom = uniform_sample(field, 4, 2, rng)
            pi = projector(sigma, atom)
            basis = tangent_basis(sigma)
            # v -> (I - pi) v pi on the real coordinates of T_sigma
            images = [((np.eye(4) - pi) @ b.matrix @ pi).ravel() for b in basis]
            linear_map = np.array([np.concatenate([image.real, image.imag]) for image in images]).T
            expected = scipy.linalg.null_space(linear_map, rcond=1e-10).shape[1]
            found = len(degenerate_directions(EmpiricalMeasure.uniform([atom]), sigma))
            assert found == expected

    def test_generic_sample_has_no_flat_direction(self, rng):
        atoms = [uniform_sample(ScalarField.REAL, 4, 2, rng) for _ in range(8)]
        measure = EmpiricalMeasure.uniform(atoms)
        assert degenerate_directions(measure, random_parameter(ScalarField.REAL, 4, rng)) == []
