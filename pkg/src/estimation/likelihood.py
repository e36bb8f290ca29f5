"""
Negative log-likelihood of an empirical measure and its Riemannian derivatives.

All quantities are evaluated in the whitened frame w = sigma^{-1/2} v sigma^{1/2},
where the sigma-orthogonal projector onto U becomes the orthogonal projector
Q Q* onto sigma^{-1/2} U.
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence

import numpy as np

from ..geometry.grassmann import Subspace, apply_transform, whitened_frames
from ..geometry.manifold import (
    CovarianceParameter,
    ScalarField,
    TangentVector,
    adjoint,
    metric_inner,
    same_point,
    tangent_basis,
)
from ..utils import BasePointMismatch, DimensionMismatch, compensated_sum

WEIGHT_SUM_TOL = 1e-12
DEGENERACY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """
    Weighted atoms P = sum_i w_i delta_{U_i} on Gr(m, r).

    Attributes:
        atoms: Observed subspaces sharing field, m and r
        weights: Positive weights summing to 1
    """
    atoms: tuple
    weights: np.ndarray

    def __post_init__(self):
        atoms = tuple(self.atoms)
        if not atoms:
            raise ValueError("Empirical measure needs at least one atom")
        first = atoms[0]
        for atom in atoms[1:]:
            if (atom.field, atom.m, atom.r) != (first.field, first.m, first.r):
                raise DimensionMismatch("Atoms differ in field or dimensions")

        weights = np.array(self.weights, dtype=float)
        if weights.shape != (len(atoms),):
            raise DimensionMismatch(f"Expected {len(atoms)} weights, got shape {weights.shape}")
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise ValueError("Weights must be positive and finite")
        if abs(math.fsum(weights) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"Weights sum to {math.fsum(weights):.15g}, not 1")
        weights.setflags(write=False)
        object.__setattr__(self, 'atoms', atoms)
        object.__setattr__(self, 'weights', weights)

    @classmethod
    def uniform(cls, subspaces: Sequence[Subspace]) -> "EmpiricalMeasure":
        """The empirical measure (delta_{U_1} + ... + delta_{U_n}) / n."""
        n = len(subspaces)
        if n == 0:
            raise ValueError("Empirical measure needs at least one atom")
        return cls(tuple(subspaces), np.full(n, 1.0 / n))

    @classmethod
    def weighted(cls, subspaces: Sequence[Subspace], weights: Sequence[float]) -> "EmpiricalMeasure":
        """Atoms with arbitrary positive weights, normalized to total mass 1."""
        weights = np.asarray(weights, dtype=float)
        total = math.fsum(weights)
        if total <= 0:
            raise ValueError("Weights must have positive total mass")
        return cls(tuple(subspaces), weights / total)

    def transformed(self, transform: np.ndarray) -> "EmpiricalMeasure":
        """Image measure AP, each atom mapped by apply_transform."""
        return EmpiricalMeasure(
            tuple(apply_transform(transform, atom) for atom in self.atoms), self.weights
        )

    @property
    def n(self) -> int:
        return len(self.atoms)

    @property
    def field(self) -> ScalarField:
        return self.atoms[0].field

    @property
    def m(self) -> int:
        return self.atoms[0].m

    @property
    def r(self) -> int:
        return self.atoms[0].r

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))

    @cached_property
    def frames(self) -> np.ndarray:
        """Stacked orthonormal frames, shape (n, m, r)."""
        return np.stack([atom.frame for atom in self.atoms])

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"EmpiricalMeasure(field={self.field.value}, m={self.m}, r={self.r}, n={self.n})"


def _check(measure: EmpiricalMeasure, sigma: CovarianceParameter):
    if measure.m != sigma.m or measure.field is not sigma.field:
        raise DimensionMismatch("Measure and parameter dimensions differ")


def whitened_projectors(measure: EmpiricalMeasure, sigma: CovarianceParameter) -> np.ndarray:
    """Stack of sigma^{-1/2} pi_{U_i}(sigma) sigma^{1/2}, shape (n, m, m)."""
    _check(measure, sigma)
    q = whitened_frames(sigma, measure.frames)
    return q @ adjoint(q)


def mean_projector(measure: EmpiricalMeasure, sigma: CovarianceParameter) -> np.ndarray:
    """sum_i w_i pi_{U_i}(sigma), the left side of the likelihood equation."""
    whitened = compensated_sum(measure.weights, whitened_projectors(measure, sigma))
    return sigma.sqrt @ whitened @ sigma.inv_sqrt


def neg_log_likelihood(measure: EmpiricalMeasure, sigma: CovarianceParameter) -> float:
    """
    l_P(sigma) = sum_i w_i l_{U_i}(sigma).

    Args:
        measure: Empirical measure P
        sigma: Covariance parameter

    Returns:
        Weighted sum of negative log-densities
    """
    _check(measure, sigma)
    whitened = sigma.inv_sqrt @ measure.frames
    _, log_dets = np.linalg.slogdet(adjoint(whitened) @ whitened)
    return 0.5 * math.fsum((measure.weights * log_dets).tolist())


def _gradient_whitened(measure: EmpiricalMeasure, projectors: np.ndarray) -> np.ndarray:
    identity = np.eye(measure.m) * (measure.r / measure.m)
    return identity - compensated_sum(measure.weights, projectors)


def gradient(measure: EmpiricalMeasure, sigma: CovarianceParameter) -> TangentVector:
    """
    Riemannian gradient (r/m) I - sum_i w_i pi_{U_i}(sigma).

    Args:
        measure: Empirical measure P
        sigma: Base point

    Returns:
        TangentVector at sigma; zero exactly at a solution of the likelihood equation
    """
    projectors = whitened_projectors(measure, sigma)
    return TangentVector.from_whitened(sigma, _gradient_whitened(measure, projectors))


def _hessian_whitened(measure: EmpiricalMeasure, projectors: np.ndarray,
                      whitened: np.ndarray) -> np.ndarray:
    # T_i = P_i w (I - P_i); the summand is T_i + T_i*
    pw = projectors @ whitened
    terms = pw - pw @ projectors
    return compensated_sum(measure.weights, terms + adjoint(terms))


def hessian_apply(measure: EmpiricalMeasure, sigma: CovarianceParameter,
                  vector: TangentVector) -> TangentVector:
    """
    Covariant derivative nabla_v grad l_P at sigma.

    sum_i w_i [pi_i v (I - pi_i) + (I - pi_i) v pi_i]; self-adjoint and positive
    semidefinite for the metric.
    """
    if not same_point(vector.base, sigma):
        raise BasePointMismatch("Tangent vector is not attached to sigma")
    projectors = whitened_projectors(measure, sigma)
    return TangentVector.from_whitened(
        sigma, _hessian_whitened(measure, projectors, vector.whitened)
    )


def hessian_quadratic(measure: EmpiricalMeasure, sigma: CovarianceParameter,
                      vector: TangentVector) -> float:
    """Second derivative of l_P along the geodesic with velocity v."""
    return metric_inner(hessian_apply(measure, sigma, vector), vector)


def hessian_matrix(measure: EmpiricalMeasure, sigma: CovarianceParameter,
                   basis: Optional[List[TangentVector]] = None) -> np.ndarray:
    """
    Dense Hessian H_jk = <nabla_{b_k} grad l_P, b_j> on a tangent basis.

    Args:
        measure: Empirical measure P
        sigma: Base point
        basis: Metric-orthonormal basis of T_sigma; tangent_basis(sigma) by default

    Returns:
        Symmetric (dim x dim) real matrix
    """
    basis = basis if basis is not None else tangent_basis(sigma)
    projectors = whitened_projectors(measure, sigma)
    dim = len(basis)
    images = [_hessian_whitened(measure, projectors, b.whitened) for b in basis]
    matrix = np.empty((dim, dim))
    for j, b in enumerate(basis):
        for k, image in enumerate(images):
            matrix[j, k] = np.real(np.sum(image * np.conj(b.whitened)))
    return (matrix + matrix.T) / 2


def residual(measure: EmpiricalMeasure, sigma: CovarianceParameter) -> float:
    """Frobenius norm of the gradient matrix."""
    return float(np.linalg.norm(gradient(measure, sigma).matrix))


def degenerate_directions(measure: EmpiricalMeasure, sigma: CovarianceParameter,
                          tol: float = DEGENERACY_TOL) -> List[TangentVector]:
    """
    Orthonormal basis of the near-kernel of the Hessian (eigenvalues below tol).

    Along these directions l_P is affine; a nonempty result at a stationary
    point means the minimizer is not unique.
    """
    basis = tangent_basis(sigma)
    eigenvalues, eigenvectors = np.linalg.eigh(hessian_matrix(measure, sigma, basis))
    stacked = np.stack([b.whitened for b in basis])
    directions = []
    for index in np.flatnonzero(eigenvalues < tol):
        coefficients = eigenvectors[:, index]
        whitened = np.tensordot(coefficients, stacked, axes=1)
        directions.append(TangentVector.from_whitened(sigma, whitened))
    return directions


__all__ = [
    'EmpiricalMeasure',
    'whitened_projectors',
    'mean_projector',
    'neg_log_likelihood',
    'gradient',
    'hessian_apply',
    'hessian_quadratic',
    'hessian_matrix',
    'residual',
    'degenerate_directions',
]
