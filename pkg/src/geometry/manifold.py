"""
Geometry of the parameter space Pos(m).

This module handles:
- Unimodular positive definite self-adjoint matrices (CovarianceParameter)
- Tangent vectors: self-sigma-adjoint, trace-zero matrices (TangentVector)
- The trace metric, geodesics and the induced distance
- Eigendecomposition-based square roots, logarithms and exponentials

Every function works over the real or the complex field; the adjoint is the
conjugate transpose in both cases.
"""

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from ..utils import (
    BasePointMismatch,
    DimensionMismatch,
    NotPositiveDefinite,
    NotSelfAdjoint,
)

# Relative eigenvalue floor for positive definiteness
EIGEN_FLOOR = 1e-12
SELF_ADJOINT_TOL = 1e-12
DETERMINANT_TOL = 1e-10
TANGENT_TOL = 1e-10


class ScalarField(Enum):
    """Scalar field F of the model: real or complex numbers."""
    REAL = "real"
    COMPLEX = "complex"

    @property
    def i_f(self) -> int:
        """Real dimension of the field (1 for R, 2 for C)."""
        return 1 if self is ScalarField.REAL else 2

    @property
    def dtype(self) -> type:
        return np.float64 if self is ScalarField.REAL else np.complex128

    @classmethod
    def infer(cls, matrix: np.ndarray) -> "ScalarField":
        return cls.COMPLEX if np.iscomplexobj(matrix) else cls.REAL

    @classmethod
    def parse(cls, value) -> "ScalarField":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


def adjoint(matrix: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(matrix, -1, -2))


def hermitian_part(matrix: np.ndarray) -> np.ndarray:
    return (matrix + adjoint(matrix)) / 2


def as_field(matrix: np.ndarray, field: ScalarField) -> np.ndarray:
    """Cast a matrix to the dtype of a field, rejecting imaginary parts over R."""
    matrix = np.asarray(matrix)
    if field is ScalarField.REAL and np.iscomplexobj(matrix):
        if np.max(np.abs(matrix.imag), initial=0.0) > 0:
            raise DimensionMismatch("Complex entries given for a real parameter")
        matrix = matrix.real
    return np.array(matrix, dtype=field.dtype)


def eigh_function(eigenvalues: np.ndarray, eigenvectors: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Rebuild Q diag(values) Q* from an eigendecomposition."""
    return (eigenvectors * values) @ adjoint(eigenvectors)


@dataclass(frozen=True, eq=False)
class CovarianceParameter:
    """
    A point sigma of Pos(m): self-adjoint, positive definite, determinant 1.

    Attributes:
        field: Scalar field of the entries
        matrix: m x m self-adjoint matrix
    """
    field: ScalarField
    matrix: np.ndarray

    def __post_init__(self):
        matrix = as_field(self.matrix, self.field)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionMismatch(f"Parameter must be square, got shape {matrix.shape}")
        scale = max(1.0, float(np.max(np.abs(matrix))))
        if np.max(np.abs(matrix - adjoint(matrix))) > SELF_ADJOINT_TOL * scale:
            raise NotSelfAdjoint("Parameter matrix is not self-adjoint")
        matrix.setflags(write=False)
        object.__setattr__(self, 'matrix', matrix)

        eigenvalues = self.eigenvalues
        if eigenvalues[0] <= EIGEN_FLOOR * eigenvalues[-1]:
            raise NotPositiveDefinite(
                f"Smallest eigenvalue {eigenvalues[0]:.3e} is not positive"
            )
        # Eigenvalue roundoff grows with the condition number
        if abs(self.log_det) > DETERMINANT_TOL * max(1.0, self.condition_number):
            raise ValueError(f"Parameter determinant {np.exp(self.log_det):.12g} is not 1")

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def _eigh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(hermitian_part(self.matrix))

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._eigh[0]

    @property
    def eigenvectors(self) -> np.ndarray:
        return self._eigh[1]

    @cached_property
    def log_det(self) -> float:
        return float(np.sum(np.log(self.eigenvalues)))

    @cached_property
    def condition_number(self) -> float:
        return float(self.eigenvalues[-1] / self.eigenvalues[0])

    @cached_property
    def sqrt(self) -> np.ndarray:
        """sigma^{1/2}"""
        return hermitian_part(eigh_function(*self._eigh, np.sqrt(self.eigenvalues)))

    @cached_property
    def inv_sqrt(self) -> np.ndarray:
        """sigma^{-1/2}"""
        return hermitian_part(eigh_function(*self._eigh, 1.0 / np.sqrt(self.eigenvalues)))

    @cached_property
    def inverse(self) -> np.ndarray:
        return hermitian_part(eigh_function(*self._eigh, 1.0 / self.eigenvalues))

    @classmethod
    def identity(cls, m: int, field: ScalarField = ScalarField.REAL) -> "CovarianceParameter":
        return cls(field, np.eye(m, dtype=field.dtype))

    def __repr__(self) -> str:
        return f"CovarianceParameter(field={self.field.value}, m={self.m})"


def normalize_parameter(matrix: np.ndarray,
                        field: Optional[ScalarField] = None,
                        symmetry_tol: float = 1e-8) -> CovarianceParameter:
    """
    Symmetrize a positive definite matrix and rescale it to determinant 1.

    Args:
        matrix: m x m matrix, self-adjoint up to symmetry_tol (relative)
        field: Scalar field; inferred from the dtype when omitted
        symmetry_tol: Largest tolerated asymmetry relative to the largest entry

    Returns:
        CovarianceParameter (M + M*)/2 / det^{1/m}
    """
    matrix = np.asarray(matrix)
    field = field or ScalarField.infer(matrix)
    matrix = as_field(matrix, field)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatch(f"Parameter must be square, got shape {matrix.shape}")

    scale = max(float(np.max(np.abs(matrix))), np.finfo(float).tiny)
    if np.max(np.abs(matrix - adjoint(matrix))) > symmetry_tol * scale:
        raise NotSelfAdjoint("Matrix is not self-adjoint within the symmetrization tolerance")
    symmetric = hermitian_part(matrix)

    eigenvalues = np.linalg.eigvalsh(symmetric)
    if eigenvalues[0] <= EIGEN_FLOOR * max(eigenvalues[-1], 0.0) or eigenvalues[-1] <= 0:
        raise NotPositiveDefinite(f"Smallest eigenvalue {eigenvalues[0]:.3e} is not positive")

    m = matrix.shape[0]
    log_det = float(np.sum(np.log(eigenvalues)))
    normalized = hermitian_part(symmetric * np.exp(-log_det / m))
    return CovarianceParameter(field, normalized)


def same_point(first: CovarianceParameter, second: CovarianceParameter) -> bool:
    """Identity of base points, by object or by entries."""
    return first is second or (
        first.field is second.field and np.array_equal(first.matrix, second.matrix)
    )


@dataclass(frozen=True, eq=False)
class TangentVector:
    """
    A tangent vector v at a base point sigma: self-sigma-adjoint and trace zero.

    The whitened form w = sigma^{-1/2} v sigma^{1/2} is self-adjoint and carries
    the same metric, tr(v1 v2) = tr(w1 w2).
    """
    base: CovarianceParameter
    matrix: np.ndarray

    def __post_init__(self):
        matrix = as_field(self.matrix, self.base.field)
        if matrix.shape != self.base.matrix.shape:
            raise DimensionMismatch(
                f"Tangent vector shape {matrix.shape} does not match base point"
            )
        matrix.setflags(write=False)
        object.__setattr__(self, 'matrix', matrix)

        size = max(float(np.linalg.norm(matrix)), np.finfo(float).tiny)
        sigma = self.base.matrix
        sigma_adjoint = sigma @ adjoint(matrix) @ self.base.inverse
        tol = TANGENT_TOL * size * max(1.0, self.base.condition_number)
        if np.max(np.abs(matrix - sigma_adjoint)) > tol:
            raise NotSelfAdjoint("Tangent vector is not self-sigma-adjoint")
        if abs(np.trace(matrix)) > tol:
            raise ValueError("Tangent vector does not have trace zero")

    @classmethod
    def from_whitened(cls, base: CovarianceParameter, whitened: np.ndarray) -> "TangentVector":
        """Build v = sigma^{1/2} w sigma^{-1/2} from a self-adjoint traceless w."""
        whitened = hermitian_part(as_field(whitened, base.field))
        if whitened.shape != base.matrix.shape:
            raise DimensionMismatch(
                f"Tangent vector shape {whitened.shape} does not match base point"
            )
        whitened = whitened - (np.trace(whitened).real / base.m) * np.eye(base.m)
        matrix = base.sqrt @ whitened @ base.inv_sqrt
        matrix.setflags(write=False)
        # Self-sigma-adjoint and traceless by construction
        vector = cls.__new__(cls)
        object.__setattr__(vector, 'base', base)
        object.__setattr__(vector, 'matrix', matrix)
        vector.__dict__['whitened'] = whitened
        return vector

    @classmethod
    def zero(cls, base: CovarianceParameter) -> "TangentVector":
        return cls.from_whitened(base, np.zeros_like(base.matrix))

    @cached_property
    def whitened(self) -> np.ndarray:
        return hermitian_part(self.base.inv_sqrt @ self.matrix @ self.base.sqrt)

    def norm(self) -> float:
        return float(np.sqrt(max(metric_inner(self, self), 0.0)))

    def _check_base(self, other: "TangentVector"):
        if not same_point(self.base, other.base):
            raise BasePointMismatch("Tangent vectors are attached to different base points")

    def __add__(self, other: "TangentVector") -> "TangentVector":
        self._check_base(other)
        return TangentVector.from_whitened(self.base, self.whitened + other.whitened)

    def __sub__(self, other: "TangentVector") -> "TangentVector":
        return self + (-other)

    def __neg__(self) -> "TangentVector":
        return TangentVector.from_whitened(self.base, -self.whitened)

    def __mul__(self, scalar: float) -> "TangentVector":
        return TangentVector.from_whitened(self.base, float(scalar) * self.whitened)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"TangentVector(m={self.base.m}, norm={self.norm():.3e})"


def tangent_project(sigma: CovarianceParameter, matrix: np.ndarray) -> TangentVector:
    """
    Project an arbitrary matrix onto the tangent space at sigma.

    Returns v = (A + sigma A* sigma^{-1})/2 - (tr/m) I, which fixes tangent
    vectors and removes the identity direction.
    """
    matrix = as_field(matrix, sigma.field)
    if matrix.shape != sigma.matrix.shape:
        raise DimensionMismatch(f"Matrix shape {matrix.shape} does not match parameter")
    # Whitened: (A + sigma A* sigma^{-1})/2 maps to the Hermitian part of sigma^{-1/2} A sigma^{1/2}
    whitened = hermitian_part(sigma.inv_sqrt @ matrix @ sigma.sqrt)
    return TangentVector.from_whitened(sigma, whitened)


def metric_inner(first: TangentVector, second: TangentVector) -> float:
    """Riemannian metric Re tr(v1 v2) on T_sigma."""
    first._check_base(second)
    return float(np.real(np.sum(first.whitened * np.conj(second.whitened))))


def geodesic(sigma: CovarianceParameter, vector: TangentVector, t: float) -> CovarianceParameter:
    """
    Point at time t of the geodesic issuing from sigma with velocity v.

    Evaluated as sigma^{1/2} e^{2tw} sigma^{1/2}, the symmetric form of e^{2tv} sigma.
    """
    if not same_point(vector.base, sigma):
        raise BasePointMismatch("Velocity is not attached to the starting point")
    eigenvalues, eigenvectors = np.linalg.eigh(vector.whitened)
    # tr w = 0 keeps the determinant at 1
    eigenvalues = eigenvalues - np.mean(eigenvalues)
    exponential = eigh_function(eigenvalues, eigenvectors, np.exp(2.0 * t * eigenvalues))
    point = hermitian_part(sigma.sqrt @ exponential @ sigma.sqrt)
    return _unimodular(point, sigma.field)


def _unimodular(matrix: np.ndarray, field: ScalarField) -> CovarianceParameter:
    eigenvalues = np.linalg.eigvalsh(matrix)
    if eigenvalues[0] <= 0:
        raise NotPositiveDefinite("Geodesic left the positive definite cone numerically")
    scale = np.exp(-np.mean(np.log(eigenvalues)))
    return CovarianceParameter(field, hermitian_part(matrix * scale))


def distance(first: CovarianceParameter, second: CovarianceParameter) -> float:
    """
    Geodesic distance ||log(s1^{-1/2} s2 s1^{-1/2})||_F.

    The eigenvalues of s1^{-1/2} s2 s1^{-1/2} are the generalized eigenvalues
    of the pencil (s2, s1).
    """
    if first.m != second.m or first.field is not second.field:
        raise DimensionMismatch("Parameters differ in dimension or field")
    eigenvalues = scipy.linalg.eigh(second.matrix, first.matrix, eigvals_only=True)
    return float(np.sqrt(np.sum(np.log(eigenvalues) ** 2)))


def tangent_basis(sigma: CovarianceParameter) -> List[TangentVector]:
    """
    Metric-orthonormal basis of T_sigma.

    Length m(m+1)/2 - 1 over R and m^2 - 1 over C.
    """
    m = sigma.m
    dtype = sigma.field.dtype
    whitened = []
    for i in range(m):
        for j in range(i + 1, m):
            symmetric = np.zeros((m, m), dtype=dtype)
            symmetric[i, j] = symmetric[j, i] = 1 / np.sqrt(2)
            whitened.append(symmetric)
            if sigma.field is ScalarField.COMPLEX:
                skew = np.zeros((m, m), dtype=dtype)
                skew[i, j] = 1j / np.sqrt(2)
                skew[j, i] = -1j / np.sqrt(2)
                whitened.append(skew)
    # Helmert contrasts span the traceless diagonal
    for k in range(1, m):
        diagonal = np.zeros(m)
        diagonal[:k] = 1.0
        diagonal[k] = -float(k)
        whitened.append(np.diag(diagonal / np.sqrt(k * (k + 1))).astype(dtype))
    return [TangentVector.from_whitened(sigma, w) for w in whitened]


def random_parameter(field: ScalarField, m: int, rng: np.random.Generator,
                     scale: float = 1.0) -> CovarianceParameter:
    """e^{w} for a random traceless self-adjoint w with entries of size ~scale."""
    raw = rng.standard_normal((m, m))
    if field is ScalarField.COMPLEX:
        raw = (raw + 1j * rng.standard_normal((m, m))) / np.sqrt(2)
    identity = CovarianceParameter.identity(m, field)
    velocity = TangentVector.from_whitened(identity, scale * hermitian_part(raw) / np.sqrt(m))
    return geodesic(identity, velocity, 0.5)


__all__ = [
    'ScalarField',
    'CovarianceParameter',
    'TangentVector',
    'adjoint',
    'hermitian_part',
    'normalize_parameter',
    'same_point',
    'tangent_project',
    'metric_inner',
    'geodesic',
    'distance',
    'tangent_basis',
    'random_parameter',
]
