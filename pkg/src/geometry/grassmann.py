"""
Points of the Grassmann manifold Gr(m, r).

This module handles:
- Subspaces stored as orthonormal frames (QR with column pivoting)
- Uniform sampling, intersection dimensions, sums and intersections
- sigma-orthogonal projectors and the action of invertible matrices
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from ..utils import DimensionMismatch, RankDeficient, SingularTransform
from .manifold import CovarianceParameter, ScalarField, adjoint, as_field

FRAME_RANK_TOL = 1e-10
INTERSECTION_TOL = 1e-9
ORTHONORMAL_TOL = 1e-12
MAX_CONDITION = 1e12


def numerical_rank(matrix: np.ndarray, tol: float) -> int:
    """Number of singular values above tol times the largest one."""
    if matrix.size == 0:
        return 0
    singular_values = np.linalg.svd(matrix, compute_uv=False)
    if singular_values[0] == 0:
        return 0
    return int(np.sum(singular_values > tol * singular_values[0]))


@dataclass(frozen=True, eq=False)
class Subspace:
    """
    A linear subspace U = <X> of F^m, stored with an orthonormal frame X.

    Two Subspaces compare equal when their frames have the same range.
    """
    field: ScalarField
    frame: np.ndarray

    def __post_init__(self):
        frame = as_field(self.frame, self.field)
        if frame.ndim != 2 or not 0 < frame.shape[1] < frame.shape[0]:
            raise DimensionMismatch(f"Frame shape {frame.shape} needs 0 < r < m")
        frame.setflags(write=False)
        object.__setattr__(self, 'frame', frame)

    @property
    def m(self) -> int:
        return self.frame.shape[0]

    @property
    def r(self) -> int:
        return self.frame.shape[1]

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    @classmethod
    def from_orthonormal(cls, frame: np.ndarray,
                         field: Optional[ScalarField] = None) -> "Subspace":
        """Wrap a frame that already has orthonormal columns, without re-orthonormalizing."""
        frame = np.asarray(frame)
        field = field or ScalarField.infer(frame)
        frame = as_field(frame, field)
        gram = adjoint(frame) @ frame
        if np.max(np.abs(gram - np.eye(frame.shape[1]))) > 1e3 * ORTHONORMAL_TOL:
            return subspace_from_matrix(frame, field=field)
        return cls(field, frame)

    def same_as(self, other: "Subspace", tol: float = INTERSECTION_TOL) -> bool:
        return self.dim == other.dim and intersection_dim(self, other, tol) == self.dim

    def __eq__(self, other) -> bool:
        if not isinstance(other, Subspace):
            return NotImplemented
        return self.m == other.m and self.field is other.field and self.same_as(other)

    __hash__ = None

    def __repr__(self) -> str:
        return f"Subspace(field={self.field.value}, m={self.m}, r={self.r})"


def subspace_from_matrix(matrix: np.ndarray, tol: float = FRAME_RANK_TOL,
                         field: Optional[ScalarField] = None) -> Subspace:
    """
    Orthonormalize the columns of a full-rank matrix.

    Args:
        matrix: m x r matrix whose range is the subspace
        tol: Relative singular value threshold for the rank test
        field: Scalar field; inferred from the dtype when omitted

    Returns:
        Subspace with an orthonormal frame spanning the same range

    Raises:
        RankDeficient: if the numerical rank is below r
    """
    matrix = np.asarray(matrix)
    if matrix.ndim == 1:
        matrix = matrix[:, None]
    field = field or ScalarField.infer(matrix)
    matrix = as_field(matrix, field)

    rank = numerical_rank(matrix, tol)
    if rank < matrix.shape[1]:
        raise RankDeficient(f"Frame has numerical rank {rank} < {matrix.shape[1]}")

    q, _, _ = scipy.linalg.qr(matrix, mode='economic', pivoting=True)
    return Subspace(field, q)


def uniform_sample(field: ScalarField, m: int, r: int, rng: np.random.Generator,
                   max_attempts: int = 10) -> Subspace:
    """
    Draw from the unitarily invariant distribution G_I on Gr(m, r).

    Args:
        field: Scalar field
        m: Ambient dimension
        r: Subspace dimension, 0 < r < m
        rng: Random generator

    Returns:
        Span of r i.i.d. standard normal vectors
    """
    if not 0 < r < m:
        raise DimensionMismatch(f"Need 0 < r < m, got m={m}, r={r}")
    for _ in range(max_attempts):
        try:
            return subspace_from_matrix(standard_normal(field, (m, r), rng), field=field)
        except RankDeficient:
            continue
    raise RankDeficient("Repeated rank-deficient draws")


def standard_normal(field: ScalarField, shape, rng: np.random.Generator) -> np.ndarray:
    """Standard normal entries; complex ones have E|z|^2 = 1."""
    if field is ScalarField.REAL:
        return rng.standard_normal(shape)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _check_compatible(first: Subspace, second: Subspace):
    if first.m != second.m or first.field is not second.field:
        raise DimensionMismatch("Subspaces live in different ambient spaces")


def intersection_dim(first: Subspace, second: Subspace, tol: float = INTERSECTION_TOL) -> int:
    """dim U + dim V - rank[X | Y], the rank taken at relative tolerance tol."""
    _check_compatible(first, second)
    joined = np.hstack([first.frame, second.frame])
    return first.dim + second.dim - numerical_rank(joined, tol)


def subspace_sum(first: Subspace, second: Subspace,
                 tol: float = INTERSECTION_TOL) -> Optional[Subspace]:
    """U + V, or None when it is the whole space."""
    _check_compatible(first, second)
    joined = np.hstack([first.frame, second.frame])
    u, s, _ = np.linalg.svd(joined, full_matrices=False)
    rank = int(np.sum(s > tol * s[0]))
    if rank >= first.m:
        return None
    return Subspace(first.field, u[:, :rank])


def subspace_intersection(first: Subspace, second: Subspace,
                          tol: float = INTERSECTION_TOL) -> Optional[Subspace]:
    """U ∩ V, or None when it is zero."""
    _check_compatible(first, second)
    kernel = scipy.linalg.null_space(np.hstack([first.frame, -second.frame]), rcond=tol)
    if kernel.shape[1] == 0:
        return None
    return subspace_from_matrix(first.frame @ kernel[:first.dim], tol=tol, field=first.field)


def projector(sigma: CovarianceParameter, subspace: Subspace) -> np.ndarray:
    """
    sigma-orthogonal projector X (X* sigma^{-1} X)^{-1} X* sigma^{-1} onto U.

    Args:
        sigma: Parameter defining the inner product x* sigma^{-1} y
        subspace: Range of the projector

    Returns:
        m x m idempotent matrix with trace r
    """
    if sigma.m != subspace.m or sigma.field is not subspace.field:
        raise DimensionMismatch("Parameter and subspace dimensions differ")
    frame = subspace.frame
    solved = sigma.inverse @ frame
    gram = adjoint(frame) @ solved
    return frame @ np.linalg.solve(gram, adjoint(solved))


def whitened_frames(sigma: CovarianceParameter, frames: np.ndarray) -> np.ndarray:
    """
    Orthonormal frames of sigma^{-1/2} U for a stack of frames (n, m, r).

    Q Q* is the whitened projector sigma^{-1/2} pi_U(sigma) sigma^{1/2}.
    """
    q, _ = np.linalg.qr(sigma.inv_sqrt @ frames)
    return q


def apply_transform(transform: np.ndarray, subspace: Subspace) -> Subspace:
    """
    Image AU = {Ax : x in U} of a subspace under an invertible matrix.

    Raises:
        SingularTransform: if cond(A) exceeds 1e12
    """
    transform = as_field(transform, subspace.field)
    if transform.shape != (subspace.m, subspace.m):
        raise DimensionMismatch(f"Transform shape {transform.shape} does not match m={subspace.m}")
    if not np.isfinite(np.linalg.cond(transform)) or np.linalg.cond(transform) > MAX_CONDITION:
        raise SingularTransform("Transform is numerically singular")
    return subspace_from_matrix(transform @ subspace.frame, field=subspace.field)


__all__ = [
    'Subspace',
    'numerical_rank',
    'subspace_from_matrix',
    'uniform_sample',
    'standard_normal',
    'intersection_dim',
    'subspace_sum',
    'subspace_intersection',
    'projector',
    'whitened_frames',
    'apply_transform',
]
