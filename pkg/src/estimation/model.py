"""
The Grassmannian statistical model G_sigma.

G_sigma is the law of the span of r i.i.d. central normal vectors with
covariance sigma. Its density with respect to the uniform law G_I is
[det(X*X) / det(X* sigma^{-1} X)]^{i_F m / 2}.
"""

import numpy as np

from ..geometry.grassmann import Subspace, standard_normal, subspace_from_matrix
from ..geometry.manifold import CovarianceParameter, adjoint, as_field, hermitian_part
from ..utils import DensityOverflow, DimensionMismatch, NotPositiveDefinite, RankDeficient

# log of the largest finite double
MAX_LOG_FLOAT = float(np.log(np.finfo(float).max))


def sample(sigma: CovarianceParameter, r: int, rng: np.random.Generator,
           max_attempts: int = 10) -> Subspace:
    """
    Draw one subspace from G_sigma.

    Args:
        sigma: Covariance parameter
        r: Subspace dimension, 0 < r < m
        rng: Random generator (one independent stream per task when parallel)

    Returns:
        Span of sigma^{1/2} Z for an m x r standard normal Z
    """
    if not 0 < r < sigma.m:
        raise DimensionMismatch(f"Need 0 < r < m, got m={sigma.m}, r={r}")
    for _ in range(max_attempts):
        draw = sigma.sqrt @ standard_normal(sigma.field, (sigma.m, r), rng)
        try:
            return subspace_from_matrix(draw, field=sigma.field)
        except RankDeficient:
            continue
    raise RankDeficient("Repeated rank-deficient draws")


def _half_log_det(gram: np.ndarray) -> float:
    eigenvalues = np.linalg.eigvalsh(hermitian_part(gram))
    return 0.5 * float(np.sum(np.log(eigenvalues)))


def unnormalized_log_density(matrix: np.ndarray, subspace: Subspace) -> float:
    """
    l_U evaluated at any positive definite matrix, not only at det 1.

    Scaling the matrix by c shifts the value by -(r/2) log c for every U.
    """
    matrix = hermitian_part(as_field(matrix, subspace.field))
    if matrix.shape != (subspace.m, subspace.m):
        raise DimensionMismatch("Matrix and subspace dimensions differ")
    if np.linalg.eigvalsh(matrix)[0] <= 0:
        raise NotPositiveDefinite("Matrix is not positive definite")
    frame = subspace.frame
    solved = np.linalg.solve(matrix, frame)
    return _half_log_det(adjoint(frame) @ solved) - _half_log_det(adjoint(frame) @ frame)


def log_density(sigma: CovarianceParameter, subspace: Subspace) -> float:
    """
    Negative log-density l_U(sigma) = 1/2 log det(X* sigma^{-1} X) / det(X* X).

    Args:
        sigma: Covariance parameter
        subspace: Observed subspace U

    Returns:
        l_U(sigma); independent of the frame chosen for U
    """
    if sigma.m != subspace.m or sigma.field is not subspace.field:
        raise DimensionMismatch("Parameter and subspace dimensions differ")
    frame = subspace.frame
    whitened = sigma.inv_sqrt @ frame
    return _half_log_det(adjoint(whitened) @ whitened) - _half_log_det(adjoint(frame) @ frame)


def density_ratio(sigma: CovarianceParameter, subspace: Subspace, log: bool = False) -> float:
    """
    Radon-Nikodym derivative dG_sigma / dG_I at U.

    Args:
        sigma: Covariance parameter
        subspace: Observed subspace U
        log: Return the logarithm -i_F m l_U(sigma) instead

    Raises:
        DensityOverflow: if the ratio is not representable and log is False
    """
    exponent = -sigma.field.i_f * sigma.m * log_density(sigma, subspace)
    if log:
        return exponent
    if exponent > MAX_LOG_FLOAT:
        raise DensityOverflow(f"Density ratio exp({exponent:.6g}) overflows; use log=True")
    return float(np.exp(exponent))


__all__ = [
    'sample',
    'log_density',
    'unnormalized_log_density',
    'density_ratio',
]
