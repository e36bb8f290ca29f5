"""
Lines of projective 3-space meeting given lines, via Plücker coordinates.

A plane U = <a, b> of F^4 (a line of P^3) has Plücker vector
p = (p01, p02, p03, p12, p13, p23) with p_ij = a_i b_j - a_j b_i. Two lines meet
iff the bilinear form

    <p, q> = p01 q23 - p02 q13 + p03 q12 + p12 q03 - p13 q02 + p23 q01

vanishes, and a vector p is the Plücker vector of a line iff <p, p> = 0 (the
Klein quadric). Lines meeting U_1..U_n are the points of the Klein quadric in
the null space of the linear conditions <p, q_k> = 0.
"""

from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from ..geometry.grassmann import Subspace, intersection_dim, subspace_from_matrix
from ..geometry.manifold import ScalarField
from ..utils import DegenerateConfiguration, DimensionMismatch, logger
from .criteria import (
    INTERSECTION_TOL,
    UniquenessVerdict,
    VerdictMethod,
    VerdictStatus,
    condition_value,
)

PLUCKER_PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
NULL_SPACE_RCOND = 1e-9
DISCRIMINANT_TOL = 1e-10
CERTIFY_TOL = 1e-6

# <p, q> = p^T KLEIN q
KLEIN = np.zeros((6, 6))
for _row, _col, _sign in ((0, 5, 1), (1, 4, -1), (2, 3, 1), (3, 2, 1), (4, 1, -1), (5, 0, 1)):
    KLEIN[_row, _col] = _sign


class TransversalCount(Enum):
    TWO = "two"
    ONE = "one"
    ZERO = "zero"
    INFINITE = "infinite"


@dataclass
class TransversalResult:
    """Number of common transversals and some of them as Subspaces of F^4."""
    count: TransversalCount
    lines: List[Subspace] = field(default_factory=list)
    null_dimension: int = 0


def plucker(line: Subspace) -> np.ndarray:
    """Plücker vector of a plane of F^4."""
    if line.m != 4 or line.r != 2:
        raise DimensionMismatch(f"Plücker coordinates need Gr(4, 2), got Gr({line.m}, {line.r})")
    a, b = line.frame[:, 0], line.frame[:, 1]
    return np.array([a[i] * b[j] - a[j] * b[i] for i, j in PLUCKER_PAIRS])


def klein_form(p: np.ndarray, q: np.ndarray) -> complex:
    """Bilinear (not sesquilinear) form; zero iff the lines meet."""
    return p @ KLEIN @ q


def line_from_plucker(p: np.ndarray, field_: ScalarField) -> Optional[Subspace]:
    """Range of the skew matrix of p, or None if p is not decomposable."""
    skew = np.zeros((4, 4), dtype=p.dtype)
    for value, (i, j) in zip(p, PLUCKER_PAIRS):
        skew[i, j] = value
        skew[j, i] = -value
    u, s, _ = np.linalg.svd(skew)
    if s[0] == 0 or s[2] > 1e-6 * s[0]:
        return None
    return subspace_from_matrix(u[:, :2], field=field_)


def _binary_roots(a, b, c, root, scale: float) -> List[Tuple[complex, complex]]:
    """Projective roots (alpha, beta) of a alpha^2 + 2 b alpha beta + c beta^2; root = sqrt(b^2 - ac)."""
    tiny = DISCRIMINANT_TOL * scale
    if max(abs(a), abs(c)) <= tiny:
        return [(1.0, 0.0), (0.0, 1.0)]
    if abs(a) >= abs(c):
        return [((-b + root) / a, 1.0), ((-b - root) / a, 1.0)]
    return [(1.0, (-b + root) / c), (1.0, (-b - root) / c)]


def _pencil(null: np.ndarray, gram: np.ndarray, complex_field: bool
            ) -> Tuple[TransversalCount, List[np.ndarray]]:
    a, b, c = gram[0, 0], gram[0, 1], gram[1, 1]
    scale = max(abs(a), abs(b), abs(c))
    if scale <= DISCRIMINANT_TOL:
        return TransversalCount.INFINITE, [null[:, 0], null[:, 1]]

    discriminant = b * b - a * c
    if abs(discriminant) < DISCRIMINANT_TOL * scale ** 2:
        count = TransversalCount.ONE
    elif complex_field:
        count = TransversalCount.TWO
    else:
        count = TransversalCount.TWO if discriminant.real > 0 else TransversalCount.ZERO
    if count is TransversalCount.ZERO:
        return count, []

    if complex_field:
        root = np.sqrt(complex(discriminant))
    else:
        a, b, c = a.real, b.real, c.real
        root = np.sqrt(max(b * b - a * c, 0.0))
    roots = _binary_roots(a, b, c, root, scale)
    if count is TransversalCount.ONE:
        roots = roots[:1]
    return count, [alpha * null[:, 0] + beta * null[:, 1] for alpha, beta in roots]


def _isotropic_real(null: np.ndarray, gram: np.ndarray
                    ) -> Tuple[TransversalCount, List[np.ndarray]]:
    gram = gram.real
    eigenvalues, eigenvectors = np.linalg.eigh(gram)
    scale = max(abs(eigenvalues[0]), abs(eigenvalues[-1]))
    kernel = np.abs(eigenvalues) <= DISCRIMINANT_TOL * max(scale, 1.0)
    if eigenvalues[0] < 0 < eigenvalues[-1] and not (kernel[0] or kernel[-1]):
        low, high = eigenvectors[:, 0], eigenvectors[:, -1]
        vectors = [
            low / np.sqrt(-eigenvalues[0]) + high / np.sqrt(eigenvalues[-1]),
            low / np.sqrt(-eigenvalues[0]) - high / np.sqrt(eigenvalues[-1]),
        ]
        return TransversalCount.INFINITE, [null @ v for v in vectors]
    if np.any(kernel):
        directions = eigenvectors[:, kernel]
        count = TransversalCount.ONE if directions.shape[1] == 1 else TransversalCount.INFINITE
        return count, [null @ directions[:, k] for k in range(directions.shape[1])]
    return TransversalCount.ZERO, []


def _isotropic_complex(null: np.ndarray, gram: np.ndarray
                       ) -> Tuple[TransversalCount, List[np.ndarray]]:
    # Any two-dimensional slice of a complex quadric form has an isotropic vector
    _, vectors = _pencil(null[:, :2], gram[:2, :2], complex_field=True)
    return TransversalCount.INFINITE, vectors


def lines_meeting_all(lines: Sequence[Subspace],
                      rcond: float = NULL_SPACE_RCOND) -> TransversalResult:
    """
    Lines of P^3 meeting every given line.

    Args:
        lines: Planes of F^4 sharing one field
        rcond: Relative rank tolerance for the linear conditions

    Returns:
        TransversalResult with the count and up to two transversal lines
    """
    if not lines:
        raise ValueError("Need at least one line")
    field_ = lines[0].field
    if any(line.field is not field_ for line in lines):
        raise DimensionMismatch("Lines differ in field")
    complex_field = field_ is ScalarField.COMPLEX

    conditions = np.array([KLEIN @ plucker(line) for line in lines])
    null = scipy.linalg.null_space(conditions, rcond=rcond)
    dimension = null.shape[1]
    gram = null.T @ KLEIN @ null

    if dimension == 0:
        count, vectors = TransversalCount.ZERO, []
    elif dimension == 1:
        value = abs(gram[0, 0])
        if value <= DISCRIMINANT_TOL:
            count, vectors = TransversalCount.ONE, [null[:, 0]]
        else:
            count, vectors = TransversalCount.ZERO, []
    elif dimension == 2:
        count, vectors = _pencil(null, gram, complex_field)
    elif complex_field:
        count, vectors = _isotropic_complex(null, gram)
    else:
        count, vectors = _isotropic_real(null, gram)

    found = []
    for vector in vectors:
        line = line_from_plucker(vector if complex_field else np.real(vector), field_)
        if line is not None:
            found.append(line)
    return TransversalResult(count=count, lines=found, null_dimension=dimension)


def _check_skew(lines: Sequence[Subspace], tol: float) -> bool:
    return all(intersection_dim(u, v, tol) == 0 for u, v in combinations(lines, 2))


def common_transversals(u1: Subspace, u2: Subspace, u3: Subspace, u4: Subspace,
                        tol: float = INTERSECTION_TOL) -> TransversalResult:
    """
    Lines meeting four pairwise skew lines: two, one, zero or infinitely many.

    Zero occurs only over the reals. Four lines whose conditions have rank
    below 4 lie in a common regulus and have infinitely many transversals.

    Raises:
        DegenerateConfiguration: if two of the lines meet
    """
    lines = [u1, u2, u3, u4]
    if not _check_skew(lines, tol):
        raise DegenerateConfiguration("Input lines are not pairwise skew")
    result = lines_meeting_all(lines)
    if result.null_dimension > 2:
        result.count = TransversalCount.INFINITE
    return result


def _max_lines_met(sample, max_subsets: int, tol: float) -> Optional[int]:
    """
    Largest number of sample lines met by a common line, from 4-subsets.

    None when the number of 4-subsets exceeds the budget.
    """
    n = sample.n
    if n < 4:
        return n
    if n * (n - 1) * (n - 2) * (n - 3) // 24 > max_subsets:
        return None
    best = 3
    for subset in combinations(sample.atoms, 4):
        result = lines_meeting_all(list(subset))
        for line in result.lines:
            met = sum(intersection_dim(atom, line, CERTIFY_TOL) >= 1 for atom in sample.atoms)
            best = max(best, met)
        if result.count is TransversalCount.INFINITE:
            best = max(best, 4)
    return best


def check_gr42(sample, tol: float = INTERSECTION_TOL,
               max_subsets: int = 5000) -> UniquenessVerdict:
    """
    Exact verdict for samples of pairwise skew lines in P^3 (Gr(4, 2)).

    For n >= 3 skew lines the only possible witnesses are lines meeting
    every sample line, so the estimate is unique iff no such line exists.

    Args:
        sample: EmpiricalMeasure on Gr(4, 2) with uniform weights
        tol: Rank tolerance for skewness
        max_subsets: Budget for computing k from 4-subsets (informational)

    Returns:
        Unique, NotUnique with a transversal witness, or Undecided when the
        preconditions fail
    """
    if sample.m != 4 or sample.r != 2:
        return UniquenessVerdict(VerdictStatus.UNDECIDED, VerdictMethod.GR42_EXACT,
                                 notes=f"sample lives on Gr({sample.m}, {sample.r}), not Gr(4, 2)")
    if not sample.is_uniform:
        return UniquenessVerdict(VerdictStatus.UNDECIDED, VerdictMethod.GR42_EXACT,
                                 notes="weights are not uniform")
    if not _check_skew(sample.atoms, tol):
        return UniquenessVerdict(VerdictStatus.UNDECIDED, VerdictMethod.GR42_EXACT,
                                 notes="sample lines are not pairwise skew")

    n = sample.n
    if n <= 2:
        witness = sample.atoms[0]
        value = condition_value(sample, witness, tol)
        return UniquenessVerdict(VerdictStatus.NOT_UNIQUE, VerdictMethod.GR42_EXACT,
                                 witness=witness, witness_value=value, best_value=value,
                                 notes=f"n = {n} <= 2: a sample line is a witness")

    k = _max_lines_met(sample, max_subsets, tol)
    k_note = f"k = {k}" if k is not None else "k not computed (subset budget exceeded)"
    result = lines_meeting_all(list(sample.atoms))
    if result.count is TransversalCount.ZERO:
        return UniquenessVerdict(VerdictStatus.UNIQUE, VerdictMethod.GR42_EXACT,
                                 notes=f"no line meets all {n} sample lines; {k_note}")

    for line in result.lines:
        value = condition_value(sample, line, CERTIFY_TOL)
        if value >= 0:
            return UniquenessVerdict(VerdictStatus.NOT_UNIQUE, VerdictMethod.GR42_EXACT,
                                     witness=line, witness_value=value, best_value=value,
                                     notes=f"a line meets all {n} sample lines "
                                           f"({result.count.value} such lines); {k_note}")

    logger.warning(f"Transversal found but could not be certified at tolerance {CERTIFY_TOL}")
    return UniquenessVerdict(VerdictStatus.UNDECIDED, VerdictMethod.GR42_EXACT,
                             notes=f"transversal ({result.count.value}) not certified; {k_note}")


__all__ = [
    'TransversalCount',
    'TransversalResult',
    'plucker',
    'klein_form',
    'line_from_plucker',
    'lines_meeting_all',
    'common_transversals',
    'check_gr42',
]
