"""
Uniqueness criteria for the Grassmannian estimate.

A sample P has a unique estimate iff every nontrivial subspace V satisfies
    sum_i w_i dim(U_i ∩ V) < (r/m) dim V.
A subspace violating this inequality is a witness of non-uniqueness.

This module handles:
- Verdict types shared by all checks
- The condition value of a candidate witness
- The exact check for samples of lines (r = 1)
- A heuristic witness search for arbitrary (m, r)
- Dispatch of a sample to the strongest applicable check
"""

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import combinations
from typing import Any, Dict, Iterator, List, Optional, Union

import numpy as np

from ..geometry.grassmann import (
    Subspace,
    intersection_dim,
    numerical_rank,
    standard_normal,
    subspace_from_matrix,
    subspace_intersection,
    subspace_sum,
)
from ..utils import DimensionMismatch, SampleTooLarge, logger

INTERSECTION_TOL = 1e-9


class VerdictStatus(Enum):
    UNIQUE = "unique"
    NOT_UNIQUE = "not_unique"
    UNDECIDED = "undecided"


class VerdictMethod(Enum):
    R1_EXACT = "r1_exact"
    GR42_EXACT = "gr42_exact"
    WITNESS_SEARCH = "witness_search"
    LP_BOUND_GENERIC = "lp_bound_generic"
    SOLVER_DIAGNOSTIC = "solver_diagnostic"


EXACT_METHODS = (VerdictMethod.R1_EXACT, VerdictMethod.GR42_EXACT)


@dataclass
class UniquenessVerdict:
    """
    Outcome of an existence/uniqueness diagnosis.

    Attributes:
        status: Unique, NotUnique or Undecided
        method: Check that produced the verdict
        witness: Violating subspace V (required for NotUnique)
        witness_value: Condition value at the witness, >= 0 for NotUnique
        best_value: Largest condition value seen by a search
        notes: Free-text evidence
    """
    status: VerdictStatus
    method: VerdictMethod
    witness: Optional[Subspace] = None
    witness_value: Optional[float] = None
    best_value: Optional[float] = None
    notes: str = ""

    def __post_init__(self):
        if self.status is VerdictStatus.NOT_UNIQUE:
            if self.witness is None or self.witness_value is None or self.witness_value < 0:
                raise ValueError("A NotUnique verdict needs a witness with value >= 0")
        if self.status is VerdictStatus.UNIQUE and self.method not in EXACT_METHODS:
            raise ValueError(f"Method {self.method.value} cannot certify uniqueness")

    @property
    def witness_dimension(self) -> Optional[int]:
        return self.witness.dim if self.witness is not None else None

    def to_dict(self) -> Dict[str, Any]:
        """Scalar fields; the witness frame is encoded by the file layer."""
        return {
            'status': self.status.value,
            'method': self.method.value,
            'witness_dimension': self.witness_dimension,
            'witness_value': self.witness_value,
            'best_value': self.best_value,
            'notes': self.notes,
        }


def _condition(sample, subspace: Subspace, tol: float) -> Union[Fraction, float]:
    """Exact Fraction for uniform weights, fsum otherwise."""
    if subspace.m != sample.m or subspace.field is not sample.field:
        raise DimensionMismatch("Candidate subspace does not match the sample")
    dims = [intersection_dim(atom, subspace, tol) for atom in sample.atoms]
    if sample.is_uniform:
        return Fraction(sum(dims), sample.n) - Fraction(sample.r * subspace.dim, sample.m)
    return math.fsum(w * d for w, d in zip(sample.weights, dims)) - sample.r * subspace.dim / sample.m


def condition_value(sample, subspace: Subspace, tol: float = INTERSECTION_TOL) -> float:
    """
    sum_i w_i dim(U_i ∩ V) - (r/m) dim V.

    Args:
        sample: EmpiricalMeasure
        subspace: Candidate witness V with 0 < dim V < m
        tol: Rank tolerance for the intersection dimensions

    Returns:
        The condition value; V is a witness of non-uniqueness iff it is >= 0
    """
    return float(_condition(sample, subspace, tol))


def _distinct_points(sample, tol: float) -> List[tuple]:
    """Group equal lines, summing their weights."""
    points: List[list] = []
    for atom, weight in zip(sample.atoms, sample.weights):
        for entry in points:
            if intersection_dim(entry[0], atom, tol) == 1:
                entry[1] += weight
                break
        else:
            points.append([atom, weight])
    return [tuple(entry) for entry in points]


def check_r1(sample, max_candidates: int = 200000,
             tol: float = INTERSECTION_TOL) -> UniquenessVerdict:
    """
    Exact verdict for a sample of lines.

    Candidate witnesses are the spans of linearly independent subsets of the
    sample points with fewer than m elements; any witness can be shrunk to
    the span of the points it contains without lowering its value.

    Args:
        sample: EmpiricalMeasure on Gr(m, 1)
        max_candidates: Enumeration budget
        tol: Rank tolerance

    Returns:
        NotUnique with the first violating span, else Unique

    Raises:
        SampleTooLarge: if the number of candidate subsets exceeds max_candidates
    """
    if sample.r != 1:
        raise DimensionMismatch(f"check_r1 needs r = 1, got r = {sample.r}")
    m = sample.m
    points = _distinct_points(sample, tol)
    vectors = [atom.frame[:, 0] for atom, _ in points]

    candidates = sum(math.comb(len(points), s) for s in range(1, min(m - 1, len(points)) + 1))
    if candidates > max_candidates:
        raise SampleTooLarge(f"{candidates} candidate spans exceed the budget {max_candidates}")

    best = None
    for s in range(1, min(m - 1, len(points)) + 1):
        for subset in combinations(range(len(points)), s):
            matrix = np.column_stack([vectors[i] for i in subset])
            if numerical_rank(matrix, tol) < s:
                continue
            span = subspace_from_matrix(matrix, field=sample.field)
            value = _condition(sample, span, tol)
            if best is None or value > best:
                best = value
            if value >= 0:
                return UniquenessVerdict(
                    VerdictStatus.NOT_UNIQUE, VerdictMethod.R1_EXACT,
                    witness=span, witness_value=float(value), best_value=float(value),
                    notes=f"{s}-dimensional span of sample points violates the criterion",
                )

    return UniquenessVerdict(
        VerdictStatus.UNIQUE, VerdictMethod.R1_EXACT,
        best_value=None if best is None else float(best),
        notes=f"{candidates} candidate spans checked",
    )


def _deterministic_candidates(sample, tol: float) -> Iterator[Subspace]:
    atoms = [atom for atom, _ in _distinct_points(sample, tol)] if sample.r == 1 else list(sample.atoms)
    yield from atoms
    for first, second in combinations(atoms, 2):
        meet = subspace_intersection(first, second, tol)
        if meet is not None:
            yield meet
        join = subspace_sum(first, second, tol)
        if join is not None:
            yield join
    if sample.r > 1:
        for atom in atoms:
            for column in range(atom.r):
                yield Subspace(atom.field, atom.frame[:, column:column + 1])
    # Greedy chains: keep adding atoms while the span stays proper
    for start in atoms:
        current = start
        for other in atoms:
            if other is start:
                continue
            join = subspace_sum(current, other, tol)
            if join is None:
                continue
            if join.dim > current.dim:
                current = join
                yield current


def _random_candidate(sample, rng: np.random.Generator, tol: float) -> Optional[Subspace]:
    size = int(rng.integers(1, sample.n + 1))
    chosen = rng.choice(sample.n, size=size, replace=False)
    current = sample.atoms[int(chosen[0])]
    for index in chosen[1:]:
        atom = sample.atoms[int(index)]
        if rng.random() < 0.5:
            meet = subspace_intersection(current, atom, tol)
            if meet is not None:
                current = meet
        else:
            join = subspace_sum(current, atom, tol)
            if join is not None:
                current = join
    if current.dim > 1 and rng.random() < 0.3:
        # Random subspace of the current candidate
        keep = int(rng.integers(1, current.dim))
        mix = standard_normal(sample.field, (current.dim, keep), rng)
        return subspace_from_matrix(current.frame @ mix, field=sample.field)
    return current


def witness_search(sample, iterations: int = 200,
                   rng: Optional[np.random.Generator] = None,
                   tol: float = INTERSECTION_TOL) -> UniquenessVerdict:
    """
    Heuristic search for a subspace violating the uniqueness criterion.

    Tries atoms, pairwise sums and intersections, atom columns, greedy chains
    of sums, then `iterations` random sum/intersection combinations.

    Returns:
        NotUnique with a witness (conclusive) or Undecided with the best value
    """
    rng = rng or np.random.default_rng(0)
    best_value, tried = None, 0

    def candidates():
        yield from _deterministic_candidates(sample, tol)
        for _ in range(iterations):
            candidate = _random_candidate(sample, rng, tol)
            if candidate is not None:
                yield candidate

    for candidate in candidates():
        tried += 1
        value = _condition(sample, candidate, tol)
        if best_value is None or value > best_value:
            best_value = value
        if value >= 0:
            logger.debug(f"witness_search: witness of dimension {candidate.dim} after {tried} candidates")
            return UniquenessVerdict(
                VerdictStatus.NOT_UNIQUE, VerdictMethod.WITNESS_SEARCH,
                witness=candidate, witness_value=float(value), best_value=float(value),
                notes=f"witness found after {tried} candidates",
            )

    return UniquenessVerdict(
        VerdictStatus.UNDECIDED, VerdictMethod.WITNESS_SEARCH,
        best_value=None if best_value is None else float(best_value),
        notes=f"no witness among {tried} candidates",
    )


def verdict_from_fit(report) -> UniquenessVerdict:
    """Undecided verdict summarizing what a solver run suggests."""
    if report.unique:
        notes = "solver converged to an isolated minimizer"
    elif report.converged:
        notes = (f"solver converged but the Hessian has a {report.degenerate_dimension}-dimensional "
                 "near-kernel; the minimizer is not isolated")
    else:
        notes = f"solver stopped with {report.divergence_flag.value}; the estimate may not exist"
    return UniquenessVerdict(VerdictStatus.UNDECIDED, VerdictMethod.SOLVER_DIAGNOSTIC, notes=notes)


def check_uniqueness(sample, iterations: int = 200,
                     rng: Optional[np.random.Generator] = None,
                     max_candidates: int = 200000,
                     max_subsets: int = 5000,
                     tol: float = INTERSECTION_TOL) -> UniquenessVerdict:
    """
    Route a sample to the strongest applicable check.

    r = 1 goes to check_r1, Gr(4, 2) to check_gr42, anything else (or an
    inconclusive exact check) to witness_search; generic samples larger than
    the sample-size bound get a note from the LP bound.
    """
    from .lp_bound import sample_size_bound
    from .transversals import check_gr42

    rng = rng or np.random.default_rng(0)
    notes = []
    if sample.r == 1:
        try:
            return check_r1(sample, max_candidates=max_candidates, tol=tol)
        except SampleTooLarge as e:
            logger.warning(f"check_r1 skipped: {e}")
            notes.append(str(e))
    elif sample.m == 4 and sample.r == 2:
        verdict = check_gr42(sample, tol=tol, max_subsets=max_subsets)
        if verdict.status is not VerdictStatus.UNDECIDED:
            return verdict
        notes.append(verdict.notes)

    verdict = witness_search(sample, iterations=iterations, rng=rng, tol=tol)
    if verdict.status is not VerdictStatus.UNDECIDED:
        return verdict
    notes.append(verdict.notes)

    bound = sample_size_bound(sample.m, sample.r)
    if sample.is_uniform and sample.n > bound:
        notes.append(f"n = {sample.n} > {bound}: a generic sample of this size has a unique estimate")
        return UniquenessVerdict(
            VerdictStatus.UNDECIDED, VerdictMethod.LP_BOUND_GENERIC,
            best_value=verdict.best_value, notes="; ".join(notes),
        )
    return UniquenessVerdict(
        VerdictStatus.UNDECIDED, VerdictMethod.WITNESS_SEARCH,
        best_value=verdict.best_value, notes="; ".join(notes),
    )


__all__ = [
    'VerdictStatus',
    'VerdictMethod',
    'UniquenessVerdict',
    'condition_value',
    'check_r1',
    'witness_search',
    'verdict_from_fit',
    'check_uniqueness',
]
