"""
Dimension counts and the linear-programming sample-size bound.

A witness V of dimension s for a generic sample meets n_i sample subspaces in
dimension i (i0 <= i <= i1). Such a V can only exist when

    sum_i n_i i (m + i - r - s) <= s (m - s)      (dimension count)
    m sum_i n_i i >= n r s                         (witness inequality)
    n_i >= 0

B(m, r, s) collects the sample sizes n = sum_i n_i admitting an integer
solution; every element is at most m^2 / (r (m - r)).
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Dict, List, Sequence, Set, Tuple

import numpy as np
from scipy.optimize import linprog

from ..utils import OutOfRange, TooLarge, logger

ENUMERATION_MAX_M = 8


def _check_dimensions(m: int, r: int, s: int = None):
    if not 0 < r < m:
        raise OutOfRange(f"Need 0 < r < m, got m={m}, r={r}")
    if s is not None and not 0 < s < m:
        raise OutOfRange(f"Need 0 < s < m, got m={m}, s={s}")


def intersection_range(m: int, r: int, s: int) -> Tuple[int, int]:
    """(i0, i1) = (max{0, r + s - m}, min{r, s})."""
    return max(0, r + s - m), min(r, s)


def schubert_codim(m: int, r: int, s: int, d: int) -> int:
    """
    Codimension d (m + d - r - s) of the s-subspaces meeting a fixed U in dimension d.

    Raises:
        OutOfRange: if d lies outside [max{0, r + s - m}, min{r, s}]
    """
    _check_dimensions(m, r, s)
    i0, i1 = intersection_range(m, r, s)
    if not i0 <= d <= i1:
        raise OutOfRange(f"d={d} outside [{i0}, {i1}] for m={m}, r={r}, s={s}")
    return d * (m + d - r - s)


def feasible_profile(m: int, r: int, s: int, profile: Sequence[int]) -> bool:
    """Necessary condition for a generic sample to admit V with the given intersection dimensions."""
    i0, i1 = intersection_range(m, r, s)
    if any(not i0 <= d <= i1 for d in profile):
        return False
    return sum(schubert_codim(m, r, s, d) for d in profile) <= s * (m - s)


@dataclass
class LPInstance:
    """
    Count vector (n_i) for one (m, r, s).

    Attributes:
        m, r, s: Dimensions
        counts: n_i for i0 <= i <= i1 (missing entries are 0)
    """
    m: int
    r: int
    s: int
    counts: Dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        _check_dimensions(self.m, self.r, self.s)
        for i, count in self.counts.items():
            if not self.i0 <= i <= self.i1:
                raise OutOfRange(f"Index {i} outside [{self.i0}, {self.i1}]")
            if int(count) != count or count < 0:
                raise ValueError(f"Count n_{i} = {count} is not a non-negative integer")

    @property
    def i0(self) -> int:
        return intersection_range(self.m, self.r, self.s)[0]

    @property
    def i1(self) -> int:
        return intersection_range(self.m, self.r, self.s)[1]

    @property
    def n(self) -> int:
        return sum(self.counts.values())

    def dimension_load(self) -> int:
        return sum(count * schubert_codim(self.m, self.r, self.s, i) for i, count in self.counts.items())

    def feasible(self) -> bool:
        """All three inequalities hold and n >= 1."""
        total_dims = sum(count * i for i, count in self.counts.items())
        return (
            self.n >= 1
            and self.dimension_load() <= self.s * (self.m - self.s)
            and self.m * total_dims >= self.n * self.r * self.s
        )

    def to_dict(self) -> Dict[str, int]:
        return {str(i): int(count) for i, count in sorted(self.counts.items()) if count}


@dataclass
class BoundEnumeration:
    """B(m, r) with a certifying count vector for every (s, n)."""
    m: int
    r: int
    per_s: Dict[int, Dict[int, LPInstance]] = field(default_factory=dict)

    @property
    def values(self) -> Set[int]:
        return {n for certificates in self.per_s.values() for n in certificates}

    def values_for(self, s: int) -> Set[int]:
        return set(self.per_s.get(s, {}))

    @property
    def maximum(self) -> int:
        return max(self.values, default=0)


def _count_bounds(m: int, r: int, s: int) -> Dict[int, int]:
    """Upper bounds on each n_i; zero-codimension indices are bounded through the witness inequality."""
    i0, i1 = intersection_range(m, r, s)
    budget = s * (m - s)
    bounds = {}
    for i in range(i0, i1 + 1):
        codim = schubert_codim(m, r, s, i)
        if codim > 0:
            bounds[i] = budget // codim
    surplus = sum(bounds[i] * (m * i - r * s) for i in bounds if m * i > r * s)
    for i in range(i0, i1 + 1):
        if i not in bounds:
            # m i < r s here, so each such atom lowers the average
            bounds[i] = surplus // (r * s - m * i)
    return bounds


def enumerate_B_s(m: int, r: int, s: int) -> Dict[int, LPInstance]:
    """B(m, r, s) as {n: certificate} by exhaustive search over bounded count vectors."""
    _check_dimensions(m, r, s)
    bounds = _count_bounds(m, r, s)
    indices = sorted(bounds)
    certificates: Dict[int, LPInstance] = {}
    for counts in product(*(range(bounds[i] + 1) for i in indices)):
        instance = LPInstance(m, r, s, dict(zip(indices, counts)))
        if instance.feasible() and instance.n not in certificates:
            certificates[instance.n] = instance
    return dict(sorted(certificates.items()))


def enumerate_B(m: int, r: int, max_m: int = ENUMERATION_MAX_M) -> BoundEnumeration:
    """
    B(m, r) = union over 0 < s < m of B(m, r, s), with certificates.

    Raises:
        TooLarge: if m exceeds max_m
        OutOfRange: unless 0 < r < m
    """
    _check_dimensions(m, r)
    if m > max_m:
        raise TooLarge(f"Enumeration guarded at m <= {max_m}, got m={m}")
    result = BoundEnumeration(m, r)
    for s in range(1, m):
        result.per_s[s] = enumerate_B_s(m, r, s)
    logger.debug(f"B({m},{r}) = {sorted(result.values)}")
    return result


def lp_vertices(m: int, r: int, s: int) -> List[Dict[int, Fraction]]:
    """
    Vertices of the relaxed polytope {n_i >= 0, both inequalities}.

    Two inequalities leave at most two nonzero coordinates at a vertex: a
    single index with the dimension count tight, or two indices with both
    inequalities tight.
    """
    _check_dimensions(m, r, s)
    i0, i1 = intersection_range(m, r, s)
    budget = Fraction(s * (m - s))
    codims = {i: schubert_codim(m, r, s, i) for i in range(i0, i1 + 1)}
    excess = {i: m * i - r * s for i in codims}

    vertices: List[Dict[int, Fraction]] = [{}]
    for i in codims:
        if codims[i] > 0 and excess[i] >= 0:
            vertices.append({i: budget / codims[i]})
    for i, j in ((i, j) for i in codims for j in codims if i < j):
        det = codims[i] * excess[j] - codims[j] * excess[i]
        if det == 0:
            continue
        n_i = Fraction(budget * excess[j], det)
        n_j = Fraction(-budget * excess[i], det)
        if n_i >= 0 and n_j >= 0:
            vertices.append({i: n_i, j: n_j})
    return vertices


def lp_vertex_max(m: int, r: int, s: int) -> Fraction:
    """Largest sum_i n_i over the vertices; bounds max B(m, r, s) from above."""
    return max(sum(vertex.values(), Fraction(0)) for vertex in lp_vertices(m, r, s))


def lp_relaxation_max(m: int, r: int, s: int) -> float:
    """The same maximum computed with scipy's LP solver."""
    _check_dimensions(m, r, s)
    i0, i1 = intersection_range(m, r, s)
    indices = list(range(i0, i1 + 1))
    a_ub = np.array([
        [schubert_codim(m, r, s, i) for i in indices],
        [r * s - m * i for i in indices],
    ], dtype=float)
    b_ub = np.array([s * (m - s), 0.0])
    result = linprog(-np.ones(len(indices)), A_ub=a_ub, b_ub=b_ub,
                     bounds=[(0, None)] * len(indices), method='highs')
    if not result.success:
        raise RuntimeError(f"LP relaxation failed: {result.message}")
    return float(-result.fun)


def sample_size_bound(m: int, r: int) -> Fraction:
    """m^2 / (r (m - r)); generic samples of larger size have a unique estimate."""
    _check_dimensions(m, r)
    return Fraction(m * m, r * (m - r))


__all__ = [
    'intersection_range',
    'schubert_codim',
    'feasible_profile',
    'LPInstance',
    'BoundEnumeration',
    'enumerate_B_s',
    'enumerate_B',
    'lp_vertices',
    'lp_vertex_max',
    'lp_relaxation_max',
    'sample_size_bound',
]
