"""
Iterative solvers for the maximum likelihood equation.

This module handles:
- The fast fixed-point dynamics sigma_{k+1} = exp(-2 grad l_P) sigma_k
- A Newton iteration solving the linearized likelihood equation in T_sigma
- Newton polishing once the fixed-point dynamics contract slowly
- Backtracking, divergence detection and multistart cross-checks
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from itertools import combinations
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from ..geometry.manifold import (
    CovarianceParameter,
    TangentVector,
    distance,
    geodesic,
    metric_inner,
    random_parameter,
    tangent_basis,
)
from ..utils import (
    DEFAULT_SETTINGS,
    DimensionMismatch,
    DivergenceError,
    InconsistentRuns,
    derive_seed,
    logger,
)
from .likelihood import (
    EmpiricalMeasure,
    gradient,
    hessian_matrix,
    neg_log_likelihood,
)

# Slack on the monotone acceptance test
MONOTONE_SLACK = 1e-12
AGREEMENT_TOL = 1e-6
INCONSISTENCY_TOL = 1e-5


class DivergenceFlag(Enum):
    """Why a fit stopped without converging."""
    NONE = "none"
    BOUNDARY_ESCAPE = "boundary_escape"
    MAX_ITERATIONS = "max_iterations"
    STALLED = "stalled"


@dataclass
class FitOptions:
    """Solver controls; defaults come from the solver section of settings.yaml."""
    max_iterations: int = 500
    residual_tolerance: float = 1e-10
    step_damping: float = 1.0
    divergence_norm_cap: float = 1e8
    max_backtracks: int = 30
    hessian_floor: float = 1e-10
    degeneracy_tolerance: float = 1e-8
    rng_seed: int = 0
    newton_polish: bool = True
    polish_ratio: float = 0.5

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.residual_tolerance <= 0 or self.hessian_floor <= 0 or self.degeneracy_tolerance <= 0:
            raise ValueError("Tolerances must be positive")
        if not 0 < self.step_damping <= 1:
            raise ValueError("step_damping must lie in (0, 1]")
        if self.divergence_norm_cap <= 1:
            raise ValueError("divergence_norm_cap must exceed 1")
        if self.max_backtracks < 0:
            raise ValueError("max_backtracks must be non-negative")
        if not 0 < self.polish_ratio < 1:
            raise ValueError("polish_ratio must lie in (0, 1)")

    @classmethod
    def from_settings(cls, settings: Optional[Dict[str, Any]] = None, **overrides) -> "FitOptions":
        """Build options from the solver section, applying non-None overrides."""
        section = dict(DEFAULT_SETTINGS['solver'])
        section.update((settings or {}).get('solver', {}))
        section.update({key: value for key, value in overrides.items() if value is not None})
        known = cls.__dataclass_fields__
        return cls(**{key: value for key, value in section.items() if key in known})


@dataclass
class TraceEntry:
    iteration: int
    residual: float
    objective: float
    step: float = 0.0
    event: Optional[str] = None


@dataclass
class FitReport:
    """
    Outcome of one solver run.

    Attributes:
        estimate: Last iterate (the estimate when converged)
        converged: residual <= residual_tolerance was reached
        iterations: Accepted steps taken
        final_residual: Frobenius norm of the gradient at the estimate
        objective: l_P at the estimate
        trace: One entry per iterate
        divergence_flag: Reason for stopping without convergence
        method: "fixed-point" or "newton"
        degenerate_dimension: Hessian near-kernel dimension at a converged estimate
    """
    estimate: CovarianceParameter
    converged: bool
    iterations: int
    final_residual: float
    objective: float
    trace: List[TraceEntry] = field(default_factory=list)
    divergence_flag: DivergenceFlag = DivergenceFlag.NONE
    method: str = "fixed-point"
    degenerate_dimension: Optional[int] = None

    @property
    def unique(self) -> bool:
        """Converged with a nonsingular Hessian, so the minimizer is isolated."""
        return self.converged and self.degenerate_dimension == 0

    @property
    def events(self) -> List[str]:
        return [entry.event for entry in self.trace if entry.event]

    def raise_for_divergence(self) -> "FitReport":
        if not self.converged:
            raise DivergenceError(
                f"{self.method} stopped with {self.divergence_flag.value} at residual "
                f"{self.final_residual:.3e}", report=self
            )
        return self

    def to_dict(self) -> Dict[str, Any]:
        """Scalar fields and trace; the estimate matrix is encoded by the file layer."""
        return {
            'method': self.method,
            'converged': self.converged,
            'unique': self.unique,
            'iterations': self.iterations,
            'final_residual': self.final_residual,
            'objective': self.objective,
            'divergence_flag': self.divergence_flag.value,
            'degenerate_dimension': self.degenerate_dimension,
            'trace': [asdict(entry) for entry in self.trace],
        }


Direction = Callable[[EmpiricalMeasure, CovarianceParameter, TangentVector, FitOptions],
                     Tuple[TangentVector, float, Optional[str]]]


def _line_search(measure: EmpiricalMeasure, sigma: CovarianceParameter,
                 direction: TangentVector, objective: float, damping: float,
                 opts: FitOptions) -> Optional[Tuple[CovarianceParameter, float, float, int]]:
    """Halve the step until l_P does not increase."""
    step = damping
    for halvings in range(opts.max_backtracks + 1):
        try:
            with np.errstate(over='ignore', invalid='ignore'):
                candidate = geodesic(sigma, direction, step)
            value = neg_log_likelihood(measure, candidate)
        except (ValueError, np.linalg.LinAlgError):
            candidate, value = None, np.inf
        if candidate is not None and np.isfinite(value) and value <= objective + MONOTONE_SLACK:
            return candidate, value, step, halvings
        step /= 2
    return None


def _iterate(measure: EmpiricalMeasure, sigma0: CovarianceParameter, opts: FitOptions,
             method: str, direction_fn: Direction) -> FitReport:
    if measure.m != sigma0.m or measure.field is not sigma0.field:
        raise DimensionMismatch("Measure and starting point dimensions differ")

    sigma = sigma0
    objective = neg_log_likelihood(measure, sigma)
    trace: List[TraceEntry] = []
    flag = DivergenceFlag.NONE
    step, event, iteration = 0.0, None, 0

    while True:
        grad = gradient(measure, sigma)
        current = float(np.linalg.norm(grad.matrix))
        trace.append(TraceEntry(iteration, current, objective, step, event))
        logger.debug(f"{method} iteration {iteration}: residual={current:.3e} objective={objective:.12g}")

        if current <= opts.residual_tolerance:
            break
        if sigma.condition_number > opts.divergence_norm_cap:
            flag = DivergenceFlag.BOUNDARY_ESCAPE
            break
        if iteration >= opts.max_iterations:
            flag = DivergenceFlag.MAX_ITERATIONS
            break

        direction, damping, event = direction_fn(measure, sigma, grad, opts)
        accepted = _line_search(measure, sigma, direction, objective, damping, opts)
        if accepted is None:
            flag = DivergenceFlag.STALLED
            break
        sigma, objective, step, halvings = accepted
        if halvings:
            logger.debug(f"{method} iteration {iteration}: backtracked {halvings} times")
            event = event or "backtrack"
        iteration += 1

    converged = flag is DivergenceFlag.NONE
    degenerate = None
    if converged:
        eigenvalues = np.linalg.eigvalsh(hessian_matrix(measure, sigma))
        degenerate = int(np.sum(eigenvalues < opts.degeneracy_tolerance))

    report = FitReport(
        estimate=sigma,
        converged=converged,
        iterations=iteration,
        final_residual=trace[-1].residual,
        objective=objective,
        trace=trace,
        divergence_flag=flag,
        method=method,
        degenerate_dimension=degenerate,
    )
    logger.info(
        f"{method}: {iteration} iterations, residual {report.final_residual:.3e}, "
        f"flag {flag.value}, degenerate dimension {degenerate}"
    )
    return report


def _newton_step(measure: EmpiricalMeasure, sigma: CovarianceParameter, grad: TangentVector,
                 opts: FitOptions) -> Optional[TangentVector]:
    """Solution of nabla_v grad = -grad, or None when the Hessian is below the floor."""
    basis = tangent_basis(sigma)
    hessian = hessian_matrix(measure, sigma, basis)
    eigenvalues, eigenvectors = np.linalg.eigh(hessian)
    if eigenvalues[0] < opts.hessian_floor:
        logger.debug(f"Singular Hessian (smallest eigenvalue {eigenvalues[0]:.3e})")
        return None

    coordinates = np.array([metric_inner(grad, b) for b in basis])
    solution = -eigenvectors @ ((eigenvectors.T @ coordinates) / eigenvalues)
    whitened = np.tensordot(solution, np.stack([b.whitened for b in basis]), axes=1)
    return TangentVector.from_whitened(sigma, whitened)


class _PolishedDescent:
    """
    Fixed-point direction -grad, switching to Newton steps for the rest of the
    run once one step shrinks the residual by less than opts.polish_ratio.

    Iterates with a singular Hessian keep the gradient step.
    """

    def __init__(self):
        self.previous: Optional[float] = None
        self.polishing = False

    def __call__(self, measure, sigma, grad, opts):
        current = float(np.linalg.norm(grad.matrix))
        if (opts.newton_polish and not self.polishing and self.previous is not None
                and current > opts.polish_ratio * self.previous):
            logger.debug(f"fixed-point: residual ratio {current / self.previous:.3f}; Newton polishing")
            self.polishing = True
        self.previous = current

        if self.polishing:
            step = _newton_step(measure, sigma, grad, opts)
            if step is not None:
                return step, 1.0, "newton_polish"
        return -grad, opts.step_damping, None


def _newton_direction(measure, sigma, grad, opts):
    step = _newton_step(measure, sigma, grad, opts)
    if step is None:
        return -grad, opts.step_damping, "singular_hessian"
    return step, 1.0, None


def fit_fixed_point(measure: EmpiricalMeasure,
                    sigma0: Optional[CovarianceParameter] = None,
                    opts: Optional[FitOptions] = None) -> FitReport:
    """
    Run the fast dynamics sigma_{k+1} = geodesic(sigma_k, -grad l_P(sigma_k), damping).

    The first trial step is always the full (damped) step. When the dynamics
    contract slowly (an almost flat direction of l_P) the run finishes with
    Newton steps, recorded as "newton_polish" in the trace; set
    opts.newton_polish = False for the plain dynamics.

    Args:
        measure: Empirical measure P
        sigma0: Starting point; the identity when omitted
        opts: Solver options

    Returns:
        FitReport; divergence is flagged, never raised
    """
    sigma0 = sigma0 or CovarianceParameter.identity(measure.m, measure.field)
    return _iterate(measure, sigma0, opts or FitOptions(), "fixed-point", _PolishedDescent())


def fit_newton(measure: EmpiricalMeasure,
               sigma0: Optional[CovarianceParameter] = None,
               opts: Optional[FitOptions] = None) -> FitReport:
    """
    Newton iteration: solve grad + nabla_v grad = 0 in T_sigma, then follow the geodesic.

    A Hessian with eigenvalue below opts.hessian_floor falls back to a damped
    gradient step and records "singular_hessian" in the trace.
    """
    sigma0 = sigma0 or CovarianceParameter.identity(measure.m, measure.field)
    return _iterate(measure, sigma0, opts or FitOptions(), "newton", _newton_direction)


SOLVERS = {
    'fixed-point': fit_fixed_point,
    'newton': fit_newton,
}


def fit(measure: EmpiricalMeasure, method: str = "fixed-point",
        sigma0: Optional[CovarianceParameter] = None,
        opts: Optional[FitOptions] = None) -> FitReport:
    """Dispatch to a solver by name."""
    try:
        solver = SOLVERS[method]
    except KeyError:
        raise ValueError(f"Unknown method {method!r}; expected one of {sorted(SOLVERS)}")
    return solver(measure, sigma0, opts)


def multistart_fit(measure: EmpiricalMeasure, opts: Optional[FitOptions] = None,
                   starts: int = 1, max_workers: int = 1) -> FitReport:
    """
    Run fit_fixed_point from the identity and starts - 1 random parameters.

    Args:
        measure: Empirical measure P
        opts: Solver options; rng_seed drives the random starts
        starts: Total number of runs
        max_workers: Worker threads

    Returns:
        The best report (converged first, then lowest objective)

    Raises:
        InconsistentRuns: if two runs with isolated minimizers disagree beyond 1e-5
    """
    if starts < 1:
        raise ValueError("starts must be at least 1")
    opts = opts or FitOptions()

    initial = [CovarianceParameter.identity(measure.m, measure.field)]
    for index in range(1, starts):
        rng = np.random.default_rng(derive_seed(opts.rng_seed, index))
        initial.append(random_parameter(measure.field, measure.m, rng))

    if max_workers > 1 and starts > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            reports = list(executor.map(lambda s: fit_fixed_point(measure, s, opts), initial))
    else:
        reports = [fit_fixed_point(measure, s, opts) for s in initial]

    isolated = [report for report in reports if report.unique]
    for first, second in combinations(isolated, 2):
        gap = distance(first.estimate, second.estimate)
        if gap > INCONSISTENCY_TOL:
            raise InconsistentRuns(f"Converged runs disagree by {gap:.3e}")
        if gap > AGREEMENT_TOL:
            logger.warning(f"Converged runs differ by {gap:.3e}")

    converged = [report for report in reports if report.converged]
    logger.info(f"multistart: {len(converged)}/{starts} runs converged")
    return min(converged or reports, key=lambda report: (report.objective, report.final_residual))


__all__ = [
    'DivergenceFlag',
    'FitOptions',
    'TraceEntry',
    'FitReport',
    'fit_fixed_point',
    'fit_newton',
    'fit',
    'multistart_fit',
    'tangent_basis',
]
