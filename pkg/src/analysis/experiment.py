"""
Simulation engines behind the `experiment` and `mc-critical` commands.

This module handles:
- Refitting samples drawn from a known sigma0 at several sample sizes
- Per-size summaries of the estimation error
- Monte Carlo frequencies of unique estimates at a critical sample size

Every replication or trial i draws from its own stream seeded with
derive_seed(master, i), so results do not depend on the number of workers.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from ..estimation.likelihood import EmpiricalMeasure
from ..estimation.model import sample
from ..estimation.solver import FitOptions, fit
from ..existence.criteria import VerdictStatus, check_uniqueness
from ..geometry.grassmann import uniform_sample
from ..geometry.manifold import ScalarField, distance
from ..ingestion.sample_files import ExperimentConfig
from ..utils import OutOfRange, derive_seed, logger


def _parallel_map(task: Callable[[Any], Dict[str, Any]], items: List[Any],
                  max_workers: int, progress: bool, desc: str) -> List[Dict[str, Any]]:
    """Ordered map over items with an optional thread pool and progress bar."""
    bar = tqdm(total=len(items), desc=desc, disable=not progress)
    results = []
    try:
        if max_workers > 1:
            with ThreadPoolExecutor(max_workers=max_workers) as executor:
                for result in executor.map(task, items):
                    results.append(result)
                    bar.update(1)
        else:
            for item in items:
                results.append(task(item))
                bar.update(1)
    finally:
        bar.close()
    return results


def upper_triangle(matrix: np.ndarray, prefix: str = "d") -> Dict[str, float]:
    """Entries (i, j), i <= j, keyed d_ij with 1-based indices."""
    m = matrix.shape[0]
    return {
        f"{prefix}_{i + 1}{j + 1}": float(np.real(matrix[i, j]))
        for i in range(m) for j in range(i, m)
    }


def run_experiment(config: ExperimentConfig, opts: Optional[FitOptions] = None,
                   max_workers: int = 1, progress: bool = False) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Sample from sigma0 at every configured size, refit and record the error.

    Args:
        config: Experiment configuration
        opts: Solver options
        max_workers: Worker threads
        progress: Show a tqdm progress bar

    Returns:
        (raw, summary): one row per replication with the upper-triangular
        difference sigma_hat - sigma0, and one row per sample size
    """
    opts = opts or FitOptions()
    sigma0 = config.sigma0
    jobs = [
        (position * config.replications + rep, n, rep)
        for position, n in enumerate(config.sizes)
        for rep in range(config.replications)
    ]

    def replicate(job):
        index, n, rep = job
        seed = derive_seed(config.seed, index)
        rng = np.random.default_rng(seed)
        measure = EmpiricalMeasure.uniform([sample(sigma0, config.r, rng) for _ in range(n)])
        report = fit(measure, method=config.method, opts=opts)
        difference = report.estimate.matrix - sigma0.matrix
        return {
            'n': n,
            'replication': rep,
            'seed': seed,
            'converged': report.converged,
            'iterations': report.iterations,
            'residual': report.final_residual,
            'frobenius_error': float(np.linalg.norm(difference)),
            'geodesic_error': distance(sigma0, report.estimate),
            **upper_triangle(difference),
        }

    raw = pd.DataFrame(_parallel_map(replicate, jobs, max_workers, progress, "experiment"))
    summary = summarize_experiment(raw)
    logger.info(f"experiment: {len(raw)} fits, median errors {summary['median_frobenius'].round(4).tolist()}")
    return raw, summary


def summarize_experiment(raw: pd.DataFrame) -> pd.DataFrame:
    """Median and mean errors and convergence rate per sample size."""
    grouped = raw.groupby('n', sort=True)
    return pd.DataFrame({
        'replications': grouped.size(),
        'converged_fraction': grouped['converged'].mean(),
        'median_frobenius': grouped['frobenius_error'].median(),
        'mean_frobenius': grouped['frobenius_error'].mean(),
        'median_geodesic': grouped['geodesic_error'].median(),
    }).reset_index()


def error_rate_slope(summary: pd.DataFrame, column: str = 'median_frobenius') -> float:
    """Least-squares slope of log(error) against log(n); about -0.5 for a consistent estimator."""
    slope, _ = np.polyfit(np.log(summary['n'].to_numpy(float)), np.log(summary[column].to_numpy(float)), 1)
    return float(slope)


def supports_exact_check(m: int, r: int) -> bool:
    return r == 1 or (m, r) == (4, 2)


def run_critical_monte_carlo(m: int = 4, r: int = 2, n: int = 4,
                             field: ScalarField = ScalarField.REAL,
                             trials: int = 1000, seed: int = 0,
                             max_workers: int = 1, progress: bool = False,
                             check_kwargs: Optional[Dict[str, Any]] = None) -> pd.DataFrame:
    """
    Frequency of unique estimates for uniform samples of size n.

    Args:
        m, r: Grassmannian Gr(m, r); r = 1 or (4, 2)
        n: Sample size
        field: Scalar field
        trials: Number of samples
        seed: Master seed
        max_workers: Worker threads
        progress: Show a tqdm progress bar
        check_kwargs: Extra arguments for check_uniqueness

    Returns:
        One row per trial with the verdict status and method

    Raises:
        OutOfRange: for (m, r) without an exact check
    """
    if not supports_exact_check(m, r):
        raise OutOfRange(f"No exact uniqueness check for Gr({m}, {r}); use r = 1 or Gr(4, 2)")
    if n < 1 or trials < 1:
        raise OutOfRange("n and trials must be positive")
    check_kwargs = check_kwargs or {}

    def trial(index):
        rng = np.random.default_rng(derive_seed(seed, index))
        measure = EmpiricalMeasure.uniform([uniform_sample(field, m, r, rng) for _ in range(n)])
        verdict = check_uniqueness(measure, rng=rng, **check_kwargs)
        return {
            'trial': index,
            'status': verdict.status.value,
            'method': verdict.method.value,
            'witness_dimension': verdict.witness_dimension,
        }

    frame = pd.DataFrame(_parallel_map(trial, list(range(trials)), max_workers, progress, "mc-critical"))
    logger.info(f"mc-critical Gr({m},{r}) n={n} {field.value}: {critical_summary(frame)}")
    return frame


def critical_summary(frame: pd.DataFrame) -> Dict[str, Any]:
    """Counts per status and the frequency of unique estimates."""
    counts = frame['status'].value_counts()
    trials = int(len(frame))
    unique = int(counts.get(VerdictStatus.UNIQUE.value, 0))
    return {
        'trials': trials,
        'unique': unique,
        'not_unique': int(counts.get(VerdictStatus.NOT_UNIQUE.value, 0)),
        'undecided': int(counts.get(VerdictStatus.UNDECIDED.value, 0)),
        'unique_frequency': unique / trials if trials else 0.0,
    }


__all__ = [
    'upper_triangle',
    'run_experiment',
    'summarize_experiment',
    'error_rate_slope',
    'supports_exact_check',
    'run_critical_monte_carlo',
    'critical_summary',
]
