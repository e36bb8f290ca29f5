"""
CLI commands for drawing samples and fitting the Grassmannian estimate.

Usage:
    python -m src.cli.estimate sample --uniform --m 4 --r 2 --n 5 --seed 7 --out sample.json
    python -m src.cli.estimate sample --param config/sigma0.json --n 500 --out sample.json
    python -m src.cli.estimate fit --sample sample.json --method newton --report report.json
    python -m src.cli.estimate experiment --config config/experiment.json --out results/
"""

import dataclasses
import sys
from pathlib import Path
from typing import Optional, Tuple

import click
import numpy as np
from dotenv import load_dotenv
from rich.table import Table

from ..analysis.experiment import error_rate_slope, run_experiment
from ..estimation.likelihood import EmpiricalMeasure
from ..estimation.model import sample as draw_subspace
from ..estimation.solver import SOLVERS, DivergenceFlag, FitOptions, fit, fit_newton, multistart_fit
from ..existence.criteria import VerdictStatus, check_uniqueness, verdict_from_fit
from ..geometry.grassmann import uniform_sample
from ..geometry.manifold import ScalarField
from ..ingestion.sample_files import (
    experiment_report_document,
    load_experiment_config,
    load_parameter,
    report_document,
    save_sample,
    write_json,
)
from ..utils import FileFormatError, GrasmleError, InconsistentRuns, logger, worker_count
from .common import (
    EXIT_DIVERGENCE,
    EXIT_INCOMPLETE,
    InputError,
    console,
    existence_kwargs,
    read_sample,
    setup,
)

# Load environment variables from .env file
load_dotenv()


@click.command()
@click.option('--param', 'param_path', type=click.Path(dir_okay=False),
              help='Parameter file (grasmle.parameter/1) to sample from')
@click.option('--uniform', is_flag=True, help='Sample from the invariant distribution G_I')
@click.option('--m', type=click.IntRange(min=2), help='Ambient dimension (required with --uniform)')
@click.option('--r', type=click.IntRange(min=1), default=2, show_default=True,
              help='Subspace dimension')
@click.option('--n', type=click.IntRange(min=1), required=True, help='Number of draws')
@click.option('--field', type=click.Choice(['real', 'complex']), default='real',
              show_default=True, help='Scalar field for --uniform')
@click.option('--seed', type=int, default=0, show_default=True, help='Random seed')
@click.option('--out', default='-', show_default=True, help='Output sample file (- for stdout)')
@click.option('--config', default='config/settings.yaml', help='Configuration file path')
@click.option('--verbose', is_flag=True, help='Verbose output')
def sample_subspaces(param_path: Optional[str], uniform: bool, m: Optional[int], r: int, n: int,
                     field: str, seed: int, out: str, config: str, verbose: bool):
    """Draw n i.i.d. subspaces from G_sigma."""
    settings = setup(config, verbose)
    if bool(param_path) == uniform:
        raise click.UsageError("Specify exactly one of --param or --uniform")

    rng = np.random.default_rng(seed)
    if uniform:
        if m is None:
            raise click.UsageError("--uniform requires --m")
        if not r < m:
            raise click.UsageError(f"--r must be smaller than --m, got r={r}, m={m}")
        field_ = ScalarField.parse(field)
        atoms = [uniform_sample(field_, m, r, rng) for _ in range(n)]
    else:
        tolerance = float(settings['experiment'].get('sigma0_symmetry_tolerance', 1e-3))
        try:
            _, sigma = load_parameter(param_path, symmetry_tol=tolerance)
        except FileFormatError as e:
            raise InputError(str(e)) from e
        if m is not None and m != sigma.m:
            raise click.UsageError(f"--m {m} does not match the parameter dimension {sigma.m}")
        if not r < sigma.m:
            raise click.UsageError(f"--r must be smaller than m={sigma.m}, got r={r}")
        atoms = [draw_subspace(sigma, r, rng) for _ in range(n)]

    save_sample(out, EmpiricalMeasure.uniform(atoms))
    if out != '-':
        console.print(f"[green]Wrote {n} subspaces to {out}[/green]")


@click.command()
@click.option('--sample', 'sample_path', type=click.Path(dir_okay=False), required=True,
              help='Sample file (grasmle.sample/1)')
@click.option('--method', type=click.Choice(sorted(SOLVERS)), default='fixed-point',
              show_default=True, help='Solver')
@click.option('--tol', type=float, help='Residual tolerance (default from settings)')
@click.option('--max-iter', type=click.IntRange(min=1), help='Iteration cap (default from settings)')
@click.option('--seed', type=int, help='Seed for random starts and the witness search')
@click.option('--starts', type=click.IntRange(min=1), default=1, show_default=True,
              help='Total fixed-point runs (the first starts at the identity)')
@click.option('--report', 'report_path', default='-', show_default=True,
              help='Output report file (- for stdout)')
@click.option('--config', default='config/settings.yaml', help='Configuration file path')
@click.option('--verbose', is_flag=True, help='Verbose output')
def fit_sample(sample_path: str, method: str, tol: Optional[float], max_iter: Optional[int],
               seed: Optional[int], starts: int, report_path: str, config: str, verbose: bool):
    """Fit the estimate of a sample; exit 3 when it does not exist or is not unique.

    A run that hits the iteration cap on a sample the uniqueness check calls
    unique is continued with Newton steps from its last iterate; exit 4 if that
    also stops short.
    """
    settings = setup(config, verbose)
    measure = read_sample(sample_path)
    try:
        opts = FitOptions.from_settings(settings, residual_tolerance=tol,
                                        max_iterations=max_iter, rng_seed=seed)
    except ValueError as e:
        raise InputError(str(e)) from e

    if starts > 1:
        if method != 'fixed-point':
            raise click.UsageError("--starts applies to the fixed-point method only")
        try:
            report = multistart_fit(measure, opts, starts=starts, max_workers=worker_count(settings))
        except InconsistentRuns as e:
            raise click.ClickException(str(e)) from e
    else:
        report = fit(measure, method=method, opts=opts)

    hint = None
    if not report.unique:
        rng = np.random.default_rng(opts.rng_seed)
        hint = check_uniqueness(measure, rng=rng, **existence_kwargs(settings))
        if hint.status is VerdictStatus.UNIQUE and report.divergence_flag is DivergenceFlag.MAX_ITERATIONS:
            logger.warning(f"{report.method} stopped after {report.iterations} iterations "
                           f"(residual {report.final_residual:.3e}); continuing with Newton steps")
            retry = fit_newton(measure, report.estimate, opts)
            if retry.unique:
                report = retry
        if report.unique:
            hint = None
        elif hint.status is VerdictStatus.UNDECIDED:
            notes = "; ".join(filter(None, [hint.notes, verdict_from_fit(report).notes]))
            hint = dataclasses.replace(hint, notes=notes)

    write_json(report_path, report_document(report, hint=hint, source=sample_path))

    table = Table(title=f"{report.method} fit on Gr({measure.m}, {measure.r}), n = {measure.n}")
    table.add_column("Field")
    table.add_column("Value", justify="right")
    table.add_row("converged", str(report.converged))
    table.add_row("unique", str(report.unique))
    table.add_row("iterations", str(report.iterations))
    table.add_row("residual", f"{report.final_residual:.3e}")
    table.add_row("objective", f"{report.objective:.10f}")
    table.add_row("divergence", report.divergence_flag.value)
    if hint is not None:
        table.add_row("hint", f"{hint.status.value} ({hint.method.value})")
    console.print(table)

    if not report.unique:
        diverged = report.divergence_flag in (DivergenceFlag.BOUNDARY_ESCAPE, DivergenceFlag.STALLED)
        if not diverged and hint.status is VerdictStatus.UNIQUE:
            logger.warning(f"Unique estimate exists but the solver did not certify it "
                           f"(residual {report.final_residual:.3e})")
            sys.exit(EXIT_INCOMPLETE)
        logger.warning(f"No unique estimate ({hint.status.value}): {hint.notes}")
        sys.exit(EXIT_DIVERGENCE)


@click.command()
@click.option('--config', 'experiment_path', type=click.Path(dir_okay=False),
              help='Experiment file (grasmle.experiment/1); default from settings')
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), default='results/experiment',
              show_default=True, help='Output directory for raw.csv, summary.csv and report.json')
@click.option('--sizes', type=click.IntRange(min=1), multiple=True, help='Override sample sizes')
@click.option('--replications', type=click.IntRange(min=1), help='Override replications per size')
@click.option('--seed', type=int, help='Override the master seed')
@click.option('--method', type=click.Choice(sorted(SOLVERS)), help='Override the solver')
@click.option('--workers', type=click.IntRange(min=1), help='Worker threads (default from settings)')
@click.option('--quiet', is_flag=True, help='Hide the progress bar')
@click.option('--settings', 'settings_path', default='config/settings.yaml',
              help='Configuration file path')
@click.option('--verbose', is_flag=True, help='Verbose output')
def run_simulation(experiment_path: Optional[str], out_dir: str, sizes: Tuple[int, ...],
                   replications: Optional[int], seed: Optional[int], method: Optional[str],
                   workers: Optional[int], quiet: bool, settings_path: str, verbose: bool):
    """Sample from sigma0 at several sizes, refit, and tabulate the errors."""
    settings = setup(settings_path, verbose)
    experiment_settings = settings['experiment']
    experiment_path = experiment_path or experiment_settings['config']

    overrides = {'sizes': list(sizes) or None, 'replications': replications,
                 'seed': seed, 'method': method}
    try:
        experiment = load_experiment_config(
            experiment_path, symmetry_tol=float(experiment_settings['sigma0_symmetry_tolerance'])
        )
        experiment = dataclasses.replace(
            experiment, **{key: value for key, value in overrides.items() if value is not None}
        )
        if experiment.method not in SOLVERS:
            raise FileFormatError(f"Unknown method {experiment.method!r}")
        opts = FitOptions.from_settings(settings)
    except (GrasmleError, ValueError) as e:
        raise InputError(str(e)) from e

    max_workers = min(workers, worker_count(settings)) if workers else worker_count(settings)
    logger.info(f"Experiment: sizes {experiment.sizes}, {experiment.replications} replications, "
                f"{max_workers} workers")
    raw, summary = run_experiment(experiment, opts, max_workers=max_workers, progress=not quiet)
    slope = error_rate_slope(summary) if len(experiment.sizes) > 1 else None

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    raw.to_csv(out / 'raw.csv', index=False)
    summary.to_csv(out / 'summary.csv', index=False)
    write_json(out / 'report.json', experiment_report_document(experiment, summary, slope))

    table = Table(title=f"Estimation error by sample size ({experiment.method})")
    for column in ('n', 'converged', 'median Frobenius', 'mean Frobenius', 'median geodesic'):
        table.add_column(column, justify="right")
    for row in summary.itertuples(index=False):
        table.add_row(str(row.n), f"{row.converged_fraction:.0%}", f"{row.median_frobenius:.4f}",
                      f"{row.mean_frobenius:.4f}", f"{row.median_geodesic:.4f}")
    console.print(table)
    if slope is not None:
        console.print(f"log-log error slope: {slope:.3f}")
    if (summary['converged_fraction'] < 1).any():
        logger.warning("Some replications did not converge; see raw.csv")
    console.print(f"[green]Results written to {out}[/green]")


@click.group()
def estimate():
    """Sampling and estimation commands."""
    pass


estimate.add_command(sample_subspaces, name='sample')
estimate.add_command(fit_sample, name='fit')
estimate.add_command(run_simulation, name='experiment')


if __name__ == '__main__':
    estimate()
