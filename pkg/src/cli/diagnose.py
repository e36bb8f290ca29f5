"""
CLI commands for existence and uniqueness diagnostics.

Usage:
    python -m src.cli.diagnose check --sample sample.json
    python -m src.cli.diagnose bound --m 4 --r 2 --enumerate
    python -m src.cli.diagnose mc-critical --m 4 --r 2 --n 4 --field real --trials 1000
"""

import sys
from typing import Optional

import click
import numpy as np
from dotenv import load_dotenv
from rich.table import Table

from ..analysis.experiment import critical_summary, run_critical_monte_carlo
from ..existence.criteria import VerdictStatus, check_uniqueness
from ..existence.lp_bound import enumerate_B, lp_vertex_max, sample_size_bound
from ..geometry.manifold import ScalarField
from ..ingestion.sample_files import bound_document, critical_document, dumps, verdict_document, write_json
from ..utils import OutOfRange, TooLarge, logger, worker_count
from .common import EXIT_DIVERGENCE, InputError, console, existence_kwargs, read_sample, setup

# Load environment variables from .env file
load_dotenv()


@click.command()
@click.option('--sample', 'sample_path', type=click.Path(dir_okay=False), required=True,
              help='Sample file (grasmle.sample/1)')
@click.option('--budget', type=click.IntRange(min=0), help='Witness search iterations (default from settings)')
@click.option('--seed', type=int, default=0, show_default=True, help='Seed for the witness search')
@click.option('--out', default='-', show_default=True, help='Output verdict file (- for stdout)')
@click.option('--config', default='config/settings.yaml', help='Configuration file path')
@click.option('--verbose', is_flag=True, help='Verbose output')
def check_sample(sample_path: str, budget: Optional[int], seed: int, out: str, config: str, verbose: bool):
    """Decide whether a sample has a unique estimate; exit 3 on NotUnique."""
    settings = setup(config, verbose)
    measure = read_sample(sample_path)
    kwargs = existence_kwargs(settings)
    if budget is not None:
        kwargs['iterations'] = budget

    verdict = check_uniqueness(measure, rng=np.random.default_rng(seed), **kwargs)
    write_json(out, verdict_document(verdict))

    colour = {VerdictStatus.UNIQUE: 'green', VerdictStatus.NOT_UNIQUE: 'red'}.get(verdict.status, 'yellow')
    console.print(f"[{colour}]{verdict.status.value}[/{colour}] via {verdict.method.value}")
    if verdict.witness is not None:
        console.print(f"witness: dimension {verdict.witness_dimension}, value {verdict.witness_value:.6g}")
        console.print(verdict.witness.frame)
    if verdict.notes:
        console.print(verdict.notes)

    if verdict.status is VerdictStatus.NOT_UNIQUE:
        sys.exit(EXIT_DIVERGENCE)


@click.command()
@click.option('--m', type=int, required=True, help='Ambient dimension')
@click.option('--r', type=int, required=True, help='Subspace dimension')
@click.option('--enumerate', 'enumerate_', is_flag=True, help='Also list B(m, r) with certificates')
@click.option('--json', 'as_json', is_flag=True, help='Print a JSON document instead of text')
@click.option('--config', default='config/settings.yaml', help='Configuration file path')
@click.option('--verbose', is_flag=True, help='Verbose output')
def sample_bound(m: int, r: int, enumerate_: bool, as_json: bool, config: str, verbose: bool):
    """Print the sample-size bound m^2 / (r (m - r))."""
    settings = setup(config, verbose)
    if not 0 < r < m:
        raise click.UsageError(f"Need 0 < r < m, got m={m}, r={r}")

    bound = sample_size_bound(m, r)
    enumeration = None
    if enumerate_:
        try:
            enumeration = enumerate_B(m, r, max_m=int(settings['existence']['enumeration_max_m']))
        except TooLarge as e:
            raise InputError(str(e)) from e

    if as_json:
        click.echo(dumps(bound_document(m, r, bound, enumeration)), nl=False)
        return

    click.echo(str(bound))
    if enumeration is None:
        return
    click.echo(f"B({m},{r}) = {sorted(enumeration.values)}, max {enumeration.maximum}")
    for s, certificates in sorted(enumeration.per_s.items()):
        click.echo(f"  s={s}: {sorted(certificates)} (LP vertex max {lp_vertex_max(m, r, s)})")
        for n, instance in certificates.items():
            counts = ", ".join(f"n_{i}={count}" for i, count in instance.to_dict().items())
            click.echo(f"    n={n}: {counts}")


@click.command(name='mc-critical')
@click.option('--m', type=int, default=4, show_default=True, help='Ambient dimension')
@click.option('--r', type=int, default=2, show_default=True, help='Subspace dimension')
@click.option('--n', type=click.IntRange(min=1), default=4, show_default=True, help='Sample size')
@click.option('--field', type=click.Choice(['real', 'complex']), default='real', show_default=True,
              help='Scalar field')
@click.option('--trials', type=click.IntRange(min=1), default=1000, show_default=True,
              help='Number of random samples')
@click.option('--seed', type=int, default=0, show_default=True, help='Master seed')
@click.option('--workers', type=click.IntRange(min=1), help='Worker threads (default from settings)')
@click.option('--csv', 'csv_path', type=click.Path(dir_okay=False), help='Write one row per trial')
@click.option('--out', default='-', show_default=True, help='Output summary file (- for stdout)')
@click.option('--quiet', is_flag=True, help='Hide the progress bar')
@click.option('--config', default='config/settings.yaml', help='Configuration file path')
@click.option('--verbose', is_flag=True, help='Verbose output')
def critical_frequency(m: int, r: int, n: int, field: str, trials: int, seed: int,
                       workers: Optional[int], csv_path: Optional[str], out: str, quiet: bool,
                       config: str, verbose: bool):
    """Frequency of unique estimates among random samples of size n."""
    settings = setup(config, verbose)
    field_ = ScalarField.parse(field)
    max_workers = min(workers, worker_count(settings)) if workers else worker_count(settings)
    kwargs = existence_kwargs(settings)

    try:
        frame = run_critical_monte_carlo(m, r, n, field_, trials=trials, seed=seed,
                                         max_workers=max_workers, progress=not quiet,
                                         check_kwargs=kwargs)
    except OutOfRange as e:
        raise InputError(str(e)) from e

    summary = critical_summary(frame)
    if csv_path:
        frame.to_csv(csv_path, index=False)
        logger.info(f"Wrote {len(frame)} trials to {csv_path}")
    write_json(out, critical_document(m, r, n, field_, seed, summary))

    table = Table(title=f"Gr({m}, {r}) {field_.value}, n = {n}")
    table.add_column("Outcome")
    table.add_column("Trials", justify="right")
    for key in ('unique', 'not_unique', 'undecided'):
        table.add_row(key, str(summary[key]))
    table.add_row("frequency of unique", f"{summary['unique_frequency']:.3f}")
    console.print(table)
    if summary['undecided']:
        logger.warning(f"{summary['undecided']} trials were undecided")


@click.group()
def diagnose():
    """Existence and uniqueness diagnostics."""
    pass


diagnose.add_command(check_sample, name='check')
diagnose.add_command(sample_bound, name='bound')
diagnose.add_command(critical_frequency, name='mc-critical')


if __name__ == '__main__':
    diagnose()
