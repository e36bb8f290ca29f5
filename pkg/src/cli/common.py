"""
Shared pieces of the grasmle commands: exit codes, settings and logging setup.
"""

from typing import Any, Dict

import click
from rich.console import Console

from ..estimation.likelihood import EmpiricalMeasure
from ..ingestion.sample_files import load_sample
from ..utils import FileFormatError, GrasmleLogger, load_settings, logger

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DIVERGENCE = 3
EXIT_INCOMPLETE = 4

# stdout is reserved for JSON documents
console = Console(stderr=True)


class InputError(click.ClickException):
    """Invalid input file or argument combination (exit code 2)."""
    exit_code = EXIT_INPUT


def setup(config: str, verbose: bool) -> Dict[str, Any]:
    """Load settings and configure the grasmle logger."""
    settings = load_settings(config)
    log_settings = settings.get('logging', {})
    level = 'DEBUG' if verbose else str(log_settings.get('level') or 'WARNING')
    GrasmleLogger.setup_logging(log_level=level, log_file=log_settings.get('file'))
    logger.debug(f"Loaded settings from {config}")
    return settings


def read_sample(path: str) -> EmpiricalMeasure:
    try:
        measure = load_sample(path)
    except FileFormatError as e:
        raise InputError(str(e)) from e
    logger.info(f"Loaded {measure.n} subspaces on Gr({measure.m}, {measure.r}) from {path}")
    return measure


def existence_kwargs(settings: Dict[str, Any]) -> Dict[str, Any]:
    """check_uniqueness budgets and tolerance from settings."""
    existence = settings.get('existence', {})
    return {
        'iterations': int(existence.get('witness_iterations', 200)),
        'max_candidates': int(existence.get('r1_max_candidates', 200000)),
        'max_subsets': int(existence.get('gr42_max_subsets', 5000)),
        'tol': float(settings.get('tolerances', {}).get('intersection', 1e-9)),
    }
