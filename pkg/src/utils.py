"""
Consolidated Utilities Module for grasmle
Combines logging, domain errors, settings loading, seed splitting and
compensated summation into a single module
"""

import copy
import hashlib
import logging
import logging.handlers
import math
import os
import re
import sys
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import yaml

# ============================================================================
# LOGGING UTILITIES
# ============================================================================

class GrasmleLogger:
    """Centralized logging configuration for grasmle."""

    @staticmethod
    def setup_logging(log_level: str = "INFO", log_file: Optional[str] = None) -> logging.Logger:
        """
        Set up logging configuration for the application.

        Args:
            log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
            log_file: Optional log file path

        Returns:
            Configured logger instance
        """
        logger = logging.getLogger("grasmle")
        logger.setLevel(getattr(logging, log_level.upper()))
        logger.propagate = False

        # Clear existing handlers
        logger.handlers.clear()

        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )

        # stderr keeps stdout free for JSON reports
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(getattr(logging, log_level.upper()))
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

        if log_file:
            try:
                os.makedirs(os.path.dirname(log_file) or ".", exist_ok=True)
                file_handler = logging.handlers.RotatingFileHandler(
                    log_file, maxBytes=10*1024*1024, backupCount=5
                )
                file_handler.setLevel(getattr(logging, log_level.upper()))
                file_handler.setFormatter(formatter)
                logger.addHandler(file_handler)
            except Exception as e:
                logger.warning(f"Could not set up file logging: {e}")

        return logger


# Global logger instance
logger = GrasmleLogger.setup_logging(log_level="WARNING")


# ============================================================================
# DOMAIN ERRORS
# ============================================================================

class GrasmleError(Exception):
    """Base class for every error raised by grasmle."""


class NotPositiveDefinite(GrasmleError, ValueError):
    """A matrix expected to be positive definite has a non-positive eigenvalue."""


class NotSelfAdjoint(GrasmleError, ValueError):
    """A matrix expected to be self-adjoint is too far from its adjoint."""


class BasePointMismatch(GrasmleError, ValueError):
    """Tangent vectors attached to different base points were combined."""


class DimensionMismatch(GrasmleError, ValueError):
    """Objects with incompatible ambient dimension or scalar field were combined."""


class RankDeficient(GrasmleError, ValueError):
    """A frame has numerical rank below its column count."""


class SingularTransform(GrasmleError, ValueError):
    """A linear transformation is numerically singular."""


class OutOfRange(GrasmleError, ValueError):
    """An integer argument lies outside its admissible range."""


class TooLarge(GrasmleError, ValueError):
    """An enumeration was requested beyond its size guard."""


class SampleTooLarge(TooLarge):
    """An exact combinatorial check would exceed its candidate budget."""


class DegenerateConfiguration(GrasmleError, ValueError):
    """Input lines violate the genericity assumptions of a line-geometry routine."""


class FileFormatError(GrasmleError, ValueError):
    """A JSON artifact is malformed or violates its schema."""


class DensityOverflow(GrasmleError, ArithmeticError):
    """A density ratio is not representable as a float."""


class InconsistentRuns(GrasmleError, RuntimeError):
    """Converged solver runs disagree, which convexity rules out."""


class DivergenceError(GrasmleError, RuntimeError):
    """A solver run did not converge; carries its report."""

    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


# ============================================================================
# SETTINGS
# ============================================================================

DEFAULT_SETTINGS: Dict[str, Any] = {
    'app': {
        'name': 'grasmle',
        'version': '0.1.0',
    },
    'logging': {
        'level': 'WARNING',
        'file': None,
    },
    'solver': {
        'max_iterations': 500,
        'residual_tolerance': 1e-10,
        'step_damping': 1.0,
        'divergence_norm_cap': 1e8,
        'max_backtracks': 30,
        'hessian_floor': 1e-10,
        'degeneracy_tolerance': 1e-8,
        'rng_seed': 0,
        'newton_polish': True,
        'polish_ratio': 0.5,
    },
    'tolerances': {
        'intersection': 1e-9,
        'frame_rank': 1e-10,
    },
    'existence': {
        'witness_iterations': 200,
        'r1_max_candidates': 200000,
        'gr42_max_subsets': 5000,
        'enumeration_max_m': 8,
    },
    'experiment': {
        'config': 'config/experiment.json',
        'sigma0_symmetry_tolerance': 1e-3,
    },
    'processing': {
        'max_workers': 4,
        'parallel_processing': True,
    },
}

_ENV_PATTERN = re.compile(r'^\$\{([A-Za-z_][A-Za-z0-9_]*)\}$')


def _expand_env(value: Any) -> Any:
    """Replace whole-string ``${VAR}`` values with the environment variable."""
    if isinstance(value, dict):
        return {key: _expand_env(item) for key, item in value.items()}
    if isinstance(value, list):
        return [_expand_env(item) for item in value]
    if isinstance(value, str):
        match = _ENV_PATTERN.match(value)
        if match:
            return os.environ.get(match.group(1))
    return value


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        elif value is not None:
            merged[key] = value
    return merged


def load_settings(config_path: Optional[str] = "config/settings.yaml") -> Dict[str, Any]:
    """
    Load settings from YAML and merge them over the built-in defaults.

    Args:
        config_path: Path to the YAML settings file

    Returns:
        Settings dictionary
    """
    if not config_path or not Path(config_path).exists():
        if config_path:
            logger.warning(f"Configuration file not found: {config_path}; using defaults")
        return copy.deepcopy(DEFAULT_SETTINGS)

    with open(config_path, 'r') as f:
        loaded = yaml.safe_load(f) or {}

    return _deep_merge(DEFAULT_SETTINGS, _expand_env(loaded))


def worker_count(settings: Dict[str, Any]) -> int:
    """Number of worker threads, capped by GRASMLE_THREADS when set."""
    processing = settings.get('processing', {})
    if not processing.get('parallel_processing', True):
        return 1
    workers = int(processing.get('max_workers', 1) or 1)
    cap = os.environ.get('GRASMLE_THREADS')
    if cap:
        try:
            workers = min(workers, int(cap))
        except ValueError:
            logger.warning(f"Ignoring non-integer GRASMLE_THREADS={cap!r}")
    return max(1, workers)


# ============================================================================
# NUMERIC HELPERS
# ============================================================================

def derive_seed(master: int, index: int) -> int:
    """
    Seed of the index-th independent stream: master XOR sha256(index).

    Args:
        master: Master seed
        index: Stream index (replication, trial or start number)

    Returns:
        Non-negative 63-bit seed
    """
    digest = hashlib.sha256(str(index).encode('ascii')).digest()
    return (int(master) ^ int.from_bytes(digest[:8], 'big')) & ((1 << 63) - 1)


def compensated_sum(weights: np.ndarray, stack: np.ndarray) -> np.ndarray:
    """
    Weighted sum over the leading axis with exactly rounded (fsum) entries.

    The result does not depend on the order of the atoms.
    """
    weights = np.asarray(weights, dtype=float)
    shape = stack.shape[1:]
    terms = stack.reshape(len(weights), -1) * weights[:, None]
    real = np.array([math.fsum(col) for col in terms.real.T.tolist()])
    if np.iscomplexobj(terms):
        imag = np.array([math.fsum(col) for col in terms.imag.T.tolist()])
        return (real + 1j * imag).reshape(shape)
    return real.reshape(shape)


__all__ = [
    'logger',
    'GrasmleLogger',
    'GrasmleError',
    'NotPositiveDefinite',
    'NotSelfAdjoint',
    'BasePointMismatch',
    'DimensionMismatch',
    'RankDeficient',
    'SingularTransform',
    'OutOfRange',
    'TooLarge',
    'SampleTooLarge',
    'DegenerateConfiguration',
    'DensityOverflow',
    'FileFormatError',
    'InconsistentRuns',
    'DivergenceError',
    'DEFAULT_SETTINGS',
    'load_settings',
    'worker_count',
    'derive_seed',
    'compensated_sum',
]
