"""
JSON file formats for samples, parameters, fit reports and experiment configs.

This module handles:
- Matrix encoding: row-major nested lists, complex scalars as [re, im]
- Reading and validating sample files into EmpiricalMeasures
- Parameter files (raw printed matrix plus normalization on load)
- Report documents for fits, uniqueness verdicts, bounds and simulations
- Experiment configuration

Every document carries a "schema" field. Floats are written with Python's
shortest round-trip repr, so a write/read cycle is lossless.
"""

import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..estimation.likelihood import EmpiricalMeasure
from ..estimation.solver import FitReport
from ..existence.criteria import UniquenessVerdict
from ..existence.lp_bound import BoundEnumeration, lp_vertex_max
from ..geometry.grassmann import Subspace
from ..geometry.manifold import CovarianceParameter, ScalarField, normalize_parameter
from ..utils import FileFormatError, GrasmleError, logger

SAMPLE_SCHEMA = "grasmle.sample/1"
PARAMETER_SCHEMA = "grasmle.parameter/1"
REPORT_SCHEMA = "grasmle.fit-report/1"
VERDICT_SCHEMA = "grasmle.verdict/1"
EXPERIMENT_SCHEMA = "grasmle.experiment/1"
EXPERIMENT_REPORT_SCHEMA = "grasmle.experiment-report/1"
BOUND_SCHEMA = "grasmle.bound/1"
CRITICAL_SCHEMA = "grasmle.mc-critical/1"

PathLike = Union[str, Path]


# ============================================================================
# MATRIX ENCODING
# ============================================================================

def encode_matrix(matrix: np.ndarray) -> List[list]:
    """Row-major nested lists; complex entries become [re, im] pairs."""
    matrix = np.asarray(matrix)
    if np.iscomplexobj(matrix):
        return [[[float(z.real), float(z.imag)] for z in row] for row in matrix]
    return [[float(x) for x in row] for row in matrix]


def decode_matrix(rows: Any, field_: ScalarField) -> np.ndarray:
    """Inverse of encode_matrix, validating a rectangular shape."""
    if not isinstance(rows, list) or not rows or not all(isinstance(row, list) for row in rows):
        raise FileFormatError("Matrix must be a non-empty list of rows")
    width = len(rows[0])
    if any(len(row) != width for row in rows):
        raise FileFormatError("Matrix rows have different lengths")
    try:
        if field_ is ScalarField.COMPLEX:
            values = [[complex(entry[0], entry[1]) if isinstance(entry, list) else complex(entry)
                       for entry in row] for row in rows]
        else:
            values = [[float(entry) for entry in row] for row in rows]
    except (TypeError, ValueError, IndexError) as e:
        raise FileFormatError(f"Malformed matrix entry: {e}") from e
    matrix = np.array(values, dtype=field_.dtype)
    if not np.all(np.isfinite(matrix)):
        raise FileFormatError("Matrix has non-finite entries")
    return matrix


def _parse_field(document: Dict[str, Any]) -> ScalarField:
    try:
        return ScalarField.parse(document.get('field', 'real'))
    except ValueError as e:
        raise FileFormatError(f"Unknown field {document.get('field')!r}") from e


# ============================================================================
# JSON I/O
# ============================================================================

def dumps(document: Dict[str, Any]) -> str:
    return json.dumps(document, sort_keys=True, indent=2) + "\n"


def write_json(path: Optional[PathLike], document: Dict[str, Any]) -> None:
    """Write a document to path, or to stdout when path is None or '-'."""
    text = dumps(document)
    if path is None or str(path) == '-':
        sys.stdout.write(text)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding='utf-8')
    logger.debug(f"Wrote {path}")


def read_json(path: PathLike, schema: Optional[str] = None) -> Dict[str, Any]:
    """Read a JSON document, optionally checking its schema field."""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            document = json.load(f)
    except OSError as e:
        raise FileFormatError(f"Cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise FileFormatError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(document, dict):
        raise FileFormatError(f"{path} must hold a JSON object")
    if schema is not None and document.get('schema', schema) != schema:
        raise FileFormatError(f"{path} has schema {document.get('schema')!r}, expected {schema!r}")
    return document


# ============================================================================
# SAMPLES
# ============================================================================

def sample_document(measure: EmpiricalMeasure) -> Dict[str, Any]:
    document = {
        'schema': SAMPLE_SCHEMA,
        'field': measure.field.value,
        'm': measure.m,
        'r': measure.r,
        'subspaces': [encode_matrix(atom.frame) for atom in measure.atoms],
    }
    if not measure.is_uniform:
        document['weights'] = [float(w) for w in measure.weights]
    return document


def parse_sample(document: Dict[str, Any]) -> EmpiricalMeasure:
    """
    Build an EmpiricalMeasure from a sample document.

    Frames need not be orthonormal; rank checks apply on load.
    """
    field_ = _parse_field(document)
    try:
        m, r = int(document['m']), int(document['r'])
        frames = document['subspaces']
    except (KeyError, TypeError, ValueError) as e:
        raise FileFormatError(f"Sample needs integer m, r and a subspaces list: {e}") from e
    if not isinstance(frames, list) or not frames:
        raise FileFormatError("Sample has no subspaces")

    atoms = []
    for index, rows in enumerate(frames):
        frame = decode_matrix(rows, field_)
        if frame.shape != (m, r):
            raise FileFormatError(f"Subspace {index} has shape {frame.shape}, expected ({m}, {r})")
        try:
            atoms.append(Subspace.from_orthonormal(frame, field=field_))
        except GrasmleError as e:
            raise FileFormatError(f"Subspace {index}: {e}") from e

    weights = document.get('weights')
    try:
        if weights is None:
            return EmpiricalMeasure.uniform(atoms)
        return EmpiricalMeasure.weighted(atoms, weights)
    except (GrasmleError, ValueError) as e:
        raise FileFormatError(f"Invalid weights: {e}") from e


def save_sample(path: Optional[PathLike], measure: EmpiricalMeasure) -> None:
    write_json(path, sample_document(measure))


def load_sample(path: PathLike) -> EmpiricalMeasure:
    return parse_sample(read_json(path, SAMPLE_SCHEMA))


# ============================================================================
# PARAMETERS
# ============================================================================

def parameter_document(sigma: CovarianceParameter) -> Dict[str, Any]:
    return {
        'schema': PARAMETER_SCHEMA,
        'field': sigma.field.value,
        'm': sigma.m,
        'matrix': encode_matrix(sigma.matrix),
    }


def parse_parameter(document: Dict[str, Any],
                    symmetry_tol: float = 1e-8) -> Tuple[np.ndarray, CovarianceParameter]:
    """
    Returns:
        (raw matrix as stored, normalized CovarianceParameter)
    """
    field_ = _parse_field(document)
    raw = decode_matrix(document.get('matrix'), field_)
    try:
        return raw, normalize_parameter(raw, field=field_, symmetry_tol=symmetry_tol)
    except GrasmleError as e:
        raise FileFormatError(f"Invalid parameter matrix: {e}") from e


def load_parameter(path: PathLike, symmetry_tol: float = 1e-8) -> Tuple[np.ndarray, CovarianceParameter]:
    return parse_parameter(read_json(path, PARAMETER_SCHEMA), symmetry_tol)


def save_parameter(path: Optional[PathLike], sigma: CovarianceParameter) -> None:
    write_json(path, parameter_document(sigma))


# ============================================================================
# REPORTS
# ============================================================================

def verdict_document(verdict: UniquenessVerdict) -> Dict[str, Any]:
    document = {'schema': VERDICT_SCHEMA, **verdict.to_dict()}
    document['witness'] = encode_matrix(verdict.witness.frame) if verdict.witness is not None else None
    return document


def report_document(report: FitReport, hint: Optional[UniquenessVerdict] = None,
                    source: Optional[str] = None) -> Dict[str, Any]:
    """Fit report with the estimate matrix and an optional uniqueness hint."""
    document = {
        'schema': REPORT_SCHEMA,
        'field': report.estimate.field.value,
        'm': report.estimate.m,
        'estimate': encode_matrix(report.estimate.matrix),
        **report.to_dict(),
    }
    if source is not None:
        document['sample'] = source
    if hint is not None:
        document['hint'] = verdict_document(hint)
    return document


def load_report_estimate(path: PathLike) -> CovarianceParameter:
    """Estimate stored in a fit report."""
    document = read_json(path, REPORT_SCHEMA)
    field_ = _parse_field(document)
    try:
        return CovarianceParameter(field_, decode_matrix(document.get('estimate'), field_))
    except GrasmleError as e:
        raise FileFormatError(f"Invalid estimate in {path}: {e}") from e


def bound_document(m: int, r: int, bound: Fraction,
                   enumeration: Optional[BoundEnumeration] = None) -> Dict[str, Any]:
    """Sample-size bound, plus B(m, r) with one certificate per (s, n) when enumerated."""
    document: Dict[str, Any] = {
        'schema': BOUND_SCHEMA,
        'm': m,
        'r': r,
        'bound': str(bound),
        'bound_value': float(bound),
    }
    if enumeration is not None:
        document['enumeration'] = {
            'values': sorted(enumeration.values),
            'maximum': enumeration.maximum,
            'per_s': {
                str(s): {
                    'values': sorted(certificates),
                    'lp_vertex_max': str(lp_vertex_max(m, r, s)),
                    'certificates': {str(n): instance.to_dict() for n, instance in certificates.items()},
                }
                for s, certificates in sorted(enumeration.per_s.items())
            },
        }
    return document


def critical_document(m: int, r: int, n: int, field_: ScalarField, seed: int,
                      summary: Dict[str, Any]) -> Dict[str, Any]:
    return {
        'schema': CRITICAL_SCHEMA,
        'field': field_.value,
        'm': m,
        'r': r,
        'n': n,
        'seed': seed,
        **summary,
    }


def experiment_report_document(config: "ExperimentConfig", summary: pd.DataFrame,
                               slope: Optional[float] = None) -> Dict[str, Any]:
    """Experiment settings, raw and normalized sigma0, and the per-size summary."""
    return {
        'schema': EXPERIMENT_REPORT_SCHEMA,
        'field': config.sigma0.field.value,
        'm': config.sigma0.m,
        'r': config.r,
        'method': config.method,
        'sizes': config.sizes,
        'replications': config.replications,
        'seed': config.seed,
        'sigma0_raw': encode_matrix(config.sigma0_raw),
        'sigma0': encode_matrix(config.sigma0.matrix),
        'summary': summary.to_dict(orient='records'),
        'error_rate_slope': slope,
    }


# ============================================================================
# EXPERIMENT CONFIG
# ============================================================================

@dataclass
class ExperimentConfig:
    """
    Simulation study: sample from sigma0 at several sizes and refit.

    Attributes:
        sigma0_raw: Matrix as stored (may be slightly asymmetric)
        sigma0: Normalized parameter
        sizes: Sample sizes n
        replications: Replications per size
        seed: Master seed
        r: Subspace dimension
        method: Solver name
    """
    sigma0_raw: np.ndarray
    sigma0: CovarianceParameter
    sizes: List[int]
    replications: int = 20
    seed: int = 0
    r: int = 2
    method: str = "fixed-point"

    def __post_init__(self):
        if not self.sizes or any(int(n) < 1 for n in self.sizes):
            raise FileFormatError("sizes must be a non-empty list of positive integers")
        if self.replications < 1:
            raise FileFormatError("replications must be positive")
        if not 0 < self.r < self.sigma0.m:
            raise FileFormatError(f"r = {self.r} must satisfy 0 < r < m = {self.sigma0.m}")
        self.sizes = [int(n) for n in self.sizes]


def load_experiment_config(path: PathLike, symmetry_tol: float = 1e-3) -> ExperimentConfig:
    """
    Read an experiment config; "sigma0" is an inline matrix or a parameter file path
    relative to the config file.
    """
    path = Path(path)
    document = read_json(path, EXPERIMENT_SCHEMA)
    sigma0 = document.get('sigma0')
    if isinstance(sigma0, str):
        raw, parameter = load_parameter(path.parent / sigma0, symmetry_tol)
    else:
        raw, parameter = parse_parameter(
            {'field': document.get('field', 'real'), 'matrix': sigma0}, symmetry_tol
        )
    try:
        return ExperimentConfig(
            sigma0_raw=raw,
            sigma0=parameter,
            sizes=list(document.get('sizes', [])),
            replications=int(document.get('replications', 20)),
            seed=int(document.get('seed', 0)),
            r=int(document.get('r', 2)),
            method=str(document.get('method', 'fixed-point')),
        )
    except (TypeError, ValueError) as e:
        raise FileFormatError(f"Invalid experiment config {path}: {e}") from e


__all__ = [
    'encode_matrix',
    'decode_matrix',
    'dumps',
    'write_json',
    'read_json',
    'sample_document',
    'parse_sample',
    'save_sample',
    'load_sample',
    'parameter_document',
    'parse_parameter',
    'load_parameter',
    'save_parameter',
    'verdict_document',
    'report_document',
    'load_report_estimate',
    'bound_document',
    'critical_document',
    'experiment_report_document',
    'ExperimentConfig',
    'load_experiment_config',
]
