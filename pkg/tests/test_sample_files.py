"""
Tests for the JSON file formats.

This module tests:
- Matrix encoding for real and complex entries
- Sample and parameter files, including malformed inputs
- Fit, verdict, bound and simulation documents
- Experiment configuration files
"""

import json
import os
import shutil
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.estimation.likelihood import EmpiricalMeasure
from src.estimation.solver import fit_fixed_point
from src.existence.criteria import check_r1
from src.existence.lp_bound import enumerate_B
from src.geometry.grassmann import uniform_sample
from src.geometry.manifold import CovarianceParameter, ScalarField, random_parameter
from src.ingestion.sample_files import (
    BOUND_SCHEMA,
    EXPERIMENT_REPORT_SCHEMA,
    REPORT_SCHEMA,
    SAMPLE_SCHEMA,
    ExperimentConfig,
    bound_document,
    critical_document,
    decode_matrix,
    encode_matrix,
    experiment_report_document,
    load_experiment_config,
    load_parameter,
    load_report_estimate,
    load_sample,
    read_json,
    report_document,
    sample_document,
    save_parameter,
    save_sample,
    verdict_document,
    write_json,
)
from src.utils import FileFormatError

CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"

SIGMA0 = [
    [1.23943, 0.53234, 0.21763, 0.33038],
    [0.53234, 1.12502, 0.76236, 0.20842],
    [0.21763, 0.7626, 1.52821, 0.82655],
    [0.33038, 0.20842, 0.82655, 1.52298],
]


class TestMatrixEncoding:
    """Test matrix encoding."""

    def test_real(self):
        """Real matrices become nested lists of floats."""
        assert encode_matrix(np.array([[1.0, 2.0], [3.0, 4.5]])) == [[1.0, 2.0], [3.0, 4.5]]

    def test_complex(self):
        """Complex entries become [re, im] pairs."""
        matrix = np.array([[1 + 2j], [0.5 - 1j]])
        assert encode_matrix(matrix) == [[[1.0, 2.0]], [[0.5, -1.0]]]
        np.testing.assert_array_equal(decode_matrix(encode_matrix(matrix), ScalarField.COMPLEX), matrix)

    @pytest.mark.parametrize('rows', [[], [[1.0], [1.0, 2.0]], [["x"]], "matrix", [[float('nan')]]])
    def test_malformed(self, rows):
        """Ragged, non-numeric and non-finite matrices are rejected."""
        with pytest.raises(FileFormatError):
            decode_matrix(rows, ScalarField.REAL)


class TestSampleFiles:
    """Test sample file reading and writing."""

    def setup_method(self):
        """Set up test fixtures."""
        self.temp_dir = tempfile.mkdtemp()
        self.rng = np.random.default_rng(11)

    def teardown_method(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def write(self, name: str, document) -> str:
        path = os.path.join(self.temp_dir, name)
        with open(path, 'w') as f:
            json.dump(document, f)
        return path

    def test_save_and_load(self):
        """A saved sample loads back with identical frames."""
        for field in ScalarField:
            measure = EmpiricalMeasure.uniform([uniform_sample(field, 4, 2, self.rng) for _ in range(5)])
            path = os.path.join(self.temp_dir, f"{field.value}.json")
            save_sample(path, measure)
            loaded = load_sample(path)
            assert (loaded.field, loaded.m, loaded.r, loaded.n) == (field, 4, 2, 5)
            for first, second in zip(measure.atoms, loaded.atoms):
                np.testing.assert_array_equal(first.frame, second.frame)

    def test_weights_kept(self):
        """Non-uniform weights are written and read back."""
        atoms = [uniform_sample(ScalarField.REAL, 3, 1, self.rng) for _ in range(3)]
        measure = EmpiricalMeasure.weighted(atoms, [1.0, 2.0, 1.0])
        document = sample_document(measure)
        assert document['weights'] == [0.25, 0.5, 0.25]
        path = self.write("weighted.json", document)
        np.testing.assert_allclose(load_sample(path).weights, [0.25, 0.5, 0.25])

    def test_uniform_has_no_weights(self):
        measure = EmpiricalMeasure.uniform([uniform_sample(ScalarField.REAL, 3, 1, self.rng)])
        document = sample_document(measure)
        assert 'weights' not in document
        assert document['schema'] == SAMPLE_SCHEMA

    def test_non_orthonormal_frames(self):
        """Frames are orthonormalized on load."""
        path = self.write("raw.json", {
            'schema': SAMPLE_SCHEMA, 'field': 'real', 'm': 3, 'r': 1,
            'subspaces': [[[2.0], [0.0], [0.0]], [[1.0], [1.0], [0.0]]],
        })
        loaded = load_sample(path)
        np.testing.assert_allclose(np.abs(loaded.atoms[1].frame[:, 0]), [2 ** -0.5, 2 ** -0.5, 0.0])

    @pytest.mark.parametrize('document', [
        {'schema': 'grasmle.parameter/1', 'm': 2, 'r': 1, 'subspaces': [[[1.0], [0.0]]]},
        {'schema': SAMPLE_SCHEMA, 'm': 2, 'r': 1, 'subspaces': []},
        {'schema': SAMPLE_SCHEMA, 'm': 2, 'r': 1},
        {'schema': SAMPLE_SCHEMA, 'm': 3, 'r': 1, 'subspaces': [[[1.0], [0.0]]]},
        {'schema': SAMPLE_SCHEMA, 'm': 2, 'r': 1, 'subspaces': [[[0.0], [0.0]]]},
        {'schema': SAMPLE_SCHEMA, 'field': 'quaternion', 'm': 2, 'r': 1, 'subspaces': [[[1.0], [0.0]]]},
        {'schema': SAMPLE_SCHEMA, 'm': 2, 'r': 1, 'subspaces': [[[1.0], [0.0]]], 'weights': [-1.0]},
    ])
    def test_invalid_samples(self, document):
        """Malformed sample documents raise FileFormatError."""
        with pytest.raises(FileFormatError):
            load_sample(self.write("bad.json", document))

    def test_not_json(self):
        path = os.path.join(self.temp_dir, "broken.json")
        with open(path, 'w') as f:
            f.write("{not json")
        with pytest.raises(FileFormatError):
            read_json(path)

    def test_missing_file(self):
        with pytest.raises(FileFormatError):
            read_json(os.path.join(self.temp_dir, "missing.json"))

    def test_write_to_stdout(self, capsys):
        """'-' writes the document to stdout."""
        write_json('-', {'schema': 'x', 'b': 1, 'a': 2})
        assert json.loads(capsys.readouterr().out) == {'schema': 'x', 'b': 1, 'a': 2}


class TestParameterFiles:
    """Test parameter files."""

    def setup_method(self):
        """Set up test fixtures."""
        self.temp_dir = tempfile.mkdtemp()

    def teardown_method(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_round_trip(self):
        sigma = random_parameter(ScalarField.COMPLEX, 3, np.random.default_rng(4))
        path = os.path.join(self.temp_dir, "sigma.json")
        save_parameter(path, sigma)
        raw, loaded = load_parameter(path)
        np.testing.assert_allclose(loaded.matrix, sigma.matrix, atol=1e-14)
        np.testing.assert_array_equal(raw, sigma.matrix)

    def test_printed_matrix_needs_tolerance(self):
        """The stored 4x4 matrix is asymmetric in one entry pair."""
        path = os.path.join(self.temp_dir, "sigma0.json")
        write_json(path, {'schema': 'grasmle.parameter/1', 'field': 'real', 'm': 4, 'matrix': SIGMA0})
        with pytest.raises(FileFormatError):
            load_parameter(path)
        raw, sigma = load_parameter(path, symmetry_tol=1e-3)
        assert raw[1, 2] == 0.76236 and raw[2, 1] == 0.7626
        assert abs(sigma.log_det) < 1e-10
        np.testing.assert_allclose(sigma.matrix, sigma.matrix.T)

    def test_not_positive_definite(self):
        path = os.path.join(self.temp_dir, "bad.json")
        write_json(path, {'schema': 'grasmle.parameter/1', 'matrix': [[1.0, 0.0], [0.0, -1.0]]})
        with pytest.raises(FileFormatError):
            load_parameter(path)


class TestReportDocuments:
    """Test report documents."""

    def setup_method(self):
        """Set up test fixtures."""
        self.temp_dir = tempfile.mkdtemp()
        rng = np.random.default_rng(8)
        self.measure = EmpiricalMeasure.uniform([uniform_sample(ScalarField.REAL, 3, 1, rng) for _ in range(6)])

    def teardown_method(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_fit_report(self):
        """Fit reports carry the estimate, scalar fields and trace."""
        report = fit_fixed_point(self.measure)
        document = report_document(report, hint=check_r1(self.measure), source="sample.json")
        assert document['schema'] == REPORT_SCHEMA
        assert document['converged'] is True
        assert document['sample'] == "sample.json"
        assert document['hint']['status'] == "unique"
        assert document['hint']['witness'] is None
        path = os.path.join(self.temp_dir, "report.json")
        write_json(path, document)
        np.testing.assert_array_equal(load_report_estimate(path).matrix, report.estimate.matrix)

    def test_verdict_with_witness(self):
        sample = EmpiricalMeasure.uniform(self.measure.atoms[:2])
        document = verdict_document(check_r1(sample))
        assert document['status'] == "not_unique"
        assert np.array(document['witness']).shape == (3, 1)

    def test_bound(self):
        """Bounds are written as exact fractions with certificates per s."""
        document = bound_document(4, 1, Fraction(16, 3))
        assert document['schema'] == BOUND_SCHEMA
        assert document['bound'] == "16/3"
        assert 'enumeration' not in document

        document = bound_document(4, 2, Fraction(4), enumerate_B(4, 2))
        assert document['bound'] == "4"
        assert document['enumeration']['values'] == [1, 2, 3, 4]
        assert document['enumeration']['per_s']['2']['lp_vertex_max'] == "4"
        assert document['enumeration']['per_s']['2']['certificates']['4'] == {'1': 4}
        json.dumps(document)

    def test_critical(self):
        summary = {'trials': 10, 'unique': 4, 'not_unique': 6, 'undecided': 0, 'unique_frequency': 0.4}
        document = critical_document(4, 2, 4, ScalarField.REAL, 3, summary)
        assert document['field'] == "real"
        assert document['unique_frequency'] == 0.4

    def test_experiment_report(self):
        sigma = CovarianceParameter.identity(4)
        config = ExperimentConfig(sigma0_raw=np.eye(4), sigma0=sigma, sizes=[10, 20], replications=2)
        summary = pd.DataFrame({'n': [10, 20], 'median_frobenius': [0.5, 0.3]})
        document = experiment_report_document(config, summary, slope=-0.7)
        assert document['schema'] == EXPERIMENT_REPORT_SCHEMA
        assert document['summary'][1] == {'n': 20, 'median_frobenius': 0.3}
        assert document['error_rate_slope'] == -0.7


class TestExperimentConfig:
    """Test experiment configuration loading."""

    def setup_method(self):
        """Set up test fixtures."""
        self.temp_dir = tempfile.mkdtemp()

    def teardown_method(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_shipped_config(self):
        """The shipped config resolves sigma0 relative to its own directory."""
        config = load_experiment_config(CONFIG_DIR / "experiment.json")
        assert config.sizes == [50, 500, 5000]
        assert config.replications == 20
        assert config.r == 2
        assert config.sigma0_raw[1, 2] == 0.76236

    def test_inline_matrix(self):
        path = os.path.join(self.temp_dir, "experiment.json")
        write_json(path, {'schema': 'grasmle.experiment/1', 'sigma0': [[2.0, 0.0], [0.0, 0.5]],
                          'sizes': [5], 'r': 1, 'seed': 3})
        config = load_experiment_config(path)
        np.testing.assert_allclose(config.sigma0.matrix, np.diag([2.0, 0.5]))
        assert (config.seed, config.method) == (3, "fixed-point")

    @pytest.mark.parametrize('changes', [{'sizes': []}, {'sizes': [0]}, {'replications': 0}, {'r': 2}])
    def test_invalid(self, changes):
        path = os.path.join(self.temp_dir, "experiment.json")
        document = {'schema': 'grasmle.experiment/1', 'sigma0': [[2.0, 0.0], [0.0, 0.5]], 'sizes': [5], 'r': 1}
        document.update(changes)
        write_json(path, document)
        with pytest.raises(FileFormatError):
            load_experiment_config(path)
