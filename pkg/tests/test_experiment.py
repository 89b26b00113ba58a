import csv
import math
import os

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from arfima_misspec.config import settings
from arfima_misspec.exceptions import CaseMismatch, ExperimentFailure, NoConvergence
from arfima_misspec.models.arfima import EstimatorKind
from arfima_misspec.models.results import ExperimentConfig
from arfima_misspec.services import experiment
from arfima_misspec.services.experiment import (
    bias_mse_to_true,
    emit_report,
    relative_efficiency,
    run_monte_carlo,
    standardized_samples,
    summarize,
)
from arfima_misspec.services.pseudo_true import example_pair
from arfima_misspec.services.storage_service import load_report

ALL_METHODS = list(EstimatorKind)


@pytest.fixture(autouse=True)
def single_process(monkeypatch):
    monkeypatch.setattr(settings, "THREADS", 1)


@pytest.fixture(scope="module")
def small_report(correct_pair):
    cfg = ExperimentConfig(pair=correct_pair, n_list=[64], replications=40, seed=7, law_samples=2000)
    return run_monte_carlo(cfg)


def _read(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


class TestSummaries:
    def test_summarize_by_hand(self):
        bias, variance, mse = summarize([0.1, 0.3], 0.0)
        assert_allclose([bias, variance, mse], [0.2, 0.01, 0.05])

    def test_mse_identity(self, small_report):
        for cell in small_report.cells:
            assert abs(cell.mse - (cell.bias ** 2 + cell.variance)) < 1e-12

    def test_paired_design(self, small_report):
        assert len(small_report.cells) == len(ALL_METHODS)
        for cell in small_report.cells:
            assert cell.failures == 0
            assert len(cell.d_hat_samples) == 40

    def test_fml_relative_efficiency_is_one(self, small_report):
        cell = small_report.cell(EstimatorKind.FML, 64)
        assert cell.rel_eff_vs_fml == 1.0
        assert relative_efficiency(small_report, EstimatorKind.CSS, EstimatorKind.FML, 64) > 0

    def test_correct_specification_is_case_three(self, small_report):
        assert abs(small_report.pseudo_true.d_star) < 1e-8
        for cell in small_report.cells:
            assert cell.limit_law.case == 3
            assert len(cell.standardized_samples) == 40

    def test_two_replications_complete(self, correct_pair):
        cfg = ExperimentConfig(
            pair=correct_pair, methods=[EstimatorKind.FML, EstimatorKind.CSS], n_list=[40], replications=2
        )
        report = run_monte_carlo(cfg)
        for cell in report.cells:
            assert abs(cell.mse - (cell.bias ** 2 + cell.variance)) < 1e-12


class TestTrueParameterTables:
    def test_zero_dstar_leaves_tables_unchanged(self, small_report):
        converted = bias_mse_to_true(small_report)
        for cell, row in zip(small_report.cells, converted):
            assert row.method == cell.method
            assert_allclose(row.bias, cell.bias, atol=1e-8)
            assert_allclose(row.mse, cell.mse, atol=1e-8)

    def test_conversion_matches_raw_samples(self, small_report):
        # Shift d* artificially; the identity holds for any d*.
        report = small_report.model_copy(deep=True)
        dstar = 0.17
        report.pseudo_true.d_star = dstar
        d0 = report.pseudo_true.eta1.d + dstar
        for cell, row in zip(report.cells, bias_mse_to_true(report)):
            samples = np.asarray(cell.d_hat_samples)
            assert_allclose(row.bias, np.mean(samples - d0), atol=1e-12)
            assert_allclose(row.mse, math.fsum((samples - d0) ** 2) / samples.size, atol=1e-12)


class TestStandardization:
    def test_case_three_is_root_n(self, small_report):
        cell = small_report.cell(EstimatorKind.CSS, 64)
        expected = 8.0 * (np.asarray(cell.d_hat_samples) - small_report.pseudo_true.eta1.d)
        assert_allclose(standardized_samples(small_report, cell.limit_law, 64), expected, atol=1e-12)

    def test_wrong_sample_size(self, small_report):
        law = small_report.cell(EstimatorKind.FML, 64).limit_law
        with pytest.raises(CaseMismatch):
            standardized_samples(small_report, law, 128)

    def test_law_from_another_pair(self, small_report, short_range_solution):
        law = small_report.cell(EstimatorKind.FML, 64).limit_law.model_copy(
            update={"dstar": short_range_solution.d_star}
        )
        with pytest.raises(CaseMismatch):
            standardized_samples(small_report, law, 64)


class TestFailures:
    def test_failure_threshold_aborts(self, monkeypatch, correct_pair):
        real = experiment.estimate

        def flaky(kind, family, y, **kwargs):
            if kind == EstimatorKind.CSS:
                raise NoConvergence("forced")
            return real(kind, family, y, **kwargs)

        monkeypatch.setattr(experiment, "estimate", flaky)
        cfg = ExperimentConfig(
            pair=correct_pair, methods=[EstimatorKind.FML, EstimatorKind.CSS], n_list=[40], replications=3
        )
        with pytest.raises(ExperimentFailure):
            run_monte_carlo(cfg)

    def test_series_mutation_is_detected(self, monkeypatch, correct_pair):
        real = experiment.estimate

        def careless(kind, family, y, **kwargs):
            result = real(kind, family, y, **kwargs)
            y[0] += 1.0
            return result

        monkeypatch.setattr(experiment, "estimate", careless)
        cfg = ExperimentConfig(pair=correct_pair, methods=[EstimatorKind.FML], n_list=[40], replications=2)
        with pytest.raises(ExperimentFailure):
            run_monte_carlo(cfg)


class TestEmitReport:
    def test_written_files(self, small_report, tmp_path):
        written = emit_report(small_report, str(tmp_path))
        names = sorted(os.path.basename(path) for path in written)
        assert names == sorted(
            ["report.json", "table_d1.csv", "table_d0.csv", "rel_eff_vs_fml.csv", "rel_eff_css.csv", "density_n64.csv"]
        )

    def test_table_layout(self, small_report, tmp_path):
        emit_report(small_report, str(tmp_path), fmt="csv")
        rows = _read(tmp_path / "table_d1.csv")
        assert rows[0][:3] == ["d_star", "theta0", "n"]
        assert rows[0][3:5] == ["Bias_FML", "MSE_FML"]
        assert len(rows) == 2
        assert len(rows[1]) == 3 + 2 * len(ALL_METHODS)
        cell = small_report.cell(EstimatorKind.FML, 64)
        assert float(rows[1][3]) == cell.bias
        assert float(rows[1][4]) == cell.mse

    def test_json_round_trip(self, small_report, tmp_path):
        emit_report(small_report, str(tmp_path), fmt="json")
        assert not (tmp_path / "table_d1.csv").exists()
        assert load_report(str(tmp_path / "report.json")) == small_report

    def test_density_table(self, small_report, tmp_path):
        emit_report(small_report, str(tmp_path), fmt="csv")
        rows = _read(tmp_path / "density_n64.csv")
        assert rows[0] == ["x", "FML", "WHITTLE", "TML", "CSS", "Limit"]
        values = np.array(rows[1:], dtype=float)
        assert values.shape == (201, 6)
        for column in range(1, 6):
            assert abs(integrate.trapezoid(values[:, column], values[:, 0]) - 1.0) < 0.02


@pytest.mark.slow
class TestPublishedDesign:
    """Reproduction runs at R=1000; minutes on a desktop."""

    @pytest.fixture(scope="class")
    def published_report(self):
        cfg = ExperimentConfig(pair=example_pair(-0.7), n_list=[100, 500], replications=1000, seed=2024)
        return run_monte_carlo(cfg)

    def test_css_row(self, published_report):
        cell = published_report.cell(EstimatorKind.CSS, 500)
        assert abs(cell.bias - -0.0798) < 0.15 * 0.0798
        assert abs(cell.mse - 0.0097) < 0.15 * 0.0097

    def test_estimator_ordering(self, published_report):
        for n in (100, 500):
            mse = {kind: published_report.cell(kind, n).mse for kind in ALL_METHODS}
            assert mse[EstimatorKind.CSS] < mse[EstimatorKind.TML] < mse[EstimatorKind.WHITTLE] < mse[EstimatorKind.FML]
            assert 0.30 <= published_report.cell(EstimatorKind.CSS, n).rel_eff_vs_fml <= 0.55

    def test_truncation_points(self):
        cfg = ExperimentConfig(
            pair=example_pair(-0.7), methods=[EstimatorKind.FML], n_list=[100, 200, 500, 1000], replications=1000,
            seed=2024, law_samples=100,
        )
        report = run_monte_carlo(cfg)
        for n, expected in ((100, 36), (200, 75), (500, 162), (1000, 230)):
            assert abs(report.truncation_s[n] - expected) <= 0.15 * expected


def _median_spread(report, n):
    cells = [report.cell(kind, n) for kind in ALL_METHODS]
    assert all(cell.failures == 0 for cell in cells)
    draws = np.array([cell.d_hat_samples for cell in cells])
    return float(np.median(draws.max(axis=0) - draws.min(axis=0)))


@pytest.mark.slow
class TestLargeSampleAgreement:
    def test_estimators_agree_as_n_grows(self):
        cfg = ExperimentConfig(
            pair=example_pair(-0.3), n_list=[500, 2000], replications=200, seed=11, law_samples=100,
            report_standardized=False,
        )
        report = run_monte_carlo(cfg)
        small, large = _median_spread(report, 500), _median_spread(report, 2000)
        assert large < 0.03
        assert large <= 0.7 * small


@pytest.mark.slow
class TestCorrectSpecificationBias:
    def test_bias_is_small_and_tml_beats_css(self, correct_pair):
        cfg = ExperimentConfig(
            pair=correct_pair, n_list=[1000], replications=1000, seed=5, law_samples=100, report_standardized=False
        )
        report = run_monte_carlo(cfg)
        for kind in ALL_METHODS:
            cell = report.cell(kind, 1000)
            se = math.sqrt(cell.variance / cfg.replications)
            assert abs(cell.bias) < 0.01 + 2 * se
        tml = report.cell(EstimatorKind.TML, 1000)
        css = report.cell(EstimatorKind.CSS, 1000)
        assert abs(tml.bias) <= abs(css.bias) + 2 * math.sqrt(tml.variance / cfg.replications)
