import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import linalg

from arfima_misspec.exceptions import NoConvergence
from arfima_misspec.models.arfima import ArfimaSpec, EstimatorKind, EtaVector, FamilySpec, SimulationPlan
from arfima_misspec.services import estimators
from arfima_misspec.services.arfima_model import autocovariance
from arfima_misspec.services.estimators import (
    css_objective,
    css_residuals,
    durbin_levinson,
    estimate,
    fml_objective,
    periodogram,
    tml_objective,
    whittle_objective,
    whittle_sigma2,
)
from arfima_misspec.services.simulate import simulate_gaussian

WHITE = FamilySpec()


@pytest.fixture(scope="module")
def fractional_series():
    plan = SimulationPlan(spec=ArfimaSpec(p=0, d=0.2, q=0), n=1000, seed=17)
    return simulate_gaussian(plan, 0)


class TestPeriodogram:
    def test_zeros(self):
        assert_allclose(periodogram(np.zeros(16)), np.zeros(8))

    def test_alternating_series(self):
        assert_allclose(periodogram(np.array([1.0, -1.0, 1.0, -1.0])), [0.0, 2.0 / np.pi], atol=1e-15)

    def test_brute_force_dft(self, rng):
        y = rng.standard_normal(37)
        t = np.arange(1, 38)
        lam = 2 * np.pi * np.arange(1, 19) / 37
        dft = np.exp(-1j * np.outer(lam, t)) @ y
        assert_allclose(periodogram(y), np.abs(dft) ** 2 / (2 * np.pi * 37), rtol=1e-10)

    def test_parseval(self, rng):
        n = 128
        y = rng.standard_normal(n)
        I = periodogram(y)
        mean_term = (2 * np.pi / n) * n * y.mean() ** 2 / (2 * np.pi)
        total = (2 * np.pi / n) * (I[-1] + 2 * I[:-1].sum()) + mean_term
        assert_allclose(total, np.mean(y ** 2), rtol=1e-10)

    def test_needs_two_observations(self):
        with pytest.raises(ValueError):
            periodogram(np.ones(1))


class TestObjectives:
    def test_fml_flat_model(self, rng):
        I = rng.uniform(size=10)
        assert_allclose(fml_objective(EtaVector(d=0.0), WHITE, I), 2 * np.pi / 20 * I.sum())

    def test_fml_linear_in_periodogram(self, rng):
        I = rng.uniform(size=10)
        eta = EtaVector(d=0.2)
        assert_allclose(fml_objective(eta, WHITE, 3.0 * I), 3.0 * fml_objective(eta, WHITE, I))

    def test_fml_two_term_hand_sum(self):
        I = np.array([0.5, 2.0])
        # n = 4: lam = pi/2, pi; f1 = (2 sin(lam/2))^-0.4
        f1 = np.array([np.sqrt(2.0) ** -0.4, 2.0 ** -0.4])
        assert_allclose(fml_objective(EtaVector(d=0.2), WHITE, I), np.pi / 2 * np.sum(I / f1))

    def test_whittle_identity(self, rng):
        I = rng.uniform(size=25)
        eta, sigma2 = EtaVector(d=0.15), 1.7
        lam = 2 * np.pi * np.arange(1, 26) / 50
        f1 = (2 * np.sin(lam / 2)) ** -0.3
        log_term = 4.0 / 50 * np.sum(np.log(sigma2 * f1 / (2 * np.pi)))
        expected = log_term + 4.0 / sigma2 * fml_objective(eta, WHITE, I)
        assert_allclose(whittle_objective(eta, sigma2, WHITE, I), expected, rtol=1e-12)

    def test_whittle_concentration(self, rng):
        I = rng.uniform(size=25)
        eta = EtaVector(d=0.1, beta=(0.3,))
        family = FamilySpec(p=1, q=0)
        sigma2 = whittle_sigma2(eta, family, I)
        assert_allclose(sigma2, 2 * fml_objective(eta, family, I))
        best = whittle_objective(eta, sigma2, family, I)
        assert best < whittle_objective(eta, 1.05 * sigma2, family, I)
        assert best < whittle_objective(eta, 0.95 * sigma2, family, I)

    def test_whittle_concentrated_value(self, rng):
        I = rng.uniform(size=25)
        eta = EtaVector(d=0.0)
        sigma2 = whittle_sigma2(eta, WHITE, I)
        assert_allclose(whittle_objective(eta, sigma2, WHITE, I), 2 * np.log(sigma2 / (2 * np.pi)) + 2, rtol=1e-12)

    def test_tml_white_noise(self, rng):
        y = rng.standard_normal(40)
        assert_allclose(tml_objective(EtaVector(d=0.0), 1.0, WHITE, y), np.mean(y ** 2), atol=1e-12)

    def test_durbin_levinson_matches_dense_cholesky(self, rng):
        spec = ArfimaSpec(p=1, d=0.3, q=1, phi=[-0.4], theta=[0.3])
        y = rng.standard_normal(50)
        gamma = autocovariance(spec, 49)
        logdet, quad = durbin_levinson(gamma, y)
        factor = linalg.cho_factor(linalg.toeplitz(gamma))
        assert_allclose(logdet, 2 * np.sum(np.log(np.diag(factor[0]))), rtol=1e-8)
        assert_allclose(quad, y @ linalg.cho_solve(factor, y), rtol=1e-8)

    def test_css_white_noise(self, rng):
        y = rng.standard_normal(30)
        assert_allclose(css_objective(EtaVector(d=0.0), WHITE, y), np.mean(y ** 2))

    def test_css_hand_residuals(self):
        d = 0.4
        e = css_residuals(EtaVector(d=d), WHITE, np.array([1.0, 0.0, 0.0]))
        assert_allclose(e, [1.0, -d, -d * (1 - d) / 2])

    def test_css_quadratic_scaling(self, rng):
        y = rng.standard_normal(30)
        eta = EtaVector(d=0.2, beta=(0.3,))
        family = FamilySpec(p=0, q=1)
        assert_allclose(css_objective(eta, family, 2 * y), 4 * css_objective(eta, family, y))


class TestEstimate:
    @pytest.mark.parametrize("kind", list(EstimatorKind))
    def test_correct_specification_recovers_d(self, kind, fractional_series):
        result = estimate(kind, WHITE, fractional_series)
        assert result.converged
        assert result.kind == kind
        assert abs(result.eta_hat.d - 0.2) < 0.08
        assert result.sigma2_hat > 0

    @pytest.mark.parametrize("kind", [EstimatorKind.FML, EstimatorKind.CSS])
    def test_argmin_invariant_to_scale(self, kind, fractional_series):
        base = estimate(kind, WHITE, fractional_series[:300])
        scaled = estimate(kind, WHITE, 3.0 * fractional_series[:300])
        assert abs(base.eta_hat.d - scaled.eta_hat.d) < 1e-4

    def test_fitted_arma_part_is_stationary(self, fractional_series):
        result = estimate(EstimatorKind.WHITTLE, FamilySpec(p=1, q=0), fractional_series[:400], n_starts=3)
        spec = FamilySpec(p=1, q=0).to_spec(result.eta_hat)
        assert abs(spec.phi[0]) < 1

    def test_short_series_rejected(self):
        with pytest.raises(ValueError):
            estimate(EstimatorKind.FML, WHITE, np.ones(10))

    def test_no_convergence(self, fractional_series):
        with pytest.raises(NoConvergence):
            estimate(EstimatorKind.FML, WHITE, fractional_series[:100], maxiter=1)

    def test_counts_converged_starts(self, monkeypatch, fractional_series):
        real = estimators.minimize
        calls = []

        def first_start_stalls(*args, **kwargs):
            result = real(*args, **kwargs)
            calls.append(result)
            if len(calls) == 1:
                result.success = False
            return result

        monkeypatch.setattr(estimators, "minimize", first_start_stalls)
        result = estimate(EstimatorKind.CSS, WHITE, fractional_series[:200], n_starts=4)
        assert result.restarts_used == 4
        assert result.converged_starts == sum(r.success for r in calls)
        assert result.converged_starts < 4

    def test_css_variance_is_mean_squared_residual(self, fractional_series):
        result = estimate(EstimatorKind.CSS, WHITE, fractional_series[:300])
        assert_allclose(result.sigma2_hat, css_objective(result.eta_hat, WHITE, fractional_series[:300]))
