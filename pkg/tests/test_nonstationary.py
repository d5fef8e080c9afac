"""Covariate-model pipeline: regressions, transform, matching, return levels."""

import math

import numpy as np
import pytest

from glme.errors import DegenerateDataError, TransformError
from glme.estimators import fit_lme
from glme.gev import GevParams, gev_sample, return_level
from glme.lmoments import GUMBEL_LMOMENTS, CovMatrix3, sample_lmoments
from glme.nonstationary import (
    NsModel,
    fit_ns_glme,
    fit_ns_lme,
    gev11_design,
    gumbel_transform,
    ns_gld,
    ns_return_level,
    ns_sample,
    robust_location_fit,
    scale_regression,
)
from glme.penalties import AdaptiveBetaRequest, FlatPenalty


class TestNsModel:
    def test_scale_always_positive(self):
        model = NsModel([0.0, -5.0], [-3.0, -2.0], 0.1, gev11_design(10))
        assert np.all(model.sigma_values() > 0)

    def test_coefficient_length_checked(self):
        with pytest.raises(ValueError, match="length"):
            NsModel([0.0], [1.0, 0.0], 0.1, gev11_design(5))

    def test_params_at_bounds(self):
        model = NsModel([0.0, 1.0], [0.0, 0.0], 0.1, gev11_design(5))
        assert model.params_at(4).mu == pytest.approx(5.0)
        with pytest.raises(ValueError, match="t_index"):
            model.params_at(5)


class TestRobustLocationFit:
    def test_noiseless_line_is_fixed_point(self):
        t = np.arange(1.0, 31.0)
        z = 2.0 + 0.5 * t
        coef = robust_location_fit(z, t.reshape(-1, 1))
        np.testing.assert_allclose(coef, [2.0, 0.5], atol=1e-10)

    def test_outlier_resistance(self):
        rng = np.random.default_rng(15)
        t = np.arange(1.0, 61.0)
        z = 10.0 + 0.3 * t + rng.normal(0.0, 1.0, size=60)
        z[45] += 400.0  # gross outlier
        X = t.reshape(-1, 1)
        robust = robust_location_fit(z, X)
        ols = robust_location_fit(z, X, method="ols")
        assert abs(robust[1] - 0.3) < abs(ols[1] - 0.3)

    def test_rank_deficiency(self):
        t = np.arange(1.0, 21.0)
        X = np.column_stack([t, 2.0 * t])
        with pytest.raises(ValueError, match="rank"):
            robust_location_fit(np.ones(20), X)

    def test_unknown_method(self):
        with pytest.raises(ValueError, match="method"):
            robust_location_fit(np.arange(10.0), np.arange(10.0).reshape(-1, 1), method="huber")


class TestScaleRegression:
    def test_homoskedastic_slope_near_zero(self):
        X = np.linspace(1.0, 40.0, 2000).reshape(-1, 1)
        truth = NsModel([5.0, 0.2], [0.7, 0.0], -0.1, X)
        z = ns_sample(truth, seed=3)
        coef = scale_regression(z, X, np.array([5.0, 0.2]))
        design = np.column_stack([np.ones(z.size), X[:, 0]])
        resid = np.log(np.abs(z - design @ np.array([5.0, 0.2]))) - design @ coef
        se = math.sqrt(
            (resid @ resid / (z.size - 2)) / np.sum((X[:, 0] - X[:, 0].mean()) ** 2)
        )
        assert abs(coef[1]) < 2.0 * se

    def test_recovers_slope_on_wide_range(self):
        # the exponential scale trend spans dozens of orders of magnitude;
        # the log regression still sees it cleanly
        X = np.arange(1.0, 10_001.0).reshape(-1, 1)
        truth = NsModel([0.0, -0.1], [1.0, 0.02], -0.2, X)
        z = ns_sample(truth, seed=13)
        coef = scale_regression(z, X, np.array([0.0, -0.1]))
        assert coef[1] == pytest.approx(0.02, abs=0.005)

    def test_zero_residuals_rejected(self):
        t = np.arange(1.0, 21.0)
        z = 1.0 + 2.0 * t
        with pytest.raises(DegenerateDataError):
            scale_regression(z, t.reshape(-1, 1), np.array([1.0, 2.0]))


class TestGumbelTransform:
    def test_true_parameters_give_gumbel_lmoments(self):
        X = np.zeros((100_000, 1))
        model = NsModel([5.0, 0.0], [0.5, 0.0], -0.25, X)
        zt = gumbel_transform(ns_sample(model, seed=1), model)
        lm = sample_lmoments(zt).as_array()
        np.testing.assert_allclose(lm, GUMBEL_LMOMENTS, rtol=0.01)

    def test_identity_at_zero_shape(self):
        X = gev11_design(50)
        model = NsModel([0.0, 0.0], [0.0, 0.0], 0.0, X)
        z = np.linspace(-2.0, 5.0, 50)
        np.testing.assert_allclose(gumbel_transform(z, model), z, rtol=1e-12)

    def test_strictly_decreasing_in_location_intercept(self):
        X = gev11_design(30)
        base = NsModel([10.0, 0.1], [1.0, 0.01], -0.3, X)
        z = ns_sample(base, seed=2)
        shifted = NsModel([10.5, 0.1], [1.0, 0.01], -0.3, X)
        assert np.all(gumbel_transform(z, shifted) < gumbel_transform(z, base))

    def test_support_violation_names_index(self):
        X = gev11_design(5)
        model = NsModel([0.0, 0.0], [0.0, 0.0], -0.5, X)
        z = np.array([0.0, 1.0, 2.5, 1.0, 0.0])  # support needs z > -2
        with pytest.raises(TransformError) as err:
            gumbel_transform(z - 3.0, model)
        assert err.value.index == 0


class TestNsGld:
    def test_zero_when_lmoments_match(self):
        X = gev11_design(40)
        truth = NsModel([0.0, -0.1], [1.0, 0.02], -0.2, X)
        z = ns_sample(truth, seed=7)
        fit = fit_ns_lme(z, X, seed=7)
        zt = gumbel_transform(z, fit.model)
        v = CovMatrix3(np.eye(3), "exact")
        assert ns_gld(zt, v) < 1e-15

    def test_identity_weight_is_squared_distance(self):
        rng = np.random.default_rng(0)
        zt = rng.gumbel(size=200)
        v = CovMatrix3(np.eye(3), "exact")
        want = float(
            np.sum((sample_lmoments(zt).as_array() - np.array(GUMBEL_LMOMENTS)) ** 2)
        )
        assert ns_gld(zt, v) == pytest.approx(want, rel=1e-12)
        assert ns_gld(zt, v) >= 0


class TestFitNsLme:
    def test_converges_to_exact_match(self):
        X = gev11_design(40)
        truth = NsModel([0.0, -0.1], [1.0, 0.02], -0.2, X)
        fit = fit_ns_lme(ns_sample(truth, seed=7), X, seed=7)
        assert fit.converged
        assert fit.objective_value < 1e-8

    def test_consistency_without_scale_trend(self):
        # location trend with constant scale: every coefficient is recovered
        X = np.linspace(1.0, 40.0, 4000).reshape(-1, 1)
        truth = NsModel([0.0, -0.1], [1.0, 0.0], -0.2, X)
        fit = fit_ns_lme(ns_sample(truth, seed=12), X, seed=12)
        m = fit.model
        assert m.mu_coef[0] == pytest.approx(0.0, abs=0.3)
        assert m.mu_coef[1] == pytest.approx(-0.1, rel=0.07)
        assert m.sigma_coef[0] == pytest.approx(1.0, rel=0.07)
        assert m.sigma_coef[1] == pytest.approx(0.0, abs=0.005)
        assert m.xi == pytest.approx(-0.2, abs=0.05)

    def test_stationary_data_matches_stationary_fit(self):
        params = GevParams(50.0, 10.0, -0.15)
        z = gev_sample(params, 2000, seed=20)
        fit = fit_ns_lme(z, gev11_design(2000), seed=20)
        stat = fit_lme(z).params
        m = fit.model
        assert abs(m.mu_coef[1]) < 0.01
        assert abs(m.sigma_coef[1]) < 1e-4
        assert m.mu_coef[0] == pytest.approx(stat.mu, rel=0.05)
        assert math.exp(m.sigma_coef[0]) == pytest.approx(stat.sigma, rel=0.05)
        assert m.xi == pytest.approx(stat.xi, abs=0.05)

    def test_slopes_are_stage_outputs(self):
        X = gev11_design(60)
        truth = NsModel([3.0, 0.2], [0.5, 0.01], -0.1, X)
        z = ns_sample(truth, seed=4)
        fit = fit_ns_lme(z, X, seed=4)
        assert fit.model.mu_coef[1] == fit.stage_diagnostics.location_coef[1]
        assert fit.model.sigma_coef[1] == fit.stage_diagnostics.scale_coef[1]

    def test_shift_equivariance(self):
        X = gev11_design(60)
        truth = NsModel([3.0, 0.2], [0.5, 0.01], -0.1, X)
        z = ns_sample(truth, seed=4)
        a = fit_ns_lme(z, X, seed=4).model
        b = fit_ns_lme(z + 100.0, X, seed=4).model
        assert b.mu_coef[0] - a.mu_coef[0] == pytest.approx(100.0, abs=1e-6)
        assert b.mu_coef[1] == pytest.approx(a.mu_coef[1], abs=1e-6)
        assert b.sigma_coef[0] == pytest.approx(a.sigma_coef[0], abs=1e-6)
        assert b.xi == pytest.approx(a.xi, abs=1e-6)


class TestFitNsGlme:
    def test_flat_penalty_recovers_lme(self):
        X = gev11_design(50)
        truth = NsModel([0.0, -0.1], [1.0, 0.02], -0.2, X)
        z = ns_sample(truth, seed=9)
        lme = fit_ns_lme(z, X, seed=9).model
        flat = fit_ns_glme(z, X, FlatPenalty(), seed=9).model
        assert flat.mu_coef[0] == pytest.approx(lme.mu_coef[0], abs=1e-5)
        assert flat.sigma_coef[0] == pytest.approx(lme.sigma_coef[0], abs=1e-5)
        assert flat.xi == pytest.approx(lme.xi, abs=1e-5)

    def test_adaptive_penalty_moves_shape_down(self):
        X = gev11_design(40)
        truth = NsModel([0.0, -0.1], [1.0, 0.02], -0.3, X)
        z = ns_sample(truth, seed=18)
        lme = fit_ns_lme(z, X, seed=18).model
        assert lme.xi < 0
        glme = fit_ns_glme(z, X, AdaptiveBetaRequest(5), seed=18).model
        assert glme.xi < lme.xi

    def test_objective_descends_from_lme_point(self):
        X = gev11_design(40)
        truth = NsModel([0.0, -0.1], [1.0, 0.02], -0.3, X)
        z = ns_sample(truth, seed=18)
        penalty = AdaptiveBetaRequest(5)
        glme = fit_ns_glme(z, X, penalty, seed=18)
        lme = fit_ns_lme(z, X, seed=18)
        built = penalty.build(lme.model.xi)
        # evaluate the glme objective at the lme solution
        from glme.lmoments import gumbel_lmoment_cov
        from glme.nonstationary import _transformed_lmoments

        vtilde = gumbel_lmoment_cov(z.size, B=1000, seed=18)
        const = 1.5 * math.log(2.0 * math.pi) + 0.5 * vtilde.log_det
        lm = _transformed_lmoments(
            z, X.astype(float), lme.model.mu_coef[1:], lme.model.sigma_coef[1:],
            np.array([lme.model.mu_coef[0], lme.model.sigma_coef[0], lme.model.xi]),
        )
        r = lm - np.array(GUMBEL_LMOMENTS)
        at_lme = 0.5 * float(r @ vtilde.solve(r)) + built.neg_log(lme.model.xi) + const
        assert glme.objective_value <= at_lme + 1e-10

    def test_slopes_bit_identical_to_lme(self):
        X = gev11_design(40)
        truth = NsModel([0.0, -0.1], [1.0, 0.02], -0.3, X)
        z = ns_sample(truth, seed=18)
        lme = fit_ns_lme(z, X, seed=18).model
        glme = fit_ns_glme(z, X, AdaptiveBetaRequest(5), seed=18).model
        assert glme.mu_coef[1] == lme.mu_coef[1]
        assert glme.sigma_coef[1] == lme.sigma_coef[1]


class TestNsReturnLevel:
    def test_zero_slopes_match_stationary(self):
        X = gev11_design(30)
        model = NsModel([40.0, 0.0], [math.log(9.0), 0.0], -0.2, X)
        params = GevParams(40.0, 9.0, -0.2)
        for t in (0, 10, 29):
            assert ns_return_level(model, 100.0, t) == pytest.approx(
                return_level(params, 100.0), rel=1e-12
            )

    def test_rising_location_raises_levels(self):
        X = gev11_design(30)
        model = NsModel([40.0, 1.0], [math.log(9.0), 0.0], -0.2, X)
        levels = [ns_return_level(model, 100.0, t) for t in range(30)]
        assert np.all(np.diff(levels) > 0)

    def test_index_bounds(self):
        X = gev11_design(10)
        model = NsModel([0.0, 0.0], [0.0, 0.0], 0.0, X)
        with pytest.raises(ValueError, match="t_index"):
            ns_return_level(model, 100.0, 10)


class TestRainfallSeries:
    """Reference fits of the rainfall fixture; skip until it is installed."""

    def test_lme_row(self, phliu):
        fit = fit_ns_lme(phliu.values, phliu.time_design(), seed=42)
        m = fit.model
        assert m.mu_coef[0] == pytest.approx(121.26, rel=0.01)
        assert m.mu_coef[1] == pytest.approx(0.936, abs=0.02)
        assert m.sigma_coef[0] == pytest.approx(2.95, abs=0.05)
        assert m.sigma_coef[1] == pytest.approx(0.028, abs=0.005)
        assert m.xi == pytest.approx(-0.064, abs=0.02)
        assert ns_return_level(m, 100.0, m.n_obs - 1) == pytest.approx(478.0, rel=0.01)

    def test_adaptive_choice_five_row(self, phliu):
        fit = fit_ns_glme(phliu.values, phliu.time_design(), AdaptiveBetaRequest(5), seed=42)
        m = fit.model
        assert m.xi == pytest.approx(-0.11, abs=0.015)
        assert ns_return_level(m, 100.0, m.n_obs - 1) == pytest.approx(517.0, rel=0.015)

    def test_per_year_series_exceeds_plain_fit(self, phliu):
        # a lower shape with identical slopes lifts the whole curve
        z, X = phliu.values, phliu.time_design()
        lme = fit_ns_lme(z, X, seed=42).model
        glme = fit_ns_glme(z, X, AdaptiveBetaRequest(5), seed=42).model
        for t in range(lme.n_obs):
            assert ns_return_level(glme, 40.0, t) > ns_return_level(lme, 40.0, t)


class TestNsSample:
    def test_deterministic_and_obeys_trend(self):
        X = gev11_design(2000)
        model = NsModel([0.0, 0.5], [0.0, 0.0], -0.1, X)
        a = ns_sample(model, seed=6)
        b = ns_sample(model, seed=6)
        np.testing.assert_array_equal(a, b)
        first, last = a[:500], a[-500:]
        assert last.mean() - first.mean() == pytest.approx(0.5 * 1500.0, rel=0.05)
