import math

import mpmath
import numpy as np
import pytest

from chaoskit.core.exceptions import DomainError
from chaoskit.models.ensemble import MeasureFlow, ParticleEnsemble
from chaoskit.models.model_spec import ModelConstants, ModelSpec, zero_drift, zero_pair_diffusion
from chaoskit.services.analysis_service import (
    LLN_BUILTINS, GronwallInput, fit_rate, fluctuation_terms, gronwall_bound, lln_gap, second_moment_curve,
    tanaka_term,
)


def mittag_leffler_half(x, terms=500):
    """sum_n x^n / Gamma(n/2 + 1) in 40-digit arithmetic."""
    mpmath.mp.dps = 40
    x = mpmath.mpf(x)
    return float(mpmath.fsum(x ** n / mpmath.gamma(mpmath.mpf(n) / 2 + 1) for n in range(terms)))


def cloud_drift(x, y):
    return np.asarray(y) + 0.0 * np.asarray(x)


def spread_diffusion(x, y):
    return (np.asarray(y) - np.asarray(x))[..., None]


def sine_drift(x, y):
    return np.sin(np.asarray(y) - np.asarray(x))


def sine_diffusion(x, y):
    return (0.8 * np.sin(np.asarray(y) - np.asarray(x)))[..., None]


def pair_model(b1=cloud_drift, sigma_tilde=None):
    return ModelSpec(
        d=1, n=1, beta=1.0, b0=zero_drift, b1=b1, sigma_tilde=sigma_tilde or zero_pair_diffusion(1),
        constants=ModelConstants(K1=0.0, K2=1.0, R=1.0, Kb=1.0),
    )


class TestGronwall:
    """Generalized Gronwall series"""

    def test_classical_case_is_exponential(self):
        inp = GronwallInput.from_function(lambda t: np.ones_like(t), T=1.0, points=201, C=1.0, theta=1.0)
        bound = gronwall_bound(inp)
        assert bound[-1] == pytest.approx(math.e, rel=1e-8)
        np.testing.assert_allclose(bound, np.exp(inp.grid), rtol=1e-8)

    def test_half_order_kernel(self):
        """theta = 1/2, a = 1: the bound is a Mittag-Leffler function of C Gamma(1/2) sqrt(t)"""
        inp = GronwallInput.from_function(lambda t: np.ones_like(t), T=1.0, points=101, C=1.0, theta=0.5)
        bound = gronwall_bound(inp)
        for j in (25, 50, 100):
            t = inp.grid[j]
            expected = mittag_leffler_half(math.sqrt(math.pi) * math.sqrt(t))
            assert bound[j] == pytest.approx(expected, rel=1e-8)

    def test_zero_constant_returns_forcing(self):
        a = np.linspace(0.5, 2.0, 11)
        inp = GronwallInput(a=a, T=2.0, C=0.0, theta=0.7)
        np.testing.assert_array_equal(gronwall_bound(inp), a)

    def test_linear_forcing_classical(self):
        """a(t) = t, C = 1, theta = 1: u = e^t - 1"""
        inp = GronwallInput.from_function(lambda t: t, T=2.0, points=101, C=1.0, theta=1.0)
        np.testing.assert_allclose(gronwall_bound(inp), np.expm1(inp.grid), rtol=1e-8, atol=1e-14)

    def test_interpolation_on_request(self):
        inp = GronwallInput.from_function(lambda t: np.ones_like(t), T=1.0, points=101, C=1.0, theta=1.0)
        values = gronwall_bound(inp, t_grid=[0.0, 1.0])
        assert values[0] == pytest.approx(1.0)
        assert values[1] == pytest.approx(math.e, rel=1e-8)
        with pytest.raises(DomainError):
            gronwall_bound(inp, t_grid=[1.5])

    def test_monotone_in_constant_and_forcing(self):
        grid = np.linspace(0.0, 2.0, 81)
        forcing = 1.0 + grid
        previous = None
        for C in (0.0, 0.25, 1.0, 2.0):
            bound = gronwall_bound(GronwallInput(a=forcing, T=2.0, C=C, theta=0.5))
            if previous is not None:
                assert np.all(bound >= previous)
            previous = bound
        larger = gronwall_bound(GronwallInput(a=forcing + 0.3 * grid ** 2, T=2.0, C=1.0, theta=0.5))
        assert np.all(larger >= gronwall_bound(GronwallInput(a=forcing, T=2.0, C=1.0, theta=0.5)))

    def test_invalid_inputs(self):
        with pytest.raises(DomainError):
            GronwallInput(a=[1.0, 1.0], T=1.0, C=1.0, theta=0.0)
        with pytest.raises(DomainError):
            GronwallInput(a=[1.0, -1.0], T=1.0, C=1.0, theta=1.0)
        with pytest.raises(DomainError):
            GronwallInput(a=[1.0, 1.0], T=1.0, C=-1.0, theta=1.0)


class TestLawOfLargeNumbers:
    """E |empirical average - integral| ~ N^(-1/2)"""

    def test_uniform_mean_gap(self):
        h, sampler, integral = LLN_BUILTINS["mean-uniform"]
        [(N, mean, stderr)] = lln_gap(h, sampler, [100], replicas=4000, seed=1, integral=integral)
        expected = math.sqrt(2.0 / math.pi) / math.sqrt(12.0 * 100)
        assert N == 100
        assert abs(mean - expected) <= 4.0 * stderr + 1e-4

    def test_constant_function_has_no_gap(self):
        h, sampler, integral = LLN_BUILTINS["constant-uniform"]
        rows = lln_gap(h, sampler, [1, 10], replicas=50, seed=2, integral=integral)
        assert [row[1] for row in rows] == [0.0, 0.0]

    def test_slope_is_minus_one_half(self):
        h, sampler, integral = LLN_BUILTINS["difference-gaussian"]
        sizes = [16, 64, 256, 1024]
        rows = lln_gap(h, sampler, sizes, replicas=2000, seed=3, integral=integral)
        fit = fit_rate(sizes, [row[1] for row in rows], log_x=True)
        assert -0.6 <= fit.slope <= -0.4

    def test_inner_estimate_without_closed_form(self):
        h, sampler, _ = LLN_BUILTINS["mean-uniform"]
        first = lln_gap(h, sampler, [50], replicas=200, seed=4, inner_budget=512)
        second = lln_gap(h, sampler, [50], replicas=200, seed=4, inner_budget=512)
        assert first == second
        assert first[0][1] > 0

    def test_needs_replicas(self):
        h, sampler, integral = LLN_BUILTINS["mean-uniform"]
        with pytest.raises(DomainError):
            lln_gap(h, sampler, [10], replicas=1, seed=0, integral=integral)


class TestFluctuations:
    """Drift and diffusion mismatch between particles and the flow"""

    def test_drift_mismatch(self):
        ensemble = ParticleEnsemble(0.0, [[0.0], [2.0]])
        drift_gap, diffusion_gap = fluctuation_terms(pair_model(), MeasureFlow.frozen([0.0, 0.0]), ensemble, 0.0)
        assert drift_gap == pytest.approx(2.0)
        assert diffusion_gap == 0.0

    def test_matching_flow_has_no_drift_gap(self):
        ensemble = ParticleEnsemble(0.0, [[0.0], [2.0]])
        drift_gap, _ = fluctuation_terms(pair_model(), MeasureFlow.frozen([1.0, 1.0]), ensemble, 0.0)
        assert drift_gap == pytest.approx(0.0, abs=1e-15)

    def test_lipschitz_in_the_ensemble(self, rng):
        """b1 = sin(y - x) has Kb = 1; sigma~ = 0.8 sin(y - x) has Ksigma = 0.64"""
        model = pair_model(b1=sine_drift, sigma_tilde=sine_diffusion)
        Kb, Ksigma = 1.0, 0.64
        flow = MeasureFlow.frozen(rng.standard_normal((40, 1)))
        for _ in range(20):
            x = rng.standard_normal((8, 1))
            x_tilde = x + rng.uniform(0.01, 1.0) * rng.standard_normal((8, 1))
            distance = float(np.sum(np.abs(x - x_tilde)))
            drift, diffusion = fluctuation_terms(model, flow, ParticleEnsemble(0.0, x), 0.0)
            drift_tilde, diffusion_tilde = fluctuation_terms(model, flow, ParticleEnsemble(0.0, x_tilde), 0.0)
            assert abs(drift - drift_tilde) <= 3.0 * Kb * distance + 1e-12
            assert abs(diffusion - diffusion_tilde) <= 6.0 * math.sqrt(2.0) * Ksigma * distance + 1e-12

    def test_time_outside_flow(self):
        flow = MeasureFlow(times=[0.0, 1.0], clouds=np.zeros((2, 2, 1)))
        with pytest.raises(DomainError):
            fluctuation_terms(pair_model(), flow, ParticleEnsemble(0.0, [[0.0]]), 2.0)

    def test_tanaka_term(self):
        """sigma~(x, y) = y - x, particles {0, 2}, flow {0, 0}, x~ = 1: 0.5 (-1 - 1)^2 / 1"""
        model = pair_model(sigma_tilde=spread_diffusion)
        ensemble = ParticleEnsemble(0.0, [[0.0], [2.0]])
        flow = MeasureFlow.frozen([0.0, 0.0])
        assert tanaka_term(model, flow, 0.0, [1.0], ensemble, 0) == pytest.approx(2.0)
        assert tanaka_term(model, flow, 0.0, [0.0], ensemble, 0) == 0.0


class TestMomentsAndRates:
    """Second moments and least-squares rates"""

    def test_second_moment_of_single_cloud(self):
        flow = MeasureFlow(times=[0.0], clouds=np.array([[[1.0], [3.0]]]))
        times, mean, stderr = second_moment_curve(flow)
        assert times.tolist() == [0.0]
        assert mean[0] == pytest.approx(5.0)
        assert stderr[0] == pytest.approx(4.0)

    def test_exponential_rate(self):
        x = np.linspace(0.0, 3.0, 10)
        fit = fit_rate(x, 3.0 * np.exp(-2.0 * x))
        assert fit.slope == pytest.approx(-2.0, rel=1e-12)
        assert fit.intercept == pytest.approx(math.log(3.0), rel=1e-12)
        assert fit.r2 == pytest.approx(1.0)
        assert fit.half_width < 1e-8

    def test_power_rate(self):
        x = np.array([10.0, 100.0, 1000.0])
        fit = fit_rate(x, x ** -0.5, log_x=True)
        assert fit.slope == pytest.approx(-0.5, rel=1e-12)
        assert fit.log_x

    def test_rejects_bad_samples(self):
        with pytest.raises(DomainError):
            fit_rate([1.0, 2.0], [1.0, 2.0])
        with pytest.raises(DomainError):
            fit_rate([1.0, 2.0, 3.0], [1.0, 0.0, 2.0])
