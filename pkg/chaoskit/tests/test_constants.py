import math

import mpmath
import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.special import gammaln

from chaoskit.core.exceptions import DivergenceError, DomainError
from chaoskit.models.families import linear_model
from chaoskit.models.profile import DissipativityProfile
from chaoskit.schemas.model import SigmaParams
from chaoskit.schemas.reports import ContractionConstants
from chaoskit.services.constants_service import (
    check_theorem_hypotheses, compute_delta, compute_kappa0, constants_report, contraction_constants,
    contraction_window, eval_f, eval_G, f_function,
)

# delta = c_E = 1 and beta = 1, K2 = 2: the setting of the linear model with a = 2
UNIT = ContractionConstants(delta=1.0, c_E=1.0, lambda0=2.0, beta=1.0, K2=2.0)


def g_oracle(a, t, cG=1.0, d=1, consts=UNIT, terms=200):
    """Truncated series in 40-digit arithmetic."""
    mpmath.mp.dps = 40
    a, t = mpmath.mpf(a), mpmath.mpf(t)
    x = 3 * mpmath.sqrt(2 * d) * cG * max(mpmath.mpf(1), mpmath.sqrt(t)) * mpmath.sqrt(mpmath.pi) * mpmath.sqrt(t) * a
    series = mpmath.fsum(2 * consts.c_E * x ** n / (n * mpmath.gamma(mpmath.mpf(n) / 2)) for n in range(1, terms + 1))
    rate = 2 * consts.beta / consts.delta - consts.K2 * consts.delta * a / (2 * consts.beta)
    return series + consts.c_E * mpmath.exp(-rate * t)


def g_on_grid(a, ts, consts=UNIT, terms=200):
    """Vectorized G(a, .) for the kappa0 grid scan."""
    x = 3.0 * math.sqrt(2.0) * np.maximum(1.0, np.sqrt(ts)) * math.sqrt(math.pi) * np.sqrt(ts) * a
    n = np.arange(1, terms + 1)[:, None]
    logs = math.log(2.0 * consts.c_E) + n * np.log(x)[None, :] - np.log(n) - gammaln(0.5 * n)
    rate = 2.0 * consts.beta / consts.delta - consts.K2 * consts.delta * a / (2.0 * consts.beta)
    return np.exp(logs).sum(axis=0) + consts.c_E * np.exp(-rate * ts)


class TestDelta:
    """delta, c_E and lambda0"""

    def test_linear_override_unit_constants(self):
        """gamma(v) = -2v, beta = 1: delta = c_E = 1, lambda0 = 2"""
        consts = contraction_constants(linear_model(a=2.0))
        assert consts.delta == pytest.approx(1.0, rel=1e-6)
        assert consts.c_E == pytest.approx(1.0, rel=1e-6)
        assert consts.lambda0 == pytest.approx(2.0, rel=1e-6)

    def test_interaction_lowers_lambda0(self):
        sigma = SigmaParams(kind="constant", scale=0.2)
        consts = contraction_constants(linear_model(a=2.0, kappa=0.3, sigma=sigma))
        assert consts.Kb == pytest.approx(0.3)
        assert consts.Ksigma == pytest.approx(0.04)
        assert consts.lambda0 == pytest.approx(2.0 - 0.34, rel=1e-6)

    def test_half_beta(self):
        """gamma(v) = -v, beta = 1/2"""
        result = compute_delta(DissipativityProfile.linear(1.0), 0.5)
        assert result.delta == pytest.approx(1.0, rel=1e-6)
        assert result.tail == "truncated"

    def test_piecewise_profile_against_trapezoid(self):
        profile = DissipativityProfile.piecewise(1.0, 3.0, 1.0)
        s = np.linspace(0.0, 40.0, 800001)
        expected = trapezoid(s * np.exp(profile.antiderivative(s) / 2.0), s)
        result = compute_delta(profile, 1.0)
        assert result.delta == pytest.approx(expected, rel=1e-8)
        assert result.tail == "closed-form"
        assert result.truncation_radius == pytest.approx(2.0)

    def test_piecewise_profile_with_flat_start_has_c_E_at_least_one(self):
        for K2 in (0.5, 1.0, 4.0):
            consts = contraction_constants(linear_model(a=K2, profile="piecewise", R=1.0))
            assert consts.c_E >= 1.0 - 1e-12

    def test_growing_override_diverges(self):
        with pytest.raises(DivergenceError):
            compute_delta(DissipativityProfile.override(lambda r: np.asarray(r), K2=1.0), 1.0)

    def test_nonpositive_beta(self):
        with pytest.raises(DomainError):
            compute_delta(DissipativityProfile.linear(1.0), 0.0)


class TestFFunction:
    """The concave distance function"""

    PROFILE = DissipativityProfile.piecewise(1.0, 3.0, 1.0)
    GRID = np.linspace(0.01, 10.0, 101)

    def test_origin(self):
        value, first, _ = eval_f(self.PROFILE, 1.0, 0.0)
        assert value == 0.0
        assert first == pytest.approx(compute_delta(self.PROFILE, 1.0).delta, rel=1e-9)

    def test_linear_override_is_identity(self):
        """gamma(v) = -2v, beta = 1 gives f(r) = r"""
        value, first, second = eval_f(DissipativityProfile.linear(2.0), 1.0, 3.0)
        assert value == pytest.approx(3.0, rel=1e-9)
        assert first == pytest.approx(1.0, rel=1e-9)
        assert second == pytest.approx(0.0, abs=1e-8)

    def test_second_derivative_solves_the_ode(self):
        """f'' + gamma f'/(2 beta) + r = 0, with f'' taken by differencing f'"""
        fn = f_function(self.PROFILE, 1.0)
        h = 1e-5
        for r in self.GRID:
            numeric = (fn.derivative(r + h) - fn.derivative(r - h)) / (2.0 * h)
            residual = numeric + float(self.PROFILE(r)) * fn.derivative(r) / 2.0 + r
            assert abs(residual) <= 1e-4

    def test_concave(self):
        fn = f_function(self.PROFILE, 1.0)
        assert all(fn.second_derivative(r) <= 1e-12 for r in self.GRID)

    def test_comparable_to_identity(self):
        """(2 beta / K2) r <= f(r) <= delta r"""
        fn = f_function(self.PROFILE, 1.0)
        delta = compute_delta(self.PROFILE, 1.0).delta
        for r in self.GRID:
            value = fn.value(r)
            slack = 1e-8 * (1.0 + r)
            assert (2.0 / 3.0) * r - slack <= value <= delta * r + slack

    def test_vectorized_matches_pointwise(self):
        fn = f_function(self.PROFILE, 1.0)
        points = np.array([0.05, 0.8, 1.0, 1.6, 2.5, 12.0])
        np.testing.assert_allclose(fn(points), [fn.value(r) for r in points], rtol=1e-7, atol=1e-9)

    def test_negative_radius(self):
        with pytest.raises(DomainError):
            eval_f(self.PROFILE, 1.0, -1.0)


class TestG:
    """The series G(a, t)"""

    def test_zero_a_is_pure_exponential(self):
        for t in (0.0, 0.3, 2.0):
            assert eval_G(0.0, t, 1.0, 1, UNIT) == pytest.approx(math.exp(-2.0 * t), rel=1e-15)

    def test_zero_time_is_c_E(self):
        assert eval_G(0.4, 0.0, 1.0, 3, UNIT) == UNIT.c_E

    def test_matches_extended_precision_oracle(self):
        assert eval_G(0.1, 1.0, 1.0, 1, UNIT) == pytest.approx(float(g_oracle(0.1, 1.0)), rel=1e-12)
        rng = np.random.default_rng(11)
        for a, t in zip(rng.uniform(0.0, 0.3, 20), rng.uniform(0.01, 2.0, 20)):
            assert eval_G(a, t, 1.0, 1, UNIT) == pytest.approx(float(g_oracle(a, t)), rel=1e-12)

    def test_monotone_in_a(self):
        values = [eval_G(a, 0.7, 1.0, 2, UNIT) for a in np.linspace(0.0, 1.0, 21)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_cap_returns_lower_bound_above_cap(self):
        capped = eval_G(0.5, 3.0, 1.0, 1, UNIT, cap=2.0)
        assert 2.0 <= capped <= eval_G(0.5, 3.0, 1.0, 1, UNIT)

    def test_large_argument_saturates_to_infinity(self):
        assert eval_G(1.0, 100.0, 1.0, 1, UNIT) == math.inf
        assert eval_G(1.0, 100.0, 1.0, 1, UNIT, cap=2.0) >= 2.0

    def test_log_space_sum_matches_oracle_for_large_terms(self):
        assert eval_G(0.3, 4.0, 1.0, 1, UNIT) == pytest.approx(float(g_oracle(0.3, 4.0, terms=600)), rel=1e-10)

    def test_domain(self):
        with pytest.raises(DomainError):
            eval_G(-0.1, 1.0, 1.0, 1, UNIT)
        with pytest.raises(DomainError):
            eval_G(0.1, 1.0, 0.0, 1, UNIT)


class TestKappa0:
    """kappa0 and the contraction window"""

    def test_against_grid_scan(self):
        result = compute_kappa0(1.0, 1, UNIT)
        a_grid = np.linspace(0.2 / 400, 0.2, 400)
        t_grid = np.geomspace(1e-6, 20.0, 2000)
        feasible = [a for a in a_grid if g_on_grid(a, t_grid).min() < 1.0]
        assert feasible and feasible[-1] < a_grid[-1]
        spacing = a_grid[1] - a_grid[0]
        assert result.value > 0
        assert not result.degenerate
        assert abs(result.value - feasible[-1]) <= 2.0 * spacing

    def test_requires_c_E_at_least_one(self):
        consts = UNIT.model_copy(update={"c_E": 0.5})
        with pytest.raises(DomainError):
            compute_kappa0(1.0, 1, consts)

    def test_window_contracts(self):
        kappa0 = compute_kappa0(1.0, 1, UNIT).value
        window = contraction_window(UNIT, 1.0, 1, 0.5 * kappa0)
        assert window.alpha < 1.0
        assert window.t_hat > 0
        assert window.rate == pytest.approx(-math.log(window.alpha) / window.t_hat)


class TestTheoremGates:
    """Smallness conditions"""

    def test_non_interacting_model_passes(self):
        report = check_theorem_hypotheses(linear_model(a=2.0), None, cG=1.0)
        assert report.threshold_coupling == pytest.approx(2.0, rel=1e-6)
        assert report.threshold_fluctuation == pytest.approx(1.0)
        assert report.lhs == 0.0
        assert report.theorem_gate

    def test_strong_interaction_fails_fluctuation_gate(self):
        model = linear_model(a=2.0, kappa=2.0)
        report = check_theorem_hypotheses(model, None, cG=1.0)
        assert not report.fluctuation_gate
        assert not report.theorem_gate
        with pytest.warns(RuntimeWarning):
            full = constants_report(model, cG=1.0)
        assert full.gates == {"coupling": False, "fluctuation": False, "theorem": False}
        assert full.lambda0 == pytest.approx(0.0, abs=1e-6)

    def test_report_fields(self):
        report = constants_report(linear_model(a=2.0), cG=1.0)
        assert set(report.thresholds) == {"coupling", "fluctuation", "kappa0", "lhs"}
        assert report.kappa0 == report.thresholds["kappa0"]
        assert report.window is not None
        assert report.d == 1
