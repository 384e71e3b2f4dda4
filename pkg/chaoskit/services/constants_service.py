"""
Explicit contraction constants.

    delta    = int_0^inf s exp(Gamma(s) / (2 beta)) ds,   Gamma(s) = int_0^s gamma
    f'(r)    = int_r^inf s exp((Gamma(s) - Gamma(r)) / (2 beta)) ds,  f(0) = 0
    c_E      = K2 delta / (2 beta)
    lambda0  = 2 beta / delta - c_E (Kb + Ksigma)
    G(a, t)  = sum_n 2 c_E x^n / (n Gamma(n/2)) + c_E exp(-(2 beta/delta - K2 delta a/(2 beta)) t)
               with x = 3 sqrt(2 d) c_G max(1, sqrt t) sqrt(pi) sqrt(t) a
    kappa0   = sup{a > 0 : inf_t G(a, t) < 1}
"""

import logging
import math
import sys
import warnings
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import CubicHermiteSpline
from scipy.special import gammaln, logsumexp

from chaoskit.config import get_settings
from chaoskit.core.exceptions import DivergenceError, DomainError, SeriesConvergenceError
from chaoskit.models.model_spec import ModelSpec
from chaoskit.models.profile import DissipativityProfile
from chaoskit.schemas.reports import (
    ConstantsReport, ContractionConstants, ContractionWindow, DeltaResult,
    HypothesisReport, Kappa0Result,
)

logger = logging.getLogger(__name__)

_QUAD_OPTIONS = {"epsabs": 1e-15, "epsrel": 1e-12, "limit": 400}
_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(6)
_LOG_FLOAT_MAX = math.log(sys.float_info.max)


def _check_beta(beta: float) -> float:
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    return float(beta)


def _check_override_tail(profile: DissipativityProfile, beta: float) -> None:
    """The override must decay at least like -K2 v beyond its tail radius."""
    rho = profile.tail_start
    span = 10.0 * math.sqrt(4.0 * beta / profile.K2) + 10.0
    grid = np.linspace(rho, rho + span, 400)
    excess = profile(grid) + profile.K2 * grid
    if np.any(excess > 1e-9 * (1.0 + profile.K2 * grid)):
        worst = float(grid[int(np.argmax(excess))])
        raise DivergenceError(
            f"Override gamma exceeds -K2 v at v={worst:.6g}; the delta integral need not converge"
        )


def _truncation_radius(profile: DissipativityProfile, beta: float) -> float:
    """Radius beyond which the Gaussian tail bound contributes < QUAD_TAIL_TOL."""
    rho = profile.tail_start
    K2 = profile.K2
    scale = 2.0 * beta / K2
    log_prefactor = float(profile.antiderivative(rho)) / (2.0 * beta) + math.log(scale)
    log_ratio = max(0.0, log_prefactor - math.log(get_settings()["QUAD_TAIL_TOL"] * scale))
    return math.sqrt(rho ** 2 + 4.0 * beta / K2 * log_ratio)


class FFunction:
    """The concave distance function f of the reflection coupling.

    f' is evaluated by adaptive quadrature; f is tabulated at panel ends by
    Gauss-Legendre panels aligned with the kinks of gamma, and interpolated
    between them by a cubic Hermite spline for vectorized use.
    """

    def __init__(self, profile: DissipativityProfile, beta: float, panels: int = 128):
        self.profile = profile
        self.beta = _check_beta(beta)
        if not profile.is_piecewise:
            _check_override_tail(profile, self.beta)
        self.panels = panels
        self.tail_slope = 2.0 * self.beta / profile.K2
        if profile.is_piecewise:
            self.linear_from = 2.0 * profile.R
            self.r_table = self.linear_from
        else:
            self.linear_from = None
            self.r_table = _truncation_radius(profile, self.beta)
        self._nodes: Optional[np.ndarray] = None
        self._values: Optional[np.ndarray] = None
        self._slopes: Optional[np.ndarray] = None
        self._spline: Optional[CubicHermiteSpline] = None

    def _exp_weight(self, s: float, gamma_r: float) -> float:
        return s * math.exp((float(self.profile.antiderivative(s)) - gamma_r) / (2.0 * self.beta))

    def derivative(self, r: float) -> float:
        """f'(r) = int_r^inf s exp((Gamma(s) - Gamma(r)) / (2 beta)) ds."""
        r = float(r)
        if r < 0:
            raise DomainError(f"f is defined for r >= 0, got {r}")
        gamma_r = float(self.profile.antiderivative(r))
        if self.profile.is_piecewise:
            two_r = self.linear_from
            if r >= two_r:
                return self.tail_slope
            points = [self.profile.R] if r < self.profile.R else None
            head, _ = integrate.quad(self._exp_weight, r, two_r, args=(gamma_r,), points=points, **_QUAD_OPTIONS)
            tail = self.tail_slope * math.exp((float(self.profile.antiderivative(two_r)) - gamma_r) / (2.0 * self.beta))
            return head + tail
        value, _ = integrate.quad(self._exp_weight, r, np.inf, args=(gamma_r,), **_QUAD_OPTIONS)
        return value

    def second_derivative(self, r: float, first: Optional[float] = None) -> float:
        """f''(r) = -gamma(r) f'(r) / (2 beta) - r."""
        r = float(r)
        if self.linear_from is not None and r >= self.linear_from:
            return 0.0
        first = self.derivative(r) if first is None else first
        return -float(self.profile(r)) * first / (2.0 * self.beta) - r

    def _breakpoints(self) -> np.ndarray:
        kinks = [self.profile.R, 2.0 * self.profile.R] if self.profile.is_piecewise else [self.profile.tail_start]
        edges = np.linspace(0.0, self.r_table, self.panels + 1)
        extra = [k for k in kinks if 0.0 < k < self.r_table]
        return np.unique(np.concatenate([edges, extra]))

    def _panel_integral(self, lo: float, hi: float) -> float:
        if hi <= lo:
            return 0.0
        half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
        return half * sum(w * self.derivative(mid + half * x) for x, w in zip(_GAUSS_NODES, _GAUSS_WEIGHTS))

    def _build_table(self) -> None:
        if self._nodes is not None:
            return
        nodes = self._breakpoints()
        values = np.zeros_like(nodes)
        for k in range(1, nodes.size):
            values[k] = values[k - 1] + self._panel_integral(nodes[k - 1], nodes[k])
        slopes = np.array([self.derivative(r) for r in nodes])
        self._nodes, self._values, self._slopes = nodes, values, slopes
        self._spline = CubicHermiteSpline(nodes, values, slopes, extrapolate=False)
        logger.debug(f"Tabulated f on {nodes.size} nodes up to r={self.r_table:.6g}")

    def value(self, r: float) -> float:
        """f(r) with panel-exact Gauss-Legendre accuracy."""
        r = float(r)
        if r < 0:
            raise DomainError(f"f is defined for r >= 0, got {r}")
        self._build_table()
        nodes = self._nodes
        if r >= nodes[-1]:
            return float(self._values[-1] + self._slopes[-1] * (r - nodes[-1])) if self.linear_from is not None \
                else float(self._values[-1] + self._panel_integral(nodes[-1], r))
        k = int(np.searchsorted(nodes, r, side="right")) - 1
        return float(self._values[k] + self._panel_integral(nodes[k], r))

    def __call__(self, r) -> np.ndarray:
        """Vectorized f(r); linear continuation beyond the table."""
        self._build_table()
        r = np.asarray(r, dtype=np.float64)
        if np.any(r < 0):
            raise DomainError("f is defined for r >= 0")
        last = self._nodes[-1]
        inside = np.clip(r, 0.0, last)
        out = self._spline(inside)
        beyond = r > last
        if np.any(beyond):
            out = np.where(beyond, self._values[-1] + self._slopes[-1] * (r - last), out)
        return out


@lru_cache(maxsize=64)
def f_function(profile: DissipativityProfile, beta: float) -> FFunction:
    return FFunction(profile, beta)


def eval_f(profile: DissipativityProfile, beta: float, r: float) -> Tuple[float, float, float]:
    """(f(r), f'(r), f''(r))."""
    if r < 0:
        raise DomainError(f"f is defined for r >= 0, got {r}")
    fn = f_function(profile, float(beta))
    first = fn.derivative(r)
    return fn.value(r), first, fn.second_derivative(r, first)


@lru_cache(maxsize=64)
def compute_delta(profile: DissipativityProfile, beta: float) -> DeltaResult:
    """delta = int_0^inf s exp(Gamma(s)/(2 beta)) ds.

    Piecewise profiles integrate [0, 2R] adaptively and add the exact Gaussian
    tail beyond 2R; overrides are truncated where the tail bound drops
    below QUAD_TAIL_TOL.
    """
    beta = _check_beta(beta)
    K2 = profile.K2

    def integrand(s: float) -> float:
        return s * math.exp(float(profile.antiderivative(s)) / (2.0 * beta))

    if profile.is_piecewise:
        R = profile.R
        head, error, info = integrate.quad(integrand, 0.0, 2.0 * R, points=[R], full_output=1, **_QUAD_OPTIONS)[:3]
        tail = (2.0 * beta / K2) * math.exp(float(profile.antiderivative(2.0 * R)) / (2.0 * beta))
        delta, radius, tail_kind = head + tail, 2.0 * R, "closed-form"
    else:
        _check_override_tail(profile, beta)
        radius = _truncation_radius(profile, beta)
        rho = profile.tail_start
        points = [rho] if 0.0 < rho < radius else None
        head, error, info = integrate.quad(integrand, 0.0, radius, points=points, full_output=1, **_QUAD_OPTIONS)[:3]
        delta, tail_kind = head, "truncated"
        error += get_settings()["QUAD_TAIL_TOL"] * 2.0 * beta / K2
    if not (math.isfinite(delta) and delta > 0):
        raise DivergenceError(f"delta integral evaluated to {delta}")
    if error > 1e-8 * delta:
        logger.warning(f"delta error estimate {error:.3g} exceeds 1e-8 relative")
    return DeltaResult(
        delta=delta, error_estimate=float(error), truncation_radius=float(radius),
        node_count=int(info.get("neval", 0)), tail=tail_kind,
    )


def contraction_constants(model: ModelSpec, profile: Optional[DissipativityProfile] = None) -> ContractionConstants:
    """delta, c_E = K2 delta / (2 beta) and lambda0 = 2 beta / delta - c_E (Kb + Ksigma)."""
    profile = profile or model.profile
    c = model.constants
    partial = compute_delta(profile, model.beta)
    delta = partial.delta
    c_E = c.K2 * delta / (2.0 * model.beta)
    lambda0 = 2.0 * model.beta / delta - c_E * c.interaction
    return ContractionConstants(
        delta=delta, c_E=c_E, lambda0=lambda0, beta=model.beta, K2=c.K2, Kb=c.Kb, Ksigma=c.Ksigma,
        error_estimate=partial.error_estimate, truncation_radius=partial.truncation_radius,
        node_count=partial.node_count, tail=partial.tail,
    )


def _series_base(a: float, t: float, cG: float, d: int) -> float:
    return 3.0 * math.sqrt(2.0 * d) * cG * max(1.0, math.sqrt(t)) * math.sqrt(math.pi) * math.sqrt(t) * a


def eval_G(
    a: float,
    t: float,
    cG: float,
    d: int,
    consts: ContractionConstants,
    cap: Optional[float] = None,
) -> float:
    """G(a, t); with `cap`, summation stops once the partial value reaches it.

    Series terms are nonnegative, so a capped result is a lower bound >= cap.
    Terms are summed in log space; a partial sum past the float range gives inf.
    """
    if a < 0 or t < 0:
        raise DomainError(f"G needs a, t >= 0, got a={a}, t={t}")
    if not cG > 0 or d < 1:
        raise DomainError(f"G needs cG > 0 and d >= 1, got cG={cG}, d={d}")
    exponent = -(2.0 * consts.beta / consts.delta - consts.K2 * consts.delta * a / (2.0 * consts.beta)) * t
    if exponent > _LOG_FLOAT_MAX:
        return math.inf
    exp_term = consts.c_E * math.exp(exponent)
    x = _series_base(a, t, cG, d)
    if x == 0.0:
        return exp_term
    settings = get_settings()
    rel_tol, max_terms = settings["SERIES_REL_TOL"], settings["SERIES_MAX_TERMS"]
    log_x, log_lead, log_tol = math.log(x), math.log(2.0 * consts.c_E), math.log(rel_tol)
    log_terms = []
    log_running = -math.inf
    small = 0
    for n in range(1, max_terms + 1):
        log_term = log_lead + n * log_x - math.log(n) - gammaln(0.5 * n)
        log_terms.append(log_term)
        log_running = float(np.logaddexp(log_running, log_term))
        if log_running > _LOG_FLOAT_MAX:
            logger.debug(f"G series leaves the float range at n={n} (a={a}, t={t})")
            return math.inf
        if cap is not None and math.exp(log_running) + exp_term >= cap:
            return math.exp(log_running) + exp_term
        small = small + 1 if log_term < log_tol + log_running else 0
        if small >= 3:
            break
    else:
        raise SeriesConvergenceError(f"G series did not converge in {max_terms} terms (a={a}, t={t})")
    return math.exp(float(logsumexp(log_terms))) + exp_term


def _minimize_over_t(
    a: float, cG: float, d: int, consts: ContractionConstants, t_points: int = 200, t_min: float = 1e-6,
) -> Tuple[float, float]:
    """(inf_t G(a, t), minimizing t) by a log-spaced scan refined by golden section."""
    rate = 2.0 * consts.beta / consts.delta - consts.K2 * consts.delta * a / (2.0 * consts.beta)
    if rate <= 0:
        return consts.c_E, 0.0
    t_max = max(10.0 * t_min, math.log(max(consts.c_E, 1.0) / 1e-12) / rate)
    log_ts = np.linspace(math.log(t_min), math.log(t_max), t_points)

    def objective(log_t: float) -> float:
        return eval_G(a, math.exp(log_t), cG, d, consts, cap=2.0)

    values = np.array([objective(v) for v in log_ts])
    k = int(np.argmin(values))
    best_log_t, best = float(log_ts[k]), float(values[k])
    if 0 < k < t_points - 1:
        try:
            log_t, value, _ = optimize.golden(
                objective, brack=(log_ts[k - 1], log_ts[k], log_ts[k + 1]), full_output=True,
            )
            if value < best:
                best_log_t, best = float(log_t), float(value)
        except ValueError:
            pass
    if consts.c_E < best:
        return consts.c_E, 0.0
    return best, math.exp(best_log_t)


def compute_kappa0(
    cG: float,
    d: int,
    consts: ContractionConstants,
    a_max: Optional[float] = None,
    t_points: int = 200,
    tolerance: float = 1e-6,
) -> Kappa0Result:
    """kappa0 = sup{a > 0 : inf_t G(a, t) < 1} by bisection on a.

    G is nondecreasing in a, so the feasible set is an interval (0, kappa0).
    The bracket ends at min(a_max, 4 beta^2 / (K2 delta^2)); past the second
    value the exponential term no longer decays.
    """
    if consts.c_E < 1.0 - 1e-12:
        raise DomainError(f"c_E must be at least 1, got {consts.c_E}")
    a_decay = 4.0 * consts.beta ** 2 / (consts.K2 * consts.delta ** 2)
    a_upper = min(a_max if a_max is not None else consts.K2, a_decay)
    resolution = tolerance * a_upper

    def feasible(a: float) -> Tuple[bool, float]:
        value, t_star = _minimize_over_t(a, cG, d, consts, t_points)
        return value < 1.0, t_star

    lo = a_upper * 1e-9
    ok, t_star = feasible(lo)
    if not ok:
        logger.warning("kappa0 search found no feasible a; returning 0 (degenerate)")
        return Kappa0Result(value=0.0, degenerate=True, t_star=None, resolution=resolution, a_upper=a_upper)
    hi = a_upper
    ok_hi, t_hi = feasible(hi)
    if ok_hi:
        logger.info("Whole kappa0 bracket is feasible; reporting its upper end")
        return Kappa0Result(value=hi, t_star=t_hi, resolution=resolution, a_upper=a_upper)
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        ok, t_mid = feasible(mid)
        if ok:
            lo, t_star = mid, t_mid
        else:
            hi = mid
    return Kappa0Result(value=lo, t_star=t_star, resolution=resolution, a_upper=a_upper)


def contraction_window(consts: ContractionConstants, cG: float, d: int, a: float) -> ContractionWindow:
    """t_hat minimizing G(a, .), alpha = G(a, t_hat) and the implied rate -log(alpha)/t_hat."""
    alpha, t_hat = _minimize_over_t(a, cG, d, consts)
    rate = -math.log(alpha) / t_hat if (alpha < 1.0 and t_hat > 0) else None
    return ContractionWindow(a=a, t_hat=t_hat, alpha=alpha, rate=rate)


def check_theorem_hypotheses(
    model: ModelSpec,
    profile: Optional[DissipativityProfile],
    cG: float,
    d: Optional[int] = None,
    kappa0: Optional[Kappa0Result] = None,
) -> HypothesisReport:
    """Smallness gates: coupling (Kb+Ksigma < 4 beta^2/(K2 delta^2)), fluctuation
    (Kb+Ksigma < K2/2) and the theorem (below all three thresholds with kappa0)."""
    consts = contraction_constants(model, profile)
    d = model.d if d is None else d
    kappa0 = kappa0 or compute_kappa0(cG, d, consts)
    lhs = model.constants.interaction
    threshold_coupling = 4.0 * consts.beta ** 2 / (consts.K2 * consts.delta ** 2)
    threshold_fluctuation = consts.K2 / 2.0
    coupling_gate = lhs < threshold_coupling
    fluctuation_gate = lhs < threshold_fluctuation
    theorem_gate = coupling_gate and fluctuation_gate and lhs < kappa0.value
    return HypothesisReport(
        threshold_coupling=threshold_coupling, threshold_fluctuation=threshold_fluctuation,
        kappa0=kappa0.value, lhs=lhs, coupling_gate=coupling_gate,
        fluctuation_gate=fluctuation_gate, theorem_gate=theorem_gate, cG=cG, d=d,
    )


def constants_report(model: ModelSpec, cG: float, d: Optional[int] = None) -> ConstantsReport:
    """Everything the `constants` subcommand prints and stores."""
    consts = contraction_constants(model)
    d = model.d if d is None else d
    kappa0 = compute_kappa0(cG, d, consts)
    hypotheses = check_theorem_hypotheses(model, None, cG, d, kappa0=kappa0)
    window = contraction_window(consts, cG, d, 0.5 * kappa0.value) if kappa0.value > 0 else None
    if not hypotheses.theorem_gate:
        warnings.warn("Interaction strength Kb+Ksigma exceeds a contraction threshold for this model", RuntimeWarning)
        logger.warning(f"Theorem gate fails: Kb+Ksigma={hypotheses.lhs:.6g}")
    return ConstantsReport(
        delta=consts.delta, c_E=consts.c_E, lambda0=consts.lambda0, kappa0=kappa0.value,
        kappa0_degenerate=kappa0.degenerate,
        thresholds={
            "coupling": hypotheses.threshold_coupling,
            "fluctuation": hypotheses.threshold_fluctuation,
            "kappa0": kappa0.value,
            "lhs": hypotheses.lhs,
        },
        gates={
            "coupling": hypotheses.coupling_gate,
            "fluctuation": hypotheses.fluctuation_gate,
            "theorem": hypotheses.theorem_gate,
        },
        cG=cG, d=d, window=window,
    )
