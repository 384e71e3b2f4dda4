"""
Generalized Gronwall bound, quantitative law of large numbers, fluctuation
diagnostics, moment curves and rate fitting.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats
from scipy.special import gammaln

from chaoskit.config import get_settings
from chaoskit.core.exceptions import DomainError, SeriesConvergenceError
from chaoskit.core.streams import make_generator
from chaoskit.models.ensemble import MeasureFlow, ParticleEnsemble, Trajectory
from chaoskit.models.model_spec import ModelSpec
from chaoskit.schemas.reports import RateFit
from chaoskit.services.model_service import cloud_average

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GronwallInput:
    """u(t) <= a(t) + C int_0^t (t - s)^(theta - 1) u(s) ds with a sampled on a uniform grid of [0, T]."""

    a: np.ndarray
    T: float
    C: float
    theta: float
    tolerance: float = 1e-12

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64).ravel()
        if not self.theta > 0:
            raise DomainError(f"theta must be positive, got {self.theta}")
        if self.C < 0:
            raise DomainError(f"C must be nonnegative, got {self.C}")
        if a.size < 2 or not self.T > 0:
            raise DomainError("a needs at least two grid values on [0, T] with T > 0")
        if np.any(a < 0) or not np.all(np.isfinite(a)):
            raise DomainError("a must be finite and nonnegative")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.a.size)

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], T: float, points: int, C: float, theta: float,
                      tolerance: float = 1e-12) -> "GronwallInput":
        grid = np.linspace(0.0, T, points)
        return cls(a=np.asarray(fn(grid), dtype=np.float64) * np.ones_like(grid), T=T, C=C, theta=theta,
                   tolerance=tolerance)


def _convolution(a: np.ndarray, h: float, alpha: float) -> np.ndarray:
    """int_0^{t_j} (t_j - s)^(alpha - 1) a(s) ds for piecewise-linear a, exact on every panel."""
    J = a.size - 1
    w = h * np.arange(J + 1)
    F = w ** alpha / alpha
    H = w ** (alpha + 1.0) / (alpha + 1.0)
    dF = np.diff(F)
    dH = np.diff(H)
    P = dF
    Q = w[1:] * dF - dH
    slopes = np.diff(a) / h
    out = np.zeros(J + 1)
    out[1:] = np.convolve(a[:-1], P)[:J] + np.convolve(slopes, Q)[:J]
    return out


def gronwall_bound(inp: GronwallInput, t_grid: Optional[np.ndarray] = None) -> np.ndarray:
    """a(t) + sum_n (C Gamma(theta))^n / Gamma(n theta) int_0^t (t - s)^(n theta - 1) a(s) ds.

    Terms are added until their sup-norm drops below `tolerance` times the
    sup-norm of the running bound. With `t_grid` the result is interpolated
    linearly from the input grid.
    """
    a = inp.a
    bound = a.copy()
    if inp.C > 0:
        h = inp.T / (a.size - 1)
        log_base = math.log(inp.C) + float(gammaln(inp.theta))
        max_terms = get_settings()["SERIES_MAX_TERMS"]
        for n in range(1, max_terms + 1):
            alpha = n * inp.theta
            coefficient = math.exp(n * log_base - float(gammaln(alpha)))
            term = coefficient * _convolution(a, h, alpha)
            bound = bound + term
            if float(np.max(np.abs(term))) < inp.tolerance * max(1.0, float(np.max(np.abs(bound)))):
                logger.debug(f"Gronwall series truncated after {n} terms")
                break
        else:
            raise SeriesConvergenceError(f"Gronwall series did not converge in {max_terms} terms")
    if t_grid is None:
        return bound
    t_grid = np.asarray(t_grid, dtype=np.float64)
    if np.any(t_grid < 0) or np.any(t_grid > inp.T * (1 + 1e-12)):
        raise DomainError(f"t_grid must lie in [0, {inp.T}]")
    return np.interp(t_grid, inp.grid, bound)


# Built-in pair functions for the law of large numbers: (h, sampler, closed-form integral)
Sampler = Callable[[np.random.Generator, Tuple[int, ...]], np.ndarray]


def _uniform_sampler(rng: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
    return rng.uniform(0.0, 1.0, size=tuple(shape) + (1,))


def _gaussian_sampler(rng: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
    return rng.standard_normal(tuple(shape) + (1,))


LLN_BUILTINS: Dict[str, Tuple[Callable, Sampler, Optional[Callable]]] = {
    "mean-uniform": (lambda v, w: w, _uniform_sampler, lambda v: np.full_like(v, 0.5)),
    "constant-uniform": (lambda v, w: np.ones_like(w + v), _uniform_sampler, lambda v: np.ones_like(v)),
    "difference-gaussian": (lambda v, w: w - v, _gaussian_sampler, lambda v: -v),
}


def lln_gap(
    h: Callable[[np.ndarray, np.ndarray], np.ndarray],
    sampler: Sampler,
    N_list: Sequence[int],
    replicas: int,
    seed: int,
    integral: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    inner_budget: int = 4096,
) -> List[Tuple[int, float, float]]:
    """E |(1/N) sum_m h(Z_1, Z_m) - int h(Z_1, y) L(dy)| for every N, by Monte Carlo.

    Without a closed-form `integral`, the inner integral is estimated from
    `inner_budget` independent draws shared by all replicas.
    """
    if replicas < 2:
        raise DomainError("lln_gap needs at least two replicas")
    rows = []
    for N in N_list:
        if N < 1:
            raise DomainError(f"N must be positive, got {N}")
        rng = make_generator(seed, "lln", int(N))
        Z = sampler(rng, (replicas, int(N)))
        first = Z[:, :1, :]
        empirical = np.mean(h(first, Z), axis=1)
        if integral is not None:
            limit = integral(Z[:, 0, :])
        else:
            inner = sampler(make_generator(seed, "lln-inner", int(N)), (1, inner_budget))
            limit = np.mean(h(first, inner), axis=1)
        gaps = np.linalg.norm(np.atleast_2d(empirical - limit).reshape(replicas, -1), axis=1)
        mean = float(np.mean(gaps))
        stderr = float(np.std(gaps, ddof=1) / math.sqrt(replicas))
        rows.append((int(N), mean, stderr))
        logger.info(f"LLN gap N={N}: {mean:.5g} +/- {stderr:.2g}")
    return rows


def fluctuation_terms(model: ModelSpec, flow: MeasureFlow, ensemble: ParticleEnsemble, s: float) -> Tuple[float, float]:
    """(sum_i |B^i_s|, sum_i ||Sigma^i_s||_HS) of the ensemble against the flow at time s.

    B^i    = (1/N) sum_m b1(x^i, x^m) - <b1(x^i, .), mu_s>
    Sigma^i = A A^T - A_mu A_mu^T with A, A_mu the empirical and flow averages of sigma_tilde(x^i, .)
    """
    if ensemble.d != flow.d:
        raise DomainError(f"Ensemble dimension {ensemble.d} does not match flow dimension {flow.d}")
    if s < flow.t_start or s > flow.t_end:
        raise DomainError(f"Time {s} lies outside the flow range")
    x = ensemble.states[None]
    own = ensemble.sorted_states[None]
    limit = flow.sorted_clouds[flow.index_at(s)][None]
    B = cloud_average(model.b1, x, own)[0] - cloud_average(model.b1, x, limit)[0]
    A = cloud_average(model.sigma_tilde, x, own)[0]
    A_mu = cloud_average(model.sigma_tilde, x, limit)[0]
    Sigma = np.einsum("pij,pkj->pik", A, A) - np.einsum("pij,pkj->pik", A_mu, A_mu)
    return float(np.sum(np.linalg.norm(B, axis=-1))), float(np.sum(np.sqrt(np.sum(Sigma ** 2, axis=(-2, -1)))))


def tanaka_term(
    model: ModelSpec,
    flow: MeasureFlow,
    s: float,
    x_limit,
    ensemble: ParticleEnsemble,
    i: int,
) -> float:
    """1/2 ||<sigma_tilde(x~, .), mu_s> - (1/N) sum_j sigma_tilde(x^i, x^j)||_HS^2 / |x~ - x^i|.

    Zero when x~ = x^i; large whenever the two diffusion matrices differ at a
    short distance.
    """
    x_limit = np.asarray(x_limit, dtype=np.float64).reshape(1, 1, -1)
    x_i = ensemble.states[i].reshape(1, 1, -1)
    gap = float(np.linalg.norm(x_limit - x_i))
    if gap == 0.0:
        return 0.0
    limit = flow.sorted_clouds[flow.index_at(s)][None]
    A_mu = cloud_average(model.sigma_tilde, x_limit, limit)[0, 0]
    A = cloud_average(model.sigma_tilde, x_i, ensemble.sorted_states[None])[0, 0]
    return 0.5 * float(np.sum((A_mu - A) ** 2)) / gap


def second_moment_curve(source: Union[Trajectory, MeasureFlow]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(t, mean |X|^2, stderr) per recorded time.

    With several replicas the error bar comes from the spread of replica
    means; a single cloud uses the spread over particles.
    """
    if isinstance(source, MeasureFlow):
        times, states = source.times, source.clouds[:, None]
    else:
        times, states = source.times, source.states
    norms = np.sum(states ** 2, axis=-1)
    K, M, N = norms.shape
    if M > 1:
        per_replica = norms.mean(axis=2)
        mean = per_replica.mean(axis=1)
        stderr = per_replica.std(axis=1, ddof=1) / math.sqrt(M)
    else:
        flat = norms[:, 0, :]
        mean = flat.mean(axis=1)
        stderr = flat.std(axis=1, ddof=1) / math.sqrt(N) if N > 1 else np.zeros(K)
    return np.array(times), mean, stderr


def fit_rate(x: Sequence[float], y: Sequence[float], log_x: bool = False, confidence: float = 0.95) -> RateFit:
    """Least squares of log y on x (or log x) with a Student-t half-width for the slope."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size or x.size < 3:
        raise DomainError("fit_rate needs at least three (x, y) pairs")
    if np.any(y <= 0):
        raise DomainError("fit_rate needs positive y values")
    if log_x:
        if np.any(x <= 0):
            raise DomainError("log-log fit needs positive x values")
        x = np.log(x)
    result = stats.linregress(x, np.log(y))
    quantile = stats.t.ppf(0.5 + confidence / 2.0, x.size - 2)
    half_width = float(quantile * result.stderr) if np.isfinite(result.stderr) else 0.0
    return RateFit(
        slope=float(result.slope), intercept=float(result.intercept), half_width=abs(half_width),
        r2=float(result.rvalue ** 2), points=int(x.size), log_x=log_x,
    )
