"""
Finite-difference derivatives of the decoupled semigroup P_{s,t} f and the
empirical gradient constant c_G.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from chaoskit.config import get_settings
from chaoskit.core.exceptions import ConditioningWarning, DomainError
from chaoskit.core.streams import NoiseStreams
from chaoskit.core.workers import batch_ranges, map_ordered
from chaoskit.models.ensemble import MeasureFlow
from chaoskit.models.model_spec import ModelSpec
from chaoskit.models.observables import TestFunction
from chaoskit.schemas.reports import CGEstimate
from chaoskit.services.sde_service import _integrate_decoupled

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SemigroupDerivatives:
    """P f(z) with its gradient and Hessian, each with a Monte Carlo standard error."""

    value: float
    value_stderr: float
    gradient: np.ndarray
    gradient_stderr: np.ndarray
    hessian: np.ndarray
    hessian_stderr: np.ndarray
    h: float
    budget: int

    @property
    def gradient_norm(self) -> float:
        return float(np.linalg.norm(self.gradient))

    @property
    def hessian_norm(self) -> float:
        return float(np.linalg.norm(self.hessian, 2))


def _stencil(z: np.ndarray, h: float) -> Tuple[np.ndarray, Dict[Tuple, int]]:
    """Points z, z +/- h e_i and z +/- h e_i +/- h e_j (i < j) with their indices."""
    d = z.size
    eye = np.eye(d)
    points: List[np.ndarray] = [z]
    index: Dict[Tuple, int] = {(): 0}
    for i in range(d):
        for sign in (1, -1):
            index[((i, sign),)] = len(points)
            points.append(z + sign * h * eye[i])
    for i in range(d):
        for j in range(i + 1, d):
            for si in (1, -1):
                for sj in (1, -1):
                    index[((i, si), (j, sj))] = len(points)
                    points.append(z + si * h * eye[i] + sj * h * eye[j])
    return np.array(points), index


def _mean_and_stderr(samples: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    count = samples.shape[0]
    mean = samples.mean(axis=0)
    if count < 2:
        return mean, np.zeros_like(mean)
    return mean, samples.std(axis=0, ddof=1) / math.sqrt(count)


def semigroup_derivatives(
    model: ModelSpec,
    flow: MeasureFlow,
    f: TestFunction,
    s: float,
    t: float,
    z,
    h: float,
    budget: int,
    seed: int,
    dt: float = 1e-2,
    purpose: str = "gradient",
    threads: Optional[int] = None,
    warn: bool = True,
) -> SemigroupDerivatives:
    """Common-random-number central differences of P_{s,t} f at z.

    Every stencil point is driven by the same noise, so differences carry
    only the variation of f along the flow of the SDE.
    """
    if not t > s:
        raise DomainError(f"Need t > s, got s={s}, t={t}")
    if not h > 0 or budget < 2:
        raise DomainError("h must be positive and budget at least 2")
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.size != model.d:
        raise DomainError(f"z must be a point of R^{model.d}")
    flow.check_range(s, t)
    n_steps = max(1, int(round((t - s) / dt)))
    step = (t - s) / n_steps
    points, index = _stencil(z, h)
    blocks = batch_ranges(budget, get_settings()["SAMPLE_BLOCK"])
    record = np.array([0, n_steps])

    def run(k: int) -> np.ndarray:
        size = len(blocks[k])
        x0 = np.broadcast_to(points[:, None, :], (points.shape[0], size, model.d)).copy()
        finals = _integrate_decoupled(model, flow, x0, s, step, n_steps, record, NoiseStreams(seed, purpose, k))[-1]
        return np.asarray(f(finals), dtype=np.float64).T

    values = np.concatenate(map_ordered(run, range(len(blocks)), threads))
    d = model.d
    grad_samples = np.empty((budget, d))
    hess_samples = np.empty((budget, d, d))
    for i in range(d):
        plus, minus = values[:, index[((i, 1),)]], values[:, index[((i, -1),)]]
        grad_samples[:, i] = (plus - minus) / (2.0 * h)
        hess_samples[:, i, i] = (plus - 2.0 * values[:, 0] + minus) / h ** 2
        for j in range(i + 1, d):
            mixed = (
                values[:, index[((i, 1), (j, 1))]] - values[:, index[((i, 1), (j, -1))]]
                - values[:, index[((i, -1), (j, 1))]] + values[:, index[((i, -1), (j, -1))]]
            ) / (4.0 * h ** 2)
            hess_samples[:, i, j] = hess_samples[:, j, i] = mixed
    value, value_se = _mean_and_stderr(values[:, 0])
    gradient, gradient_se = _mean_and_stderr(grad_samples)
    hessian, hessian_se = _mean_and_stderr(hess_samples)
    scale = max(1.0, float(np.max(np.abs(hessian))))
    if warn and float(np.max(hessian_se)) > scale:
        message = (
            f"Second differences at h={h:g} are dominated by Monte Carlo noise "
            f"(stderr {float(np.max(hessian_se)):.3g}); recommended h={4.0 * h:g}"
        )
        logger.warning(message)
        warnings.warn(message, ConditioningWarning)
    return SemigroupDerivatives(
        value=float(value), value_stderr=float(value_se), gradient=gradient, gradient_stderr=gradient_se,
        hessian=hessian, hessian_stderr=hessian_se, h=h, budget=budget,
    )


def estimate_cG(
    model: ModelSpec,
    flow: MeasureFlow,
    test_functions: Sequence[TestFunction],
    pairs: Iterable[Tuple[float, float]],
    z_grid,
    h: float = 0.05,
    budget: int = 1024,
    seed: int = 0,
    eta: float = 1.0,
    dt: float = 1e-2,
    threads: Optional[int] = None,
) -> CGEstimate:
    """max over (z, f, (s, t)) of |grad^i P_{s,t} f(z)| ((t - s) ^ 1)^((i - eta)/2), i = 1, 2."""
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"eta must lie in (0, 1], got {eta}")
    z_grid = np.atleast_2d(np.asarray(z_grid, dtype=np.float64))
    if model.d == 1 and z_grid.shape[0] == 1 and z_grid.shape[1] != 1:
        z_grid = z_grid.T
    best = {1: (0.0, 0.0), 2: (0.0, 0.0)}
    counter = 0
    for s, t in pairs:
        factor = min(t - s, 1.0)
        for f in test_functions:
            for z in z_grid:
                result = semigroup_derivatives(
                    model, flow, f, s, t, z, h, budget, seed, dt=dt,
                    purpose=f"cG-{counter}", threads=threads,
                )
                counter += 1
                g_norm = result.gradient_norm
                g_se = float(np.linalg.norm(result.gradient_stderr))
                first = (g_norm * factor ** ((1.0 - eta) / 2.0), g_se * factor ** ((1.0 - eta) / 2.0))
                second = (
                    result.hessian_norm * factor ** ((2.0 - eta) / 2.0),
                    float(np.max(result.hessian_stderr)) * factor ** ((2.0 - eta) / 2.0),
                )
                best[1] = max(best[1], first)
                best[2] = max(best[2], second)
    order = 1 if best[1][0] >= best[2][0] else 2
    value, stderr = best[order]
    logger.info(f"Empirical c_G={value:.4g} (+/- {stderr:.2g}) attained at derivative order {order}")
    return CGEstimate(
        value=value, stderr=stderr, per_order={"1": best[1][0], "2": best[2][0]}, eta=eta, h=h,
    )
