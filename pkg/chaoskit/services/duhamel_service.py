"""
Monte Carlo check of the Duhamel identity for two time-homogeneous diffusions

    P1_t f - P2_t f = int_0^t P1_s (L1 - L2) P2_{t-s} f ds,

with (L1 - L2) g = <b1 - b2, grad g> + 1/2 tr((a1 - a2) hess g), a = sigma sigma^T.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from chaoskit.core.exceptions import DomainError, ShapeMismatchError
from chaoskit.core.streams import NoiseStreams
from chaoskit.models.model_spec import ModelSpec
from chaoskit.models.observables import TestFunction
from chaoskit.schemas.reports import DuhamelResult
from chaoskit.services.model_service import cloud_average

logger = logging.getLogger(__name__)

VectorField = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DiffusionModel:
    """dX = b(X) dt + sigma(X) dW with sigma: (..., d) -> (..., d, n)."""

    d: int
    n: int
    drift: VectorField
    diffusion: VectorField
    name: str = "diffusion"

    @classmethod
    def constant(cls, drift, sigma, name: str = "constant") -> "DiffusionModel":
        b = np.atleast_1d(np.asarray(drift, dtype=np.float64))
        S = np.atleast_2d(np.asarray(sigma, dtype=np.float64))
        if S.shape[0] != b.size:
            raise ShapeMismatchError(f"sigma has {S.shape[0]} rows, drift has {b.size} entries")
        return cls(
            d=b.size, n=S.shape[1],
            drift=lambda x: np.broadcast_to(b, np.shape(x)),
            diffusion=lambda x: np.broadcast_to(S, np.shape(x)[:-1] + S.shape),
            name=name,
        )

    @classmethod
    def linear(cls, A, sigma, offset=None, name: str = "linear") -> "DiffusionModel":
        """b(x) = A x + offset with constant sigma."""
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        S = np.atleast_2d(np.asarray(sigma, dtype=np.float64))
        c = np.zeros(A.shape[0]) if offset is None else np.asarray(offset, dtype=np.float64)
        if A.shape[0] != A.shape[1] or S.shape[0] != A.shape[0]:
            raise ShapeMismatchError("A must be square and share its row count with sigma")
        return cls(
            d=A.shape[0], n=S.shape[1],
            drift=lambda x: np.asarray(x) @ A.T + c,
            diffusion=lambda x: np.broadcast_to(S, np.shape(x)[:-1] + S.shape),
            name=name,
        )

    @classmethod
    def from_model(cls, model: ModelSpec, cloud) -> "DiffusionModel":
        """The decoupled dynamics of `model` with the measure frozen at `cloud`.

        The noise is (W, B) of dimension d + n with sigma = [sqrt(beta) I | <sigma_tilde(x, .), cloud>].
        """
        sorted_cloud = np.asarray(cloud, dtype=np.float64).reshape(-1, model.d)
        sorted_cloud = sorted_cloud[np.lexsort(sorted_cloud.T[::-1])][None]
        root_beta = math.sqrt(model.beta) * np.eye(model.d)

        def flat(x: np.ndarray) -> np.ndarray:
            return np.asarray(x, dtype=np.float64).reshape(1, -1, model.d)

        def drift(x: np.ndarray) -> np.ndarray:
            shape = np.shape(x)
            return (model.b0(flat(x)) + cloud_average(model.b1, flat(x), sorted_cloud)).reshape(shape)

        def diffusion(x: np.ndarray) -> np.ndarray:
            shape = np.shape(x)
            pairwise = cloud_average(model.sigma_tilde, flat(x), sorted_cloud)
            additive = np.broadcast_to(root_beta, pairwise.shape[:-2] + root_beta.shape)
            return np.concatenate([additive, pairwise], axis=-1).reshape(shape[:-1] + (model.d, model.d + model.n))

        return cls(d=model.d, n=model.d + model.n, drift=drift, diffusion=diffusion, name=f"{model.family}-frozen")

    def covariance(self, x: np.ndarray) -> np.ndarray:
        S = self.diffusion(x)
        return np.einsum("...ik,...jk->...ij", S, S)


def _euler_paths(model: DiffusionModel, x0: np.ndarray, horizon: float, dt: float, noise) -> np.ndarray:
    """Euler endpoint at `horizon`; `noise` yields increments broadcastable to (..., n)."""
    x = np.array(x0, dtype=np.float64)
    if horizon <= 0:
        return x
    steps = max(1, int(round(horizon / dt)))
    step = horizon / steps
    for _ in range(steps):
        dW = math.sqrt(step) * next(noise)
        x = x + model.drift(x) * step + np.sum(model.diffusion(x) * dW[..., None, :], axis=-1)
    return x


def _standard_normals(seed: int, purpose: str, index: int, shape: Tuple[int, ...]):
    """Unit-variance increments; _euler_paths scales them by sqrt(step)."""
    return NoiseStreams(seed, purpose, index).stepper("W", shape, 1.0)


def _stencil_derivatives(
    model: DiffusionModel,
    f: TestFunction,
    x: np.ndarray,
    horizon: float,
    h: float,
    inner: int,
    dt: float,
    seed: int,
    index: int,
) -> Tuple[np.ndarray, np.ndarray]:
    """Gradient (P, d) and Hessian (P, d, d) of P_horizon f at points x (P, d)."""
    P, d = x.shape
    eye = np.eye(d)
    offsets = [np.zeros(d)]
    for i in range(d):
        offsets += [h * eye[i], -h * eye[i]]
    for i in range(d):
        for j in range(i + 1, d):
            offsets += [h * (eye[i] + eye[j]), h * (eye[i] - eye[j]), h * (-eye[i] + eye[j]), -h * (eye[i] + eye[j])]
    offsets = np.array(offsets)
    G = offsets.shape[0]
    starts = x[:, None, None, :] + offsets[None, :, None, :]
    starts = np.broadcast_to(starts, (P, G, inner, d))
    noise = _standard_normals(seed, "duhamel-inner", index, (P, 1, inner, model.n))
    values = np.asarray(f(_euler_paths(model, starts, horizon, dt, noise)), dtype=np.float64).mean(axis=2)
    grad = np.empty((P, d))
    hess = np.empty((P, d, d))
    for i in range(d):
        plus, minus = values[:, 1 + 2 * i], values[:, 2 + 2 * i]
        grad[:, i] = (plus - minus) / (2.0 * h)
        hess[:, i, i] = (plus - 2.0 * values[:, 0] + minus) / h ** 2
    k = 1 + 2 * d
    for i in range(d):
        for j in range(i + 1, d):
            pp, pm, mp, mm = (values[:, k + q] for q in range(4))
            hess[:, i, j] = hess[:, j, i] = (pp - pm - mp + mm) / (4.0 * h ** 2)
            k += 4
    return grad, hess


def duhamel_residual(
    model1: DiffusionModel,
    model2: DiffusionModel,
    f: TestFunction,
    t: float,
    z_grid,
    budget: int = 4096,
    seed: int = 0,
    dt: float = 1e-2,
    quad_nodes: int = 8,
    outer: int = 256,
    inner: int = 256,
    h: float = 0.05,
) -> DuhamelResult:
    """|LHS - RHS| on a grid of starting points, with a combined Monte Carlo error bar.

    LHS uses common random numbers for the two semigroups. The time integral
    is Gauss-Legendre over s; at each node P1_s is sampled with `outer`
    paths and every path end gets its own inner estimate of the derivatives
    of P2_{t-s} f.
    """
    if model1.d != model2.d:
        raise ShapeMismatchError("Both models must share the state space")
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    if budget < 2 or outer < 2 or inner < 1:
        raise DomainError("Monte Carlo budgets are too small")
    d = model1.d
    z_grid = np.asarray(z_grid, dtype=np.float64).reshape(-1, d)
    same_noise = model1.n == model2.n

    lhs, lhs_se = [], []
    for k, z in enumerate(z_grid):
        starts = np.broadcast_to(z, (budget, d))
        noise1 = _standard_normals(seed, "duhamel-lhs", k, (budget, model1.n))
        noise2 = _standard_normals(seed, "duhamel-lhs" if same_noise else "duhamel-lhs-2", k, (budget, model2.n))
        diff = (
            np.asarray(f(_euler_paths(model1, starts, t, dt, noise1)))
            - np.asarray(f(_euler_paths(model2, starts, t, dt, noise2)))
        )
        lhs.append(float(diff.mean()))
        lhs_se.append(float(diff.std(ddof=1) / math.sqrt(budget)))

    nodes, weights = np.polynomial.legendre.leggauss(quad_nodes)
    s_nodes = 0.5 * t * (nodes + 1.0)
    s_weights = 0.5 * t * weights
    rhs = np.zeros(len(z_grid))
    rhs_var = np.zeros(len(z_grid))
    for k, z in enumerate(z_grid):
        for q, (s, w) in enumerate(zip(s_nodes, s_weights)):
            index = k * quad_nodes + q
            noise = _standard_normals(seed, "duhamel-outer", index, (outer, model1.n))
            x = _euler_paths(model1, np.broadcast_to(z, (outer, d)), s, dt, noise)
            grad, hess = _stencil_derivatives(model2, f, x, t - s, h, inner, dt, seed, index)
            db = model1.drift(x) - model2.drift(x)
            da = model1.covariance(x) - model2.covariance(x)
            g = np.sum(db * grad, axis=-1) + 0.5 * np.einsum("pij,pji->p", da, hess)
            rhs[k] += w * float(g.mean())
            rhs_var[k] += w ** 2 * float(g.var(ddof=1)) / outer
    rhs_se = np.sqrt(rhs_var)
    lhs, lhs_se = np.array(lhs), np.array(lhs_se)
    residual = np.abs(lhs - rhs)
    worst = int(np.argmax(residual))
    error_bar = float(math.hypot(lhs_se[worst], rhs_se[worst]))
    logger.info(f"Duhamel residual {residual[worst]:.4g} (error bar {error_bar:.2g}) at z={z_grid[worst].tolist()}")
    return DuhamelResult(
        max_residual=float(residual[worst]), error_bar=error_bar, t=t, z=z_grid.tolist(),
        lhs=lhs.tolist(), rhs=rhs.tolist(), residual=residual.tolist(),
        lhs_stderr=lhs_se.tolist(), rhs_stderr=rhs_se.tolist(),
    )
