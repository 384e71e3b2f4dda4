"""
Built-in model families with certified constants.

linear:       b0(x) = -a x,            b1(x, y) = kappa (y - x)
double-well:  b0(x) = x - |x|^2 x,     b1(x, y) = kappa (y - x)

Both accept a pairwise diffusion sigma_tilde(x, y) = c g(|x - y|) M with
g = 1 (constant) or g(z) = (1 + z^2)^(-1/2) (bounded-smooth).
"""

import logging
from typing import Callable, Dict, Optional

import numpy as np

from chaoskit.core.exceptions import ModelLoadError
from chaoskit.models.model_spec import (
    ModelConstants, ModelSpec, PairDiffusion, zero_pair_diffusion,
)
from chaoskit.models.profile import DissipativityProfile, fit_dissipativity
from chaoskit.schemas.model import DoubleWellParams, LinearParams, ModelDocument, SigmaParams

logger = logging.getLogger(__name__)

# sup_z |g'(z)| for g(z) = (1 + z^2)^(-1/2)
BOUNDED_SMOOTH_LIPSCHITZ = 2.0 / (3.0 * np.sqrt(3.0))


def _sigma_matrix(matrix, d: int, n: int) -> np.ndarray:
    if matrix is None:
        return np.eye(d, n)
    M = np.asarray(matrix, dtype=np.float64)
    if M.shape != (d, n):
        raise ModelLoadError(f"expected a {d}x{n} matrix, got shape {M.shape}", field="params.sigma.matrix")
    return M


def constant_sigma(scale: float, M: np.ndarray) -> PairDiffusion:
    CM = float(scale) * np.asarray(M, dtype=np.float64)

    def sigma(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        shape = np.broadcast_shapes(np.shape(x), np.shape(y))[:-1]
        return np.broadcast_to(CM, shape + CM.shape)

    return sigma


def bounded_smooth_sigma(scale: float, M: np.ndarray) -> PairDiffusion:
    CM = float(scale) * np.asarray(M, dtype=np.float64)

    def sigma(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        diff = np.asarray(x) - np.asarray(y)
        g = 1.0 / np.sqrt(1.0 + np.sum(diff * diff, axis=-1))
        return g[..., None, None] * CM

    return sigma


def sigma_constant_bound(kind: str, scale: float, M: np.ndarray) -> float:
    """Ksigma covering both the operator bound and the Lipschitz bound."""
    if kind == "none" or scale == 0.0:
        return 0.0
    op2 = float(np.linalg.norm(M, 2) ** 2)
    bound = scale ** 2 * op2
    if kind == "bounded-smooth":
        hs2 = float(np.sum(M * M))
        bound = max(bound, scale ** 2 * hs2 * BOUNDED_SMOOTH_LIPSCHITZ ** 2)
    return bound


def build_sigma(params: SigmaParams, d: int, n: int):
    M = _sigma_matrix(params.matrix, d, n)
    if params.kind == "none" or params.scale == 0.0:
        return zero_pair_diffusion(n), 0.0
    builder = constant_sigma if params.kind == "constant" else bounded_smooth_sigma
    return builder(params.scale, M), sigma_constant_bound(params.kind, params.scale, M)


def _interaction(kappa: float) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    def b1(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return kappa * (np.asarray(y) - np.asarray(x))
    return b1


def linear_model(
    d: int = 1,
    n: int = 1,
    beta: float = 1.0,
    a: float = 1.0,
    kappa: float = 0.0,
    sigma: Optional[SigmaParams] = None,
    R: float = 1.0,
    profile: str = "linear",
) -> ModelSpec:
    """Ornstein-Uhlenbeck confinement with linear attraction to the mean.

    The piecewise profile (K1=0, K2=a, R) dominates gamma(r) = -a r for any R,
    so both choices are certified.
    """
    sigma = sigma or SigmaParams()
    sigma_fn, Ksigma = build_sigma(sigma, d, n)
    constants = ModelConstants(K1=0.0, K2=float(a), R=float(R), Kb=abs(float(kappa)), Ksigma=Ksigma)
    return ModelSpec(
        d=d, n=n, beta=float(beta),
        b0=lambda x: -a * np.asarray(x),
        b1=_interaction(float(kappa)),
        sigma_tilde=sigma_fn,
        constants=constants,
        family="linear",
        status="certified",
        profile_override=DissipativityProfile.linear(a) if profile == "linear" else None,
        drift_lipschitz=float(a),
        params={"a": a, "kappa": kappa, "sigma": sigma.model_dump(), "profile": profile},
    )


def double_well_drift(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    return x - np.sum(x * x, axis=-1, keepdims=True) * x


def double_well_model(
    d: int = 1,
    n: int = 1,
    beta: float = 1.0,
    kappa: float = 0.0,
    K2: float = 1.0,
    box_radius: float = 5.0,
    sigma: Optional[SigmaParams] = None,
) -> ModelSpec:
    """Double-well confinement; (K1, R) come from the dissipativity fit."""
    sigma = sigma or SigmaParams()
    sigma_fn, Ksigma = build_sigma(sigma, d, n)
    profile, _, _ = fit_dissipativity(double_well_drift, d, box_radius=box_radius, K2=K2)
    constants = ModelConstants(
        K1=profile.K1, K2=profile.K2, R=profile.R, Kb=abs(float(kappa)), Ksigma=Ksigma,
    )
    return ModelSpec(
        d=d, n=n, beta=float(beta),
        b0=double_well_drift,
        b1=_interaction(float(kappa)),
        sigma_tilde=sigma_fn,
        constants=constants,
        family="double-well",
        status="certified",
        params={"kappa": kappa, "K2": K2, "box_radius": box_radius, "sigma": sigma.model_dump()},
    )


def _build_linear(doc: ModelDocument) -> ModelSpec:
    params = LinearParams(**doc.params)
    return linear_model(
        d=doc.d, n=doc.n, beta=doc.beta, a=params.a, kappa=params.kappa,
        sigma=params.sigma, R=params.R, profile=params.profile,
    )


def _build_double_well(doc: ModelDocument) -> ModelSpec:
    params = DoubleWellParams(**doc.params)
    return double_well_model(
        d=doc.d, n=doc.n, beta=doc.beta, kappa=params.kappa, K2=params.K2,
        box_radius=params.box_radius, sigma=params.sigma,
    )


FAMILY_BUILDERS: Dict[str, Callable[[ModelDocument], ModelSpec]] = {
    "linear": _build_linear,
    "double-well": _build_double_well,
}
