"""
Reflection coupling of two decoupled SDEs driven by the same flow.

Both legs share the B increments. The W increment of the second leg is
reflected across the hyperplane orthogonal to Z = X_tilde - X_hat until the
legs come within the merge threshold; from then on they are synchronous.
The smoothed variant blends the reflected noise with an independent
W_tilde stream through pi_R, pi_S.
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np

from chaoskit.config import get_settings
from chaoskit.core.exceptions import BlowUpError, DomainError, NumericError, ShapeMismatchError
from chaoskit.core.streams import NoiseStreams
from chaoskit.core.workers import batch_ranges, map_ordered
from chaoskit.models.ensemble import CouplingTrace, MeasureFlow
from chaoskit.models.model_spec import ModelSpec
from chaoskit.models.profile import DissipativityProfile
from chaoskit.schemas.simulation import SimConfig
from chaoskit.services.constants_service import f_function
from chaoskit.services.model_service import mean_field_coefficients
from chaoskit.services.sde_service import _diffuse, output_steps

logger = logging.getLogger(__name__)


def merge_threshold(beta: float, dt: float, d: int, factor: Optional[float] = None) -> float:
    """theta = factor * sqrt(beta dt d), the one-step noise scale."""
    factor = get_settings()["MERGE_FACTOR"] if factor is None else factor
    return factor * math.sqrt(beta * dt * d)


def smoothing_weights(r: np.ndarray, epsilon: float) -> Tuple[np.ndarray, np.ndarray]:
    """pi_R = clamp(2r/eps - 1, 0, 1) and pi_S = sqrt(1 - pi_R^2)."""
    pi_r = np.clip(2.0 * np.asarray(r) / epsilon - 1.0, 0.0, 1.0)
    return pi_r, np.sqrt(1.0 - pi_r ** 2)


def reflect(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """(I - 2 u u^T) v row by row, for unit rows u."""
    return v - 2.0 * np.sum(u * v, axis=-1, keepdims=True) * u


def _check_reflection(u: np.ndarray, v: np.ndarray) -> None:
    twice = reflect(u, reflect(u, v))
    if not np.allclose(twice, v, rtol=1e-12, atol=1e-12):
        raise NumericError("Reflection matrix is not involutive", pair=(u.tolist(), v.tolist()))
    if not np.allclose(np.linalg.norm(reflect(u, v), axis=-1), np.linalg.norm(v, axis=-1), rtol=1e-12, atol=1e-12):
        raise NumericError("Reflection matrix is not orthogonal", pair=(u.tolist(), v.tolist()))


def _couple_block(
    model: ModelSpec,
    flow: MeasureFlow,
    x_tilde0: np.ndarray,
    x_hat0: np.ndarray,
    cfg: SimConfig,
    t0: float,
    epsilon: float,
    theta: float,
    streams: NoiseStreams,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    S, d = x_tilde0.shape
    debug = get_settings()["DEBUG"]
    dt = cfg.dt
    sqrt_beta = math.sqrt(model.beta)
    record = output_steps(cfg)
    dW_iter = streams.stepper("W", (S, d), dt)
    dB_iter = streams.stepper("B", (S, model.n), dt)
    dWt_iter = streams.stepper("W_tilde", (S, d), dt) if epsilon > 0 else None

    x_tilde, x_hat = x_tilde0.copy(), x_hat0.copy()
    tau = np.full(S, np.inf)
    merged = np.zeros(S, dtype=bool)
    if epsilon == 0:
        merged = np.linalg.norm(x_tilde - x_hat, axis=1) <= theta
        x_hat[merged] = x_tilde[merged]
        tau[merged] = t0

    tildes = np.empty((record.size, S, d))
    hats = np.empty((record.size, S, d))
    tildes[0], hats[0] = x_tilde, x_hat
    slot = 1
    for step in range(1, cfg.n_steps + 1):
        cloud = flow.sorted_clouds[flow.index_at(t0 + (step - 1) * dt)][None]
        both = np.concatenate([x_tilde, x_hat])[None]
        drift, diffusion = mean_field_coefficients(model, both, cloud)
        dW, dB = next(dW_iter), next(dB_iter)
        z = x_tilde - x_hat
        r = np.linalg.norm(z, axis=1)
        u = np.divide(z, r[:, None], out=np.zeros_like(z), where=r[:, None] > 0)
        reflected = reflect(u, dW)
        if debug:
            _check_reflection(u[r > 0], dW[r > 0])
        if epsilon > 0:
            dWt = next(dWt_iter)
            pi_r, pi_s = smoothing_weights(r, epsilon)
            noise_tilde = pi_r[:, None] * dW + pi_s[:, None] * dWt
            noise_hat = pi_r[:, None] * reflected + pi_s[:, None] * dWt
        else:
            noise_tilde = dW
            noise_hat = np.where(merged[:, None], dW, reflected)
        shared = _diffuse(diffusion[0], np.concatenate([dB, dB]))
        x_tilde = x_tilde + drift[0, :S] * dt + sqrt_beta * noise_tilde + shared[:S]
        x_hat = x_hat + drift[0, S:] * dt + sqrt_beta * noise_hat + shared[S:]
        if not (np.all(np.isfinite(x_tilde)) and np.all(np.isfinite(x_hat))):
            raise BlowUpError("Coupled SDE produced a non-finite state", step=step)
        if epsilon == 0:
            hit = ~merged & (np.linalg.norm(x_tilde - x_hat, axis=1) <= theta)
            tau[hit] = t0 + step * dt
            merged |= hit
            x_hat[merged] = x_tilde[merged]
        if slot < record.size and step == record[slot]:
            tildes[slot], hats[slot] = x_tilde, x_hat
            slot += 1
    return tildes, hats, tau


def simulate_reflection_coupling(
    model: ModelSpec,
    flow: MeasureFlow,
    x_tilde0,
    x_hat0,
    cfg: SimConfig,
    epsilon: float = 0.0,
    merge_factor: Optional[float] = None,
    profile: Optional[DissipativityProfile] = None,
    start_time: Optional[float] = None,
    purpose: str = "coupling",
    threads: Optional[int] = None,
) -> CouplingTrace:
    """M coupled pairs started from (x_tilde0, x_hat0).

    epsilon = 0 selects the hard reflection with the discrete merge rule;
    epsilon > 0 the smoothed blend, which never merges.
    """
    if epsilon < 0:
        raise DomainError(f"epsilon must be nonnegative, got {epsilon}")
    t0 = flow.t_start if start_time is None else float(start_time)
    flow.check_range(t0, t0 + cfg.T)
    M, d = cfg.replicas, model.d

    def starts(value, name: str) -> np.ndarray:
        array = np.asarray(value, dtype=np.float64)
        if array.ndim <= 1:
            array = np.broadcast_to(array.reshape(-1) if array.size == d else np.full(d, float(array)), (M, d))
        if array.shape != (M, d):
            raise ShapeMismatchError(f"{name} must be a point of R^{d} or an ({M}, {d}) array")
        return np.array(array)

    x_tilde0, x_hat0 = starts(x_tilde0, "x_tilde0"), starts(x_hat0, "x_hat0")
    theta = merge_threshold(model.beta, cfg.dt, d, merge_factor)
    blocks = batch_ranges(M, get_settings()["SAMPLE_BLOCK"])

    def run(index: int):
        block = blocks[index]
        streams = NoiseStreams(cfg.seed, purpose, index)
        return _couple_block(
            model, flow, x_tilde0[block.start:block.stop], x_hat0[block.start:block.stop],
            cfg, t0, epsilon, theta, streams,
        )

    logger.info(f"Coupling {M} pairs over {cfg.n_steps} steps (epsilon={epsilon}, theta={theta:.4g})")
    parts = map_ordered(run, range(len(blocks)), threads)
    x_tilde = np.concatenate([p[0] for p in parts], axis=1)
    x_hat = np.concatenate([p[1] for p in parts], axis=1)
    tau = np.concatenate([p[2] for p in parts])
    z_norm = np.linalg.norm(x_tilde - x_hat, axis=-1)
    fn = f_function(profile or model.profile, float(model.beta))
    f_z = fn(z_norm)
    return CouplingTrace(
        times=t0 + output_steps(cfg) * cfg.dt, x_tilde=x_tilde, x_hat=x_hat, z_norm=z_norm,
        f_z=f_z, tau=tau, epsilon=float(epsilon), merge_threshold=theta,
    )
