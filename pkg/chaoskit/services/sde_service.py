"""
Euler-Maruyama engines for the particle system, its self-consistent
reference flow and the decoupled SDE under a frozen measure flow.
"""

import logging
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from chaoskit.config import get_settings
from chaoskit.core.exceptions import BlowUpError, DomainError, ShapeMismatchError
from chaoskit.core.streams import NoiseStreams, make_generator
from chaoskit.core.workers import batch_ranges, map_ordered
from chaoskit.models.ensemble import MeasureFlow, ParticleEnsemble, Trajectory, sort_cloud
from chaoskit.models.model_spec import ModelSpec
from chaoskit.schemas.simulation import BaseLaw, InitialLaw, SimConfig
from chaoskit.services.model_service import mean_field_coefficients

logger = logging.getLogger(__name__)

InitSource = Union[InitialLaw, ParticleEnsemble, np.ndarray]


def _as_vector(value, d: int, name: str) -> np.ndarray:
    array = np.asarray(value, dtype=np.float64).ravel()
    if array.size == 1:
        return np.full(d, float(array[0]))
    if array.size != d:
        raise ShapeMismatchError(f"{name} has {array.size} entries, expected {d}")
    return array


def sample_base(law: BaseLaw, size: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """(size, d) iid draws from a built-in law."""
    if law.type == "point":
        return np.tile(_as_vector(law.mean, d, "mean"), (size, 1))
    if law.type == "gaussian":
        return _as_vector(law.mean, d, "mean") + law.std * rng.standard_normal((size, d))
    if law.type == "uniform":
        low, high = _as_vector(law.low, d, "low"), _as_vector(law.high, d, "high")
        return rng.uniform(low, high, size=(size, d))
    raise DomainError(f"Unknown base law: {law.type}")


def sample_exchangeable_init(
    law: InitialLaw, N: int, seed: int, d: int = 1, replica: int = 0, purpose: str = "init",
) -> ParticleEnsemble:
    """One draw of the N-particle initial configuration.

    iid: N independent draws from the base law. mixture: one latent label
    for the whole configuration, then N iid draws given the label.
    """
    if N < 1:
        raise DomainError(f"N must be at least 1, got {N}")
    rng = make_generator(seed, purpose, replica)
    if law.kind == "iid":
        states = sample_base(law.base, N, d, rng)
    elif law.kind == "mixture":
        label = int(rng.choice(len(law.components), p=law.normalized_weights()))
        states = sample_base(law.components[label], N, d, rng)
    else:
        raise DomainError(f"Unknown init kind: {law.kind}")
    return ParticleEnsemble(0.0, states)


def sample_marginal(law: InitialLaw, count: int, seed: int, d: int = 1, purpose: str = "marginal") -> np.ndarray:
    """(count, d) iid draws from the one-particle marginal of the initial law."""
    rng = make_generator(seed, purpose)
    if law.kind == "iid":
        return sample_base(law.base, count, d, rng)
    labels = rng.choice(len(law.components), size=count, p=law.normalized_weights())
    out = np.empty((count, d))
    for k, component in enumerate(law.components):
        mask = labels == k
        out[mask] = sample_base(component, int(mask.sum()), d, rng)
    return out


def output_steps(cfg: SimConfig) -> np.ndarray:
    """Step indices recorded on the output grid; the final step is always kept."""
    steps = np.arange(0, cfg.n_steps + 1, cfg.output_every)
    if steps[-1] != cfg.n_steps:
        steps = np.append(steps, cfg.n_steps)
    return steps


def _diffuse(diffusion: np.ndarray, dB: np.ndarray) -> np.ndarray:
    # Row-local contraction over n keeps each particle's update independent of its position
    return np.sum(diffusion * dB[..., None, :], axis=-1)


def _euler_update(
    model: ModelSpec, x: np.ndarray, sorted_cloud: np.ndarray, dt: float, dW: np.ndarray, dB: np.ndarray,
) -> np.ndarray:
    drift, diffusion = mean_field_coefficients(model, x, sorted_cloud)
    return x + drift * dt + math.sqrt(model.beta) * dW + _diffuse(diffusion, dB)


def step_particle_system(
    model: ModelSpec,
    ensemble: ParticleEnsemble,
    dt: float,
    noise: Tuple[np.ndarray, np.ndarray],
    step: int = 0,
) -> ParticleEnsemble:
    """One Euler-Maruyama step of the N-particle system.

    X^i <- X^i + [b0(X^i) + (1/N) sum_j b1(X^i, X^j)] dt + sqrt(beta) dW^i
               + [(1/N) sum_j sigma_tilde(X^i, X^j)] dB^i
    """
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    dW = np.asarray(noise[0], dtype=np.float64).reshape(ensemble.N, -1)
    dB = np.asarray(noise[1], dtype=np.float64).reshape(ensemble.N, -1)
    if dW.shape[1] != model.d or dB.shape[1] != model.n:
        raise ShapeMismatchError(
            f"Noise shapes {dW.shape}, {dB.shape} do not match (N, d)=({ensemble.N}, {model.d}), n={model.n}"
        )
    updated = _euler_update(model, ensemble.states[None], ensemble.sorted_states[None], dt, dW[None], dB[None])[0]
    if not np.all(np.isfinite(updated)):
        raise BlowUpError("Particle system produced a non-finite state", step=step)
    return ParticleEnsemble(ensemble.time + dt, updated)


def _initial_states(init: InitSource, N: Optional[int], cfg: SimConfig, d: int, purpose: str) -> np.ndarray:
    """(M, N, d) initial configurations for every replica."""
    if isinstance(init, InitialLaw):
        if N is None:
            raise DomainError("N is required when the initial condition is a law")
        return np.stack([
            sample_exchangeable_init(init, N, cfg.seed, d, replica=r, purpose=f"{purpose}-init").states
            for r in range(cfg.replicas)
        ])
    if isinstance(init, ParticleEnsemble):
        return np.broadcast_to(init.states, (cfg.replicas,) + init.states.shape).copy()
    states = np.asarray(init, dtype=np.float64)
    if states.ndim == 2:
        states = np.broadcast_to(states, (cfg.replicas,) + states.shape).copy()
    if states.ndim != 3 or states.shape[0] != cfg.replicas or states.shape[2] != d:
        raise ShapeMismatchError(f"Initial states must have shape ({cfg.replicas}, N, {d}), got {states.shape}")
    return states


def _simulate_batch(
    model: ModelSpec,
    x0: np.ndarray,
    replicas: range,
    cfg: SimConfig,
    purpose: str,
    stream_permutation: Optional[np.ndarray],
) -> np.ndarray:
    B, N, d = x0.shape
    streams = [NoiseStreams(cfg.seed, purpose, r) for r in replicas]
    dW_iter = [s.stepper("W", (N, d), cfg.dt) for s in streams]
    dB_iter = [s.stepper("B", (N, model.n), cfg.dt) for s in streams]
    record = output_steps(cfg)
    out = np.empty((record.size, B, N, d))
    out[0] = x0
    x = x0.copy()
    slot = 1
    for step in range(1, cfg.n_steps + 1):
        dW = np.stack([next(it) for it in dW_iter])
        dB = np.stack([next(it) for it in dB_iter])
        if stream_permutation is not None:
            dW, dB = dW[:, stream_permutation], dB[:, stream_permutation]
        x = _euler_update(model, x, sort_cloud(x), cfg.dt, dW, dB)
        if not np.all(np.isfinite(x)):
            raise BlowUpError(f"Particle system replicas {replicas.start}-{replicas.stop - 1} blew up", step=step)
        if slot < record.size and step == record[slot]:
            out[slot] = x
            slot += 1
    return out


def simulate_particle_system(
    model: ModelSpec,
    init: InitSource,
    cfg: SimConfig,
    N: Optional[int] = None,
    purpose: str = "particles",
    stream_permutation: Optional[Sequence[int]] = None,
    threads: Optional[int] = None,
) -> Trajectory:
    """M replicas of the N-particle system recorded on the output grid.

    Replica r draws its increments from stream (seed, purpose, r); row i of
    each draw drives particle stream_permutation[i] (identity by default).
    Replicas run in fixed-size batches spread over the worker pool.
    """
    x0 = _initial_states(init, N, cfg, model.d, purpose)
    perm = None
    if stream_permutation is not None:
        perm = np.asarray(stream_permutation, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(x0.shape[1])):
            raise DomainError("stream_permutation must be a permutation of the particle indices")
    batches = batch_ranges(cfg.replicas, get_settings()["REPLICA_BATCH"])

    def run(batch: range) -> np.ndarray:
        return _simulate_batch(model, x0[batch.start:batch.stop], batch, cfg, purpose, perm)

    logger.info(f"Simulating {cfg.replicas} replicas of N={x0.shape[1]} over {cfg.n_steps} steps")
    parts = map_ordered(run, batches, threads)
    times = output_steps(cfg) * cfg.dt
    return Trajectory(times=times, states=np.concatenate(parts, axis=1))


def simulate_reference_flow(
    model: ModelSpec,
    N_ref: int,
    init: InitialLaw,
    cfg: SimConfig,
    largest_n: Optional[int] = None,
) -> MeasureFlow:
    """Self-consistent N_ref-particle cloud standing in for the limit flow.

    The initial cloud is iid from the one-particle marginal of the initial law.
    """
    factor = get_settings()["N_REF_FACTOR"]
    if largest_n is not None and N_ref < factor * largest_n:
        logger.warning(f"N_ref={N_ref} is below {factor}x the largest experiment N={largest_n}")
    cloud = sample_marginal(init, N_ref, cfg.seed, model.d, purpose="reference-init")
    single = cfg.model_copy(update={"replicas": 1})
    trajectory = simulate_particle_system(model, cloud[None], single, purpose="reference")
    return trajectory.as_flow()


def _integrate_decoupled(
    model: ModelSpec,
    flow: MeasureFlow,
    x0: np.ndarray,
    t0: float,
    dt: float,
    n_steps: int,
    record: np.ndarray,
    streams: NoiseStreams,
) -> np.ndarray:
    """Decoupled Euler steps for x0 of shape (G, S, d).

    The (S, d) noise is shared by all G groups (common random numbers).
    Returns (len(record), G, S, d).
    """
    G, S, d = x0.shape
    dW_iter = streams.stepper("W", (S, d), dt)
    dB_iter = streams.stepper("B", (S, model.n), dt)
    out = np.empty((record.size, G, S, d))
    out[0] = x0
    x = x0.reshape(1, G * S, d).copy()
    slot = 1
    for step in range(1, n_steps + 1):
        cloud = flow.sorted_clouds[flow.index_at(t0 + (step - 1) * dt)][None]
        dW = np.broadcast_to(next(dW_iter), (G, S, d)).reshape(1, G * S, d)
        dB = np.broadcast_to(next(dB_iter), (G, S, model.n)).reshape(1, G * S, model.n)
        x = _euler_update(model, x, cloud, dt, dW, dB)
        if not np.all(np.isfinite(x)):
            raise BlowUpError("Decoupled SDE produced a non-finite state", step=step)
        if slot < record.size and step == record[slot]:
            out[slot] = x.reshape(G, S, d)
            slot += 1
    return out


def simulate_decoupled(
    model: ModelSpec,
    flow: MeasureFlow,
    start: Tuple[float, np.ndarray],
    cfg: SimConfig,
    purpose: str = "decoupled",
    threads: Optional[int] = None,
) -> Trajectory:
    """M samples of dX = b0 dt + <b1(X, .), mu_t> dt + sqrt(beta) dW + <sigma_tilde(X, .), mu_t> dB.

    `start` is (s, z) with z a point (d,) shared by all samples or per-sample
    starts (M, d). Samples are processed in fixed blocks, each with its own stream.
    """
    s, z = float(start[0]), np.asarray(start[1], dtype=np.float64)
    flow.check_range(s, s + cfg.T)
    if flow.d != model.d:
        raise ShapeMismatchError(f"Flow dimension {flow.d} does not match model dimension {model.d}")
    M = cfg.replicas
    if z.ndim <= 1:
        z = np.broadcast_to(_as_vector(z, model.d, "z"), (M, model.d))
    if z.shape != (M, model.d):
        raise ShapeMismatchError(f"Starting points must have shape ({M}, {model.d}), got {z.shape}")
    record = output_steps(cfg)
    blocks = batch_ranges(M, get_settings()["SAMPLE_BLOCK"])

    def run(index: int) -> np.ndarray:
        block = blocks[index]
        streams = NoiseStreams(cfg.seed, purpose, index)
        x0 = np.array(z[block.start:block.stop])[None]
        return _integrate_decoupled(model, flow, x0, s, cfg.dt, cfg.n_steps, record, streams)[:, 0]

    parts = map_ordered(run, range(len(blocks)), threads)
    states = np.concatenate(parts, axis=1)[:, :, None, :]
    return Trajectory(times=s + record * cfg.dt, states=states)
