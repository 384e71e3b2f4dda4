from dataclasses import dataclass
from functools import cached_property
from typing import List, Tuple

import numpy as np

from chaoskit.core.exceptions import DomainError, ShapeMismatchError

FLOW_RULES = ["piecewise-constant-left"]


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


def sort_cloud(cloud: np.ndarray) -> np.ndarray:
    """Lexicographic order of the points (first coordinate primary)."""
    cloud = np.asarray(cloud, dtype=np.float64)
    if cloud.shape[-1] == 1:
        return np.sort(cloud, axis=-2)
    if cloud.ndim == 2:
        return cloud[np.lexsort(cloud.T[::-1])]
    return np.stack([c[np.lexsort(c.T[::-1])] for c in cloud])


@dataclass(frozen=True)
class ParticleEnsemble:
    """N points in R^d at one time."""

    time: float
    states: np.ndarray

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.float64)
        if states.ndim == 1:
            states = states.reshape(-1, 1)
        if states.ndim != 2 or states.shape[0] < 1:
            raise DomainError(f"Ensemble needs shape (N, d) with N >= 1, got {states.shape}")
        if not np.all(np.isfinite(states)):
            raise DomainError("Ensemble contains non-finite coordinates")
        if self.time < 0:
            raise DomainError(f"Ensemble time must be nonnegative, got {self.time}")
        object.__setattr__(self, "states", _frozen(states))
        object.__setattr__(self, "time", float(self.time))

    @property
    def N(self) -> int:
        return self.states.shape[0]

    @property
    def d(self) -> int:
        return self.states.shape[1]

    @cached_property
    def sorted_states(self) -> np.ndarray:
        return sort_cloud(self.states)

    def permuted(self, permutation) -> "ParticleEnsemble":
        return ParticleEnsemble(self.time, self.states[np.asarray(permutation)])


@dataclass(frozen=True)
class MeasureFlow:
    """Reference clouds on a time grid standing in for the limit flow.

    Between grid times the cloud is held at its left value; a single-time
    flow is constant for all t >= t0.
    """

    times: np.ndarray
    clouds: np.ndarray
    rule: str = "piecewise-constant-left"

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64).ravel()
        clouds = np.asarray(self.clouds, dtype=np.float64)
        if clouds.ndim == 2:
            clouds = clouds[:, :, None]
        if clouds.ndim != 3 or clouds.shape[0] != times.size or clouds.shape[1] < 1:
            raise ShapeMismatchError(
                f"Flow needs clouds of shape ({times.size}, N_ref, d), got {clouds.shape}"
            )
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise DomainError("Flow time grid must be strictly increasing")
        if self.rule not in FLOW_RULES:
            raise DomainError(f"Unknown interpolation rule: {self.rule}")
        object.__setattr__(self, "times", _frozen(times))
        object.__setattr__(self, "clouds", _frozen(clouds))

    @classmethod
    def frozen(cls, cloud, time: float = 0.0) -> "MeasureFlow":
        """Time-homogeneous flow from one cloud."""
        cloud = np.asarray(cloud, dtype=np.float64)
        if cloud.ndim == 1:
            cloud = cloud.reshape(-1, 1)
        return cls(times=np.array([time]), clouds=cloud[None])

    @property
    def N_ref(self) -> int:
        return self.clouds.shape[1]

    @property
    def d(self) -> int:
        return self.clouds.shape[2]

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1]) if self.times.size > 1 else np.inf

    @cached_property
    def sorted_clouds(self) -> np.ndarray:
        return sort_cloud(self.clouds)

    def check_range(self, start: float, stop: float) -> None:
        tol = 1e-9 * max(1.0, abs(stop))
        if start < self.t_start - tol or start > self.t_end + tol:
            raise DomainError(f"Start time {start} lies outside the flow range [{self.t_start}, {self.t_end}]")
        if stop > self.t_end + tol:
            raise DomainError(f"Horizon {stop} exceeds the flow range ending at {self.t_end}")

    def index_at(self, t: float) -> int:
        tol = 1e-9 * max(1.0, abs(t))
        if t < self.t_start - tol:
            raise DomainError(f"Time {t} precedes the flow start {self.t_start}")
        idx = int(np.searchsorted(self.times, t + tol, side="right")) - 1
        return min(max(idx, 0), self.times.size - 1)

    def cloud_at(self, t: float) -> np.ndarray:
        return self.clouds[self.index_at(t)]

    def ensemble(self, k: int) -> ParticleEnsemble:
        return ParticleEnsemble(float(self.times[k]), self.clouds[k])


@dataclass(frozen=True)
class Trajectory:
    """Recorded states of M replicas: shape (K, M, N, d) on the output grid."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64).ravel()
        states = np.asarray(self.states, dtype=np.float64)
        if states.ndim != 4 or states.shape[0] != times.size:
            raise ShapeMismatchError(f"Trajectory needs states of shape ({times.size}, M, N, d), got {states.shape}")
        object.__setattr__(self, "times", _frozen(times))
        object.__setattr__(self, "states", _frozen(states))

    @property
    def replicas(self) -> int:
        return self.states.shape[1]

    @property
    def N(self) -> int:
        return self.states.shape[2]

    @property
    def d(self) -> int:
        return self.states.shape[3]

    def ensemble(self, k: int, replica: int = 0) -> ParticleEnsemble:
        return ParticleEnsemble(float(self.times[k]), self.states[k, replica])

    def ensembles(self, replica: int = 0) -> List[ParticleEnsemble]:
        return [self.ensemble(k, replica) for k in range(self.times.size)]

    def final(self, replica: int = 0) -> ParticleEnsemble:
        return self.ensemble(self.times.size - 1, replica)

    def marginal(self, k: int, particles: int = 1) -> np.ndarray:
        """First `particles` particles of every replica at record k: (M, particles, d)."""
        if particles > self.N:
            raise DomainError(f"Marginal size {particles} exceeds N={self.N}")
        return np.array(self.states[k, :, :particles, :])

    def as_flow(self, replica: int = 0) -> MeasureFlow:
        return MeasureFlow(self.times, self.states[:, replica])


@dataclass(frozen=True)
class CouplingTrace:
    """Paired decoupled trajectories under reflection coupling.

    Arrays are indexed (record, replica[, coordinate]); `tau` is the first
    recorded merge time per replica (inf if never merged).
    """

    times: np.ndarray
    x_tilde: np.ndarray
    x_hat: np.ndarray
    z_norm: np.ndarray
    f_z: np.ndarray
    tau: np.ndarray
    epsilon: float
    merge_threshold: float

    @property
    def smoothed(self) -> bool:
        return self.epsilon > 0

    @property
    def merged(self) -> np.ndarray:
        return np.isfinite(self.tau)

    @property
    def replicas(self) -> int:
        return self.z_norm.shape[1]

    def mean_f(self) -> Tuple[np.ndarray, np.ndarray]:
        """E f(|Z_t|) with its standard error per record."""
        M = self.replicas
        mean = self.f_z.mean(axis=1)
        stderr = self.f_z.std(axis=1, ddof=1) / np.sqrt(M) if M > 1 else np.zeros_like(mean)
        return mean, stderr

    def fraction_merged(self) -> np.ndarray:
        return (self.tau[None, :] <= self.times[:, None] + 1e-12).mean(axis=1)

    def survivors(self) -> np.ndarray:
        """Count of unmerged replicas per record."""
        return (self.tau[None, :] > self.times[:, None] + 1e-12).sum(axis=1)
