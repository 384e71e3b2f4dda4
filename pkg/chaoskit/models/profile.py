"""
Dissipativity profiles gamma(r).

A drift b0 is partially dissipative when
    <x - y, b0(x) - b0(y)> <= gamma(|x - y|) |x - y|
with gamma positive at short range and -K2 r at long range.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import integrate

from chaoskit.core.exceptions import DomainError

logger = logging.getLogger(__name__)

PROFILE_KINDS = ["piecewise", "user-override"]

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DissipativityProfile:
    """Piecewise profile (K1, K2, R) or a user override gamma(r).

    Overrides declare K2 and a tail radius beyond which gamma(v) <= -K2 v.
    """

    kind: str
    K1: float = 0.0
    K2: float = 1.0
    R: float = 1.0
    evaluator: Optional[ArrayFn] = None
    antiderivative_fn: Optional[ArrayFn] = None
    tail_radius: float = 0.0

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise DomainError(f"Unknown profile kind: {self.kind}")
        if not self.K2 > 0:
            raise DomainError(f"K2 must be positive, got {self.K2}")
        if self.kind == "piecewise":
            if self.K1 < 0 or not self.R > 0:
                raise DomainError(f"Invalid piecewise profile (K1={self.K1}, R={self.R})")
        elif self.evaluator is None:
            raise DomainError("Override profile requires an evaluator")

    @classmethod
    def piecewise(cls, K1: float, K2: float, R: float) -> "DissipativityProfile":
        return cls(kind="piecewise", K1=float(K1), K2=float(K2), R=float(R))

    @classmethod
    def override(
        cls,
        gamma: ArrayFn,
        K2: float,
        tail_radius: float = 0.0,
        antiderivative: Optional[ArrayFn] = None,
    ) -> "DissipativityProfile":
        return cls(
            kind="user-override",
            K2=float(K2),
            evaluator=gamma,
            antiderivative_fn=antiderivative,
            tail_radius=float(tail_radius),
        )

    @classmethod
    def linear(cls, K2: float) -> "DissipativityProfile":
        """gamma(r) = -K2 r, with its closed-form antiderivative."""
        slope = float(K2)
        return cls.override(
            lambda r: -slope * np.asarray(r, dtype=np.float64),
            K2=slope,
            antiderivative=lambda s: -0.5 * slope * np.asarray(s, dtype=np.float64) ** 2,
        )

    @property
    def is_piecewise(self) -> bool:
        return self.kind == "piecewise"

    @property
    def tail_start(self) -> float:
        """Radius beyond which gamma(v) <= -K2 v holds."""
        return 2.0 * self.R if self.is_piecewise else self.tail_radius

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        if not self.is_piecewise:
            return np.asarray(self.evaluator(r), dtype=np.float64)
        K1, K2, R = self.K1, self.K2, self.R
        middle = (-(K1 + K2) * (r - R) / R + K1) * r
        return np.where(r <= R, K1 * r, np.where(r <= 2.0 * R, middle, -K2 * r))

    def antiderivative(self, s) -> np.ndarray:
        """Gamma(s) = int_0^s gamma(v) dv."""
        s = np.asarray(s, dtype=np.float64)
        if self.is_piecewise:
            return self._piecewise_antiderivative(s)
        if self.antiderivative_fn is not None:
            return np.asarray(self.antiderivative_fn(s), dtype=np.float64)
        flat = np.atleast_1d(s).ravel()
        breaks = [self.tail_radius] if self.tail_radius > 0 else None
        values = np.empty_like(flat)
        for idx, upper in enumerate(flat):
            points = [p for p in (breaks or []) if 0 < p < upper] or None
            values[idx], _ = integrate.quad(
                lambda v: float(self.evaluator(np.float64(v))), 0.0, float(upper),
                points=points, epsabs=1e-14, epsrel=1e-13, limit=200,
            )
        return values.reshape(np.shape(s))

    def _piecewise_antiderivative(self, s: np.ndarray) -> np.ndarray:
        K1, K2, R = self.K1, self.K2, self.R

        def middle(v):
            return -(K1 + K2) / R * (v ** 3 / 3.0 - R * v ** 2 / 2.0) + K1 * v ** 2 / 2.0

        first = 0.5 * K1 * np.minimum(s, R) ** 2
        upto = np.clip(s, R, 2.0 * R)
        second = middle(upto) - middle(R)
        third = np.where(s > 2.0 * R, -0.5 * K2 * (s ** 2 - 4.0 * R ** 2), 0.0)
        return first + second + third


def gamma_profile(profile: DissipativityProfile, r) -> np.ndarray:
    """Evaluate gamma(r); r must be nonnegative."""
    r_arr = np.asarray(r, dtype=np.float64)
    if np.any(r_arr < 0) or not np.all(np.isfinite(r_arr)):
        raise DomainError(f"gamma is defined for finite r >= 0, got {r}")
    value = profile(r_arr)
    return float(value) if np.ndim(value) == 0 else value


def sampled_dissipativity(
    b0: ArrayFn,
    d: int,
    box_radius: float,
    r_grid: np.ndarray,
    n_mid: int = 201,
    n_dir: int = 64,
    seed: int = 0,
) -> np.ndarray:
    """Grid estimate of sup_{|x-y|=r} <x - y, b0(x) - b0(y)> / r over a box.

    In one dimension the pair is (m + r/2, m - r/2) for midpoints m on a grid;
    in higher dimensions midpoints and directions are sampled.
    """
    r_grid = np.asarray(r_grid, dtype=np.float64)
    rng = np.random.default_rng(seed)
    if d == 1:
        mids = np.linspace(-box_radius, box_radius, n_mid).reshape(-1, 1)
        directions = np.ones((1, 1))
    else:
        mids = rng.uniform(-box_radius, box_radius, size=(n_mid, d))
        raw = rng.standard_normal((n_dir, d))
        directions = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    envelope = np.full(r_grid.shape, -np.inf)
    for k, r in enumerate(r_grid):
        offsets = 0.5 * r * directions
        x = (mids[:, None, :] + offsets[None, :, :]).reshape(-1, d)
        y = (mids[:, None, :] - offsets[None, :, :]).reshape(-1, d)
        inside = np.all(np.abs(x) <= box_radius, axis=1) & np.all(np.abs(y) <= box_radius, axis=1)
        if not np.any(inside):
            continue
        x, y = x[inside], y[inside]
        inner = np.sum((x - y) * (b0(x) - b0(y)), axis=1)
        envelope[k] = np.max(inner) / r
    return envelope


def fit_dissipativity(
    b0: ArrayFn,
    d: int,
    box_radius: float = 5.0,
    K2: float = 1.0,
    r_grid: Optional[np.ndarray] = None,
    seed: int = 0,
    margin: float = 0.01,
) -> Tuple[DissipativityProfile, np.ndarray, np.ndarray]:
    """Smallest piecewise profile (for the given K2) dominating the sampled envelope.

    K1 is the largest sampled slope envelope(r)/r; R is located by bisection,
    the piecewise profile being nondecreasing in R, then widened by `margin`.

    Returns:
        (profile, r_grid, envelope)
    """
    if r_grid is None:
        r_grid = np.linspace(0.01, 2.0 * box_radius, 400)
    envelope = sampled_dissipativity(b0, d, box_radius, r_grid, seed=seed)
    valid = np.isfinite(envelope)
    r_valid, env_valid = r_grid[valid], envelope[valid]
    K1 = max(0.0, float(np.max(env_valid / r_valid)))
    slack = 1e-9 * (1.0 + np.abs(env_valid))

    def dominates(R: float) -> bool:
        return bool(np.all(DissipativityProfile.piecewise(K1, K2, R)(r_valid) >= env_valid - slack))

    lo, hi = 1e-6, float(np.max(r_valid))
    if not dominates(hi):
        hi *= 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if dominates(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-10 * hi:
            break
    profile = DissipativityProfile.piecewise(K1, K2, hi * (1.0 + margin))
    logger.info(f"Fitted piecewise profile K1={profile.K1:.6g}, K2={profile.K2:.6g}, R={profile.R:.6g}")
    return profile, r_grid, envelope
