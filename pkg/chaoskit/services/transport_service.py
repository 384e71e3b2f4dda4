"""
Empirical L^eta-Wasserstein distances for the cost

    ||x - y||_{1,eta} = sum_i |x^i - y^i|^eta,   x, y in (R^d)^m,

between sample clouds of shape (M, m, d). Of two unequal clouds the larger
is subsampled without replacement.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from chaoskit.config import get_settings
from chaoskit.core.exceptions import CapacityError, DomainError, ShapeMismatchError
from chaoskit.core.streams import make_generator
from chaoskit.core.workers import batch_ranges, map_ordered
from chaoskit.models.observables import TestFunction, holder_anchor, signed_coordinate
from chaoskit.schemas.reports import WassersteinEstimate
from chaoskit.utils.validators import as_sample_cloud, check_eta

logger = logging.getLogger(__name__)

TRANSPORT_CHOICES = ["auto", "sorted-1d", "assignment", "dual-lower-bound"]


def _as_components(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x.reshape(-1, 1) if x.ndim < 2 else x


def cost_l1eta(x, y, eta: float) -> float:
    """sum over components of the Euclidean component distance raised to eta.

    Flat input is an m-tuple of scalar components, i.e. shape (m, 1).
    """
    eta = check_eta(eta)
    x, y = _as_components(x), _as_components(y)
    if x.shape != y.shape:
        raise ShapeMismatchError(f"Cost needs equal shapes, got {x.shape} and {y.shape}")
    return float(np.sum(np.linalg.norm(x - y, axis=-1) ** eta))


def cost_matrix(A: np.ndarray, B: np.ndarray, eta: float, threads: Optional[int] = None) -> np.ndarray:
    """(M_A, M_B) matrix of ||a - b||_{1,eta}, built in row blocks."""
    if A.shape[1:] != B.shape[1:]:
        raise ShapeMismatchError(f"Clouds live in different spaces: {A.shape[1:]} vs {B.shape[1:]}")

    def rows(block: range) -> np.ndarray:
        part = A[block.start:block.stop]
        total = np.zeros((part.shape[0], B.shape[0]))
        for i in range(A.shape[1]):
            distance = cdist(part[:, i, :], B[:, i, :])
            total += distance if eta == 1.0 else distance ** eta
        return total

    blocks = batch_ranges(A.shape[0], get_settings()["SAMPLE_BLOCK"])
    return np.concatenate(map_ordered(rows, blocks, threads))


def _assignment_value(cost: np.ndarray) -> float:
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean())


def _match_sizes(A: np.ndarray, B: np.ndarray, seed: int):
    """Subsample the larger cloud, without replacement, down to the smaller size."""
    if A.shape[0] == B.shape[0]:
        return A, B
    size = min(A.shape[0], B.shape[0])
    rng = make_generator(seed, "match-sizes")
    if A.shape[0] > size:
        A = A[np.sort(rng.choice(A.shape[0], size=size, replace=False))]
    else:
        B = B[np.sort(rng.choice(B.shape[0], size=size, replace=False))]
    logger.info(f"Subsampled the larger cloud to M={size}")
    return A, B


def _prepare(A, B, cap: int, subsample: bool, seed: int):
    A, B = as_sample_cloud(A, "cloudA"), as_sample_cloud(B, "cloudB")
    if A.shape[1:] != B.shape[1:]:
        raise ShapeMismatchError(f"Clouds live in different spaces: {A.shape[1:]} vs {B.shape[1:]}")
    A, B = _match_sizes(A, B, seed)
    size = A.shape[0]
    if size > cap:
        if not subsample:
            raise CapacityError(f"M={size} exceeds the assignment cap {cap}; enable subsampling")
        size = cap
    if A.shape[0] != size or B.shape[0] != size:
        rng = make_generator(seed, "subsample")
        A = A[np.sort(rng.choice(A.shape[0], size=size, replace=False))]
        B = B[np.sort(rng.choice(B.shape[0], size=size, replace=False))]
        logger.info(f"Subsampled clouds to M={size}")
    return A, B


def _bootstrap(statistic, M: int, resamples: int, seed: int) -> float:
    rng = make_generator(seed, "bootstrap")
    values = []
    for _ in range(resamples):
        ia = rng.integers(0, M, size=M)
        ib = rng.integers(0, M, size=M)
        values.append(statistic(ia, ib))
    return float(np.std(values, ddof=1)) if resamples > 1 else 0.0


def wasserstein_assignment(
    cloudA,
    cloudB,
    eta: float = 1.0,
    cap: Optional[int] = None,
    subsample: bool = False,
    bootstrap: bool = True,
    resamples: Optional[int] = None,
    seed: int = 0,
    threads: Optional[int] = None,
) -> WassersteinEstimate:
    """Exact W_eta between two empirical measures of M atoms each.

    Unequal clouds are matched by subsampling the larger one; `subsample`
    allows both to be cut down further to the assignment cap.

    The optimal coupling of two uniform measures with equal atom counts is a
    permutation, found by the linear assignment solver.
    """
    eta = check_eta(eta)
    settings = get_settings()
    cap = settings["ASSIGNMENT_CAP"] if cap is None else cap
    A, B = _prepare(cloudA, cloudB, cap, subsample, seed)
    cost = cost_matrix(A, B, eta, threads)
    value = _assignment_value(cost)
    stderr = None
    if bootstrap:
        resamples = settings["BOOTSTRAP_RESAMPLES"] if resamples is None else resamples
        stderr = _bootstrap(lambda ia, ib: _assignment_value(cost[np.ix_(ia, ib)]), A.shape[0], resamples, seed)
    return WassersteinEstimate(value=value, eta=eta, method="assignment", M=A.shape[0], stderr=stderr)


def _sorted_value(a: np.ndarray, b: np.ndarray, eta: float) -> float:
    gaps = np.abs(np.sort(a) - np.sort(b))
    return float(np.mean(gaps if eta == 1.0 else gaps ** eta))


def wasserstein_1d(
    cloudA,
    cloudB,
    eta: float = 1.0,
    bootstrap: bool = False,
    resamples: Optional[int] = None,
    seed: int = 0,
) -> WassersteinEstimate:
    """Monotone matching of sorted samples (m = d = 1).

    Exact for eta = 1. For eta < 1 the concave cost can favour non-monotone
    matchings, so the value is reported as an upper bound.
    """
    eta = check_eta(eta)
    A, B = as_sample_cloud(cloudA, "cloudA"), as_sample_cloud(cloudB, "cloudB")
    if A.shape[1:] != (1, 1) or B.shape[1:] != (1, 1):
        raise ShapeMismatchError("The sorted path needs scalar samples (m = d = 1)")
    A, B = _match_sizes(A, B, seed)
    a, b = A.ravel(), B.ravel()
    value = _sorted_value(a, b, eta)
    stderr = None
    if bootstrap:
        resamples = get_settings()["BOOTSTRAP_RESAMPLES"] if resamples is None else resamples
        stderr = _bootstrap(lambda ia, ib: _sorted_value(a[ia], b[ib], eta), a.size, resamples, seed)
    return WassersteinEstimate(
        value=value, eta=eta, method="sorted-1d", M=a.size, stderr=stderr, upper_bound=eta < 1.0,
    )


def default_dual_functions(cloudA, cloudB, eta: float, anchors: int = 8) -> List[TestFunction]:
    """Hoelder anchors at evenly spaced pooled samples, plus signed coordinates when eta = 1."""
    A, B = as_sample_cloud(cloudA, "cloudA"), as_sample_cloud(cloudB, "cloudB")
    pooled = np.concatenate([A, B])
    picks = np.unique(np.linspace(0, pooled.shape[0] - 1, min(anchors, pooled.shape[0])).astype(int))
    functions = [holder_anchor(pooled[k], eta) for k in picks]
    functions.append(holder_anchor(np.zeros(pooled.shape[1:]), eta))
    if eta == 1.0:
        m, d = pooled.shape[1:]
        for component in range(m):
            for axis in range(d):
                functions.append(signed_coordinate(component, axis, 1.0))
                functions.append(signed_coordinate(component, axis, -1.0))
    return functions


def dual_lower_bound(
    cloudA,
    cloudB,
    test_functions: Optional[Sequence[TestFunction]] = None,
    eta: float = 1.0,
) -> WassersteinEstimate:
    """max_f |mean_A f - mean_B f| over functions with [f]_{1,eta} <= 1."""
    eta = check_eta(eta)
    A, B = as_sample_cloud(cloudA, "cloudA"), as_sample_cloud(cloudB, "cloudB")
    if A.shape[1:] != B.shape[1:]:
        raise ShapeMismatchError(f"Clouds live in different spaces: {A.shape[1:]} vs {B.shape[1:]}")
    functions = test_functions if test_functions is not None else default_dual_functions(A, B, eta)
    value = 0.0
    for f in functions:
        value = max(value, abs(float(np.mean(f(A))) - float(np.mean(f(B)))))
    return WassersteinEstimate(value=value, eta=eta, method="dual-lower-bound", M=min(A.shape[0], B.shape[0]))


def wasserstein(
    cloudA,
    cloudB,
    eta: float = 1.0,
    method: str = "auto",
    bootstrap: bool = True,
    resamples: Optional[int] = None,
    seed: int = 0,
    subsample: bool = False,
    threads: Optional[int] = None,
) -> WassersteinEstimate:
    """Dispatch: auto uses the sorted path for scalar samples at eta = 1, else the assignment."""
    A, B = as_sample_cloud(cloudA, "cloudA"), as_sample_cloud(cloudB, "cloudB")
    if method == "auto":
        method = "sorted-1d" if (A.shape[1:] == (1, 1) and eta == 1.0) else "assignment"
    if method == "sorted-1d":
        return wasserstein_1d(A, B, eta, bootstrap=bootstrap, resamples=resamples, seed=seed)
    if method == "assignment":
        return wasserstein_assignment(
            A, B, eta, subsample=subsample, bootstrap=bootstrap, resamples=resamples, seed=seed, threads=threads,
        )
    if method == "dual-lower-bound":
        return dual_lower_bound(A, B, eta=eta)
    raise DomainError(f"Unknown transport method: {method}")
