"""
Built-in test functions.

Every function maps (..., d) points to (...) values. The first group is
1-Lipschitz for the Euclidean norm and serves the gradient estimate; the
Hoelder anchors are 1-Lipschitz for sum_i |x^i - y^i|^eta on m-tuples and
serve the Kantorovich dual bound.
"""

from typing import Callable

import numpy as np

from chaoskit.core.exceptions import DomainError

TestFunction = Callable[[np.ndarray], np.ndarray]


def clipped_coordinate(index: int = 0, bound: float = 10.0) -> TestFunction:
    """x -> clamp(x_index, -bound, bound)."""
    if not bound > 0:
        raise DomainError(f"bound must be positive, got {bound}")

    def f(x: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(x)[..., index], -bound, bound)

    f.__name__ = f"clipped_coordinate_{index}"
    return f


def smoothed_distance(anchor, epsilon: float = 0.1) -> TestFunction:
    """x -> sqrt(|x - c|^2 + eps^2) - eps."""
    c = np.asarray(anchor, dtype=np.float64)

    def f(x: np.ndarray) -> np.ndarray:
        diff = np.asarray(x) - c
        return np.sqrt(np.sum(diff * diff, axis=-1) + epsilon ** 2) - epsilon

    f.__name__ = "smoothed_distance"
    return f


def gaussian_bump(center, width: float = 1.0) -> TestFunction:
    """x -> exp(-|x - c|^2 / (2 w^2))."""
    c = np.asarray(center, dtype=np.float64)

    def f(x: np.ndarray) -> np.ndarray:
        diff = np.asarray(x) - c
        return np.exp(-np.sum(diff * diff, axis=-1) / (2.0 * width ** 2))

    f.__name__ = "gaussian_bump"
    return f


def holder_anchor(anchor: np.ndarray, eta: float) -> TestFunction:
    """y -> sum_i |y^i - c^i|^eta for m-tuples y of shape (..., m, d)."""
    c = np.asarray(anchor, dtype=np.float64)

    def f(y: np.ndarray) -> np.ndarray:
        return np.sum(np.linalg.norm(np.asarray(y) - c, axis=-1) ** eta, axis=-1)

    return f


def signed_coordinate(component: int, axis: int, sign: float = 1.0) -> TestFunction:
    """y -> sign * y^component_axis, 1-Lipschitz for the eta = 1 cost."""

    def f(y: np.ndarray) -> np.ndarray:
        return sign * np.asarray(y)[..., component, axis]

    return f
