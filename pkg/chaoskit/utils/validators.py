import numpy as np

from chaoskit.core.exceptions import DomainError, ShapeMismatchError


def as_sample_cloud(values, name: str = "cloud") -> np.ndarray:
    """Coerce samples of (R^d)^m to shape (M, m, d)."""
    array = np.asarray(values, dtype=np.float64)
    if array.ndim == 1:
        array = array.reshape(-1, 1, 1)
    elif array.ndim == 2:
        array = array[:, None, :]
    if array.ndim != 3:
        raise ShapeMismatchError(f"{name} must have shape (M, m, d), got {array.shape}")
    if array.shape[0] == 0:
        raise DomainError(f"{name} is empty")
    if not np.all(np.isfinite(array)):
        raise DomainError(f"{name} contains non-finite coordinates")
    return array


def check_eta(eta: float) -> float:
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"eta must lie in (0, 1], got {eta}")
    return float(eta)
