import json
import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from chaoskit.config import get_settings
from chaoskit.core.exceptions import DomainError, ModelLoadError, NumericError
from chaoskit.models.ensemble import ParticleEnsemble
from chaoskit.models.families import FAMILY_BUILDERS
from chaoskit.models.model_spec import ModelSpec
from chaoskit.schemas.model import ModelDocument
from chaoskit.schemas.reports import AssumptionReport, ViolationWitness

logger = logging.getLogger(__name__)

PairFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def cloud_average(fn: PairFn, x: np.ndarray, cloud: np.ndarray, block: Optional[int] = None) -> np.ndarray:
    """(1/Q) sum_j fn(x_p, y_j) for every row p, with a fixed summation order.

    Args:
        fn: pairwise evaluator returning (..., *trailing)
        x: (B, P, d) evaluation points
        cloud: (B or 1, Q, d) cloud, already in the order the sum should follow

    Returns:
        (B, P, *trailing). Blocks of the cloud are reduced with numpy and the
        block sums are accumulated with Kahan compensation.
    """
    block = block or get_settings()["CLOUD_BLOCK"]
    Q = cloud.shape[1]
    total = None
    compensation = None
    for start in range(0, Q, block):
        ys = cloud[:, None, start:start + block, :]
        values = fn(x[:, :, None, :], ys)
        if not np.all(np.isfinite(values)):
            _raise_non_finite(values, x, ys)
        partial = np.sum(values, axis=2)
        if total is None:
            total = np.array(partial, dtype=np.float64)
            compensation = np.zeros_like(total)
            continue
        corrected = partial - compensation
        updated = total + corrected
        compensation = (updated - total) - corrected
        total = updated
    return total / Q


def _raise_non_finite(values: np.ndarray, x: np.ndarray, ys: np.ndarray) -> None:
    bad = np.argwhere(~np.isfinite(values))[0]
    b, p, j = int(bad[0]), int(bad[1]), int(bad[2])
    xb = x[min(b, x.shape[0] - 1), p]
    yb = ys[min(b, ys.shape[0] - 1), 0, j]
    pair = (xb.tolist(), yb.tolist())
    raise NumericError(f"Non-finite evaluator output at pair x={pair[0]}, y={pair[1]}", pair=pair)


def mean_field_coefficients(
    model: ModelSpec, x: np.ndarray, sorted_cloud: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Drift (B, P, d) and diffusion (B, P, d, n) of the points x against a cloud."""
    drift = model.b0(x)
    if not np.all(np.isfinite(drift)):
        idx = tuple(np.argwhere(~np.isfinite(drift))[0][:-1])
        raise NumericError(f"Non-finite b0 at x={x[idx].tolist()}", pair=(x[idx].tolist(), None))
    drift = drift + cloud_average(model.b1, x, sorted_cloud)
    diffusion = cloud_average(model.sigma_tilde, x, sorted_cloud)
    return drift, diffusion


def eval_mean_field_fields(model: ModelSpec, x, cloud: ParticleEnsemble) -> Tuple[np.ndarray, np.ndarray]:
    """Drift b0(x) + (1/N) sum_j b1(x, x^j) and diffusion (1/N) sum_j sigma_tilde(x, x^j).

    The sum runs over every cloud member, the self term included when x
    belongs to the cloud. The cloud is summed in lexicographic order, so the
    result does not depend on how the cloud is listed.
    """
    if not isinstance(cloud, ParticleEnsemble):
        cloud = ParticleEnsemble(0.0, cloud)
    point = np.asarray(x, dtype=np.float64).reshape(1, 1, -1)
    if point.shape[-1] != model.d or not np.all(np.isfinite(point)):
        raise DomainError(f"x must be a finite point of R^{model.d}")
    drift, diffusion = mean_field_coefficients(model, point, cloud.sorted_states[None])
    return drift[0, 0], diffusion[0, 0]


def power_iteration(matrices: np.ndarray, iterations: int = 100, seed: int = 0) -> np.ndarray:
    """Largest eigenvalue of each symmetric positive semidefinite matrix in a stack."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(matrices.shape[:-1])
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    for _ in range(iterations):
        w = np.einsum("...ij,...j->...i", matrices, v)
        norm = np.linalg.norm(w, axis=-1, keepdims=True)
        if np.all(norm == 0):
            return np.zeros(matrices.shape[:-2])
        v = np.where(norm > 0, w / np.where(norm > 0, norm, 1.0), v)
    return np.einsum("...i,...ij,...j->...", v, matrices, v)


def _ball_samples(rng: np.random.Generator, count: int, d: int, radius: float) -> np.ndarray:
    directions = rng.standard_normal((count, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.uniform(size=(count, 1)) ** (1.0 / d)
    return directions * radii


def _normalized_ratio(lhs: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Ratio that is <= 1 exactly when lhs <= rhs, for rhs of either sign."""
    ratio = np.empty_like(lhs)
    pos, neg, zero = rhs > 0, rhs < 0, rhs == 0
    ratio[pos] = lhs[pos] / rhs[pos]
    negative = np.full(np.count_nonzero(neg), np.inf)
    lhs_neg, rhs_neg = lhs[neg], rhs[neg]
    below = lhs_neg < 0
    negative[below] = rhs_neg[below] / lhs_neg[below]
    ratio[neg] = negative
    ratio[zero] = np.where(lhs[zero] <= 0, 0.0, np.inf)
    return ratio


def verify_assumptions(
    model: ModelSpec,
    sample_budget: int,
    radius: float,
    seed: int,
    tolerance: float = 1e-9,
    max_witnesses: int = 5,
) -> AssumptionReport:
    """Audit the structural bounds on random pairs drawn from a ball.

    Every check is reported as a ratio normalized so that the declared bound
    corresponds to 1.
    """
    if sample_budget < 1:
        raise DomainError("sample_budget must be at least 1")
    if not radius > 0:
        raise DomainError("radius must be positive")
    c = model.constants
    rng = np.random.default_rng(seed)
    d = model.d
    x1, x2, y1, y2 = (_ball_samples(rng, sample_budget, d, radius) for _ in range(4))
    dx = np.linalg.norm(x1 - x2, axis=1)
    dy = np.linalg.norm(y1 - y2, axis=1)

    s1 = model.sigma_tilde(x1, y1)
    s2 = model.sigma_tilde(x2, y2)
    hs = 0.5 * np.sum((s1 - s2) ** 2, axis=(-2, -1))
    ratios: Dict[str, np.ndarray] = {}
    ratios["sigma_lipschitz"] = _normalized_ratio(hs, c.Ksigma * (dx ** 2 + dy ** 2))

    gram = np.einsum("sij,skj->sik", s1, s1)
    ratios["sigma_bound"] = _normalized_ratio(power_iteration(gram, seed=seed), np.full(sample_budget, c.Ksigma))

    db1 = np.linalg.norm(model.b1(x1, y1) - model.b1(x2, y2), axis=1)
    ratios["drift_lipschitz"] = _normalized_ratio(db1, c.Kb * (dx + dy))

    inner = np.sum((x1 - x2) * (model.b0(x1) - model.b0(x2)), axis=1)
    ratios["dissipativity"] = _normalized_ratio(inner, model.profile(dx) * dx)

    witnesses: List[ViolationWitness] = []
    worst: Dict[str, float] = {}
    for name, values in ratios.items():
        finite_or_inf = np.nan_to_num(values, nan=np.inf)
        worst[name] = float(np.max(finite_or_inf))
        for idx in np.argsort(-finite_or_inf)[:max_witnesses]:
            if finite_or_inf[idx] > 1.0 + tolerance:
                witnesses.append(ViolationWitness(
                    check=name, ratio=float(finite_or_inf[idx]),
                    x1=x1[idx].tolist(), x2=x2[idx].tolist(), y1=y1[idx].tolist(), y2=y2[idx].tolist(),
                ))
    passed = all(value <= 1.0 + tolerance for value in worst.values())
    if not passed:
        logger.warning(f"Assumption audit failed for {model.family}: {worst}")
    return AssumptionReport(
        ratios=worst, sample_count=sample_budget, radius=float(radius),
        tolerance=tolerance, witnesses=witnesses, passed=passed,
    )


def _error_field(error: ValidationError, prefix: str = "") -> Tuple[str, str]:
    first = error.errors()[0]
    loc = ".".join(str(part) for part in first.get("loc", ()))
    field = f"{prefix}.{loc}" if prefix and loc else (prefix or loc)
    return field, first.get("msg", str(error))


def load_model(document: Union[Dict[str, Any], ModelDocument, str, Path]) -> ModelSpec:
    """Build a ModelSpec from a JSON document (dict, ModelDocument or file path).

    Declared constants replace the certified ones and mark the model unverified.
    """
    if isinstance(document, (str, Path)):
        try:
            with open(document, "r", encoding="utf-8") as handle:
                document = json.load(handle)
        except (OSError, json.JSONDecodeError) as e:
            raise ModelLoadError(f"cannot read model document: {e}", field="document")
    if not isinstance(document, ModelDocument):
        try:
            document = ModelDocument(**document)
        except ValidationError as e:
            field, message = _error_field(e)
            raise ModelLoadError(message, field=field)
        except TypeError as e:
            raise ModelLoadError(str(e), field="document")
    try:
        model = FAMILY_BUILDERS[document.family](document)
    except ValidationError as e:
        field, message = _error_field(e, prefix="params")
        raise ModelLoadError(message, field=field)
    if document.drift_lipschitz is not None:
        model = replace(model, drift_lipschitz=document.drift_lipschitz)
    declared = document.constants.model_dump(exclude_none=True)
    if declared:
        try:
            model = model.with_constants(**declared).with_status("unverified")
        except DomainError as e:
            raise ModelLoadError(e.message, field="constants")
        if "K2" in declared and model.profile_override is not None:
            logger.info("Declared K2 replaces the certified linear profile with the piecewise profile")
            model = replace(model, profile_override=None)
    logger.info(f"Loaded model family={model.family} d={model.d} n={model.n} status={model.status}")
    return model
