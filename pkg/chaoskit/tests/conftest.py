import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from chaoskit.main import app
from chaoskit.models.families import linear_model
from chaoskit.models.model_spec import (
    ModelConstants, ModelSpec, zero_drift, zero_pair_diffusion, zero_pair_drift,
)
from chaoskit.models.profile import DissipativityProfile
from chaoskit.schemas.model import SigmaParams


@pytest.fixture
def client():
    """Create a test client for the FastAPI app."""
    return TestClient(app)


@pytest.fixture
def ou_model():
    """b0 = -x, no interaction, beta = 1; lambda0 = 1."""
    return linear_model(d=1, n=1, beta=1.0, a=1.0)


@pytest.fixture
def brownian_model():
    """All drifts and the pairwise diffusion vanish."""
    return ModelSpec(
        d=1, n=1, beta=1.0, b0=zero_drift, b1=zero_pair_drift, sigma_tilde=zero_pair_diffusion(1),
        constants=ModelConstants(K1=0.0, K2=1.0, R=1.0),
        profile_override=DissipativityProfile.linear(1.0),
    )


@pytest.fixture
def interacting_model():
    """b0 = -x, b1 = 0.05 (y - x), bounded-smooth sigma_tilde of scale 0.1."""
    return linear_model(
        d=1, n=1, beta=1.0, a=1.0, kappa=0.05,
        sigma=SigmaParams(kind="bounded-smooth", scale=0.1),
    )


@pytest.fixture
def linear_document():
    return {"family": "linear", "d": 1, "n": 1, "beta": 1.0, "params": {"a": 2.0}}


@pytest.fixture
def write_config(tmp_path):
    """Write a JSON document under tmp_path and return its path."""
    def _write(payload, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path
    return _write


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
