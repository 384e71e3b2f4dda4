import os
from dotenv import load_dotenv
from functools import lru_cache

from chaoskit import __version__

# Load environment variables
load_dotenv()


@lru_cache()
def get_settings():
    """Get laboratory settings"""
    return {
        # Project
        "API_V1_STR": "/api/v1",
        "PROJECT_NAME": "chaoskit",
        "VERSION": __version__,

        # Execution
        "THREADS": int(os.getenv("CHAOSKIT_THREADS", "1")),
        "OUTPUT_DIR": os.getenv("CHAOSKIT_OUTPUT_DIR", "runs"),
        "LOG_LEVEL": os.getenv("CHAOSKIT_LOG_LEVEL", "INFO").upper(),
        "DEBUG": os.getenv("CHAOSKIT_DEBUG", "False").lower() == "true",

        # Replicas are processed in batches of this size whatever the thread count
        "REPLICA_BATCH": int(os.getenv("CHAOSKIT_REPLICA_BATCH", "64")),
        "SAMPLE_BLOCK": int(os.getenv("CHAOSKIT_SAMPLE_BLOCK", "256")),
        "CLOUD_BLOCK": int(os.getenv("CHAOSKIT_CLOUD_BLOCK", "64")),

        # Transport
        "ASSIGNMENT_CAP": int(os.getenv("CHAOSKIT_ASSIGNMENT_CAP", "2048")),
        "BOOTSTRAP_RESAMPLES": int(os.getenv("CHAOSKIT_BOOTSTRAP_RESAMPLES", "200")),

        # Reference flow size relative to the largest experiment N
        "N_REF_FACTOR": 8,

        # PASS thresholds (statistical-power choices)
        "RATE_FACTOR": 0.9,
        "ENVELOPE_FACTOR": 1.05,
        "ENVELOPE_START": 0.5,
        "SLOPE_WINDOW": (-0.7, -0.3),
        "KS_ALPHA": 0.01,
        "UNIFORM_FACTOR": 1.25,
        "MOMENT_FACTOR": 1.1,
        "PLATEAU_FRACTION": 1.0 / 3.0,

        # Numerics
        "QUAD_TAIL_TOL": 1e-12,
        "SERIES_REL_TOL": 1e-14,
        "SERIES_MAX_TERMS": 10_000,
        "MERGE_FACTOR": 10.0,
    }
