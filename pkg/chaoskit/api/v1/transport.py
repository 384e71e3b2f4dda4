"""
API functions for empirical Wasserstein distances
"""

from chaoskit.schemas.reports import WassersteinEstimate
from chaoskit.schemas.requests import WassersteinRequest
from chaoskit.services.transport_service import wasserstein


def wasserstein_logic(request: WassersteinRequest) -> WassersteinEstimate:
    return wasserstein(
        request.cloudA, request.cloudB, eta=request.eta, method=request.method,
        bootstrap=request.bootstrap, seed=request.seed,
    )
