from fastapi import APIRouter
import logging

from chaoskit.api.v1.constants import compute_constants_logic
from chaoskit.api.v1.transport import wasserstein_logic
from chaoskit.schemas.reports import ConstantsReport, WassersteinEstimate
from chaoskit.schemas.requests import ConstantsRequest, WassersteinRequest

logger = logging.getLogger(__name__)

router = APIRouter()

# =============================================================================
# CONSTANTS ROUTES
# =============================================================================

@router.post("/constants", response_model=ConstantsReport)
def compute_constants(request: ConstantsRequest):
    """Contraction constants and theorem gates for a model document"""
    return compute_constants_logic(request)

# =============================================================================
# TRANSPORT ROUTES
# =============================================================================

@router.post("/transport/wasserstein", response_model=WassersteinEstimate)
def estimate_wasserstein(request: WassersteinRequest):
    """W_eta between two sample lists"""
    return wasserstein_logic(request)
