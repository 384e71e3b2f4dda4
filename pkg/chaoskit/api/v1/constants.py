"""
API functions for contraction constants
"""

import logging

from chaoskit.schemas.reports import ConstantsReport
from chaoskit.schemas.requests import ConstantsRequest
from chaoskit.services.constants_service import constants_report
from chaoskit.services.model_service import load_model

logger = logging.getLogger(__name__)


def compute_constants_logic(request: ConstantsRequest) -> ConstantsReport:
    """delta, c_E, lambda0, kappa0 and the theorem gates for a model document"""
    model = load_model(request.model)
    logger.info(f"Constants requested for family={model.family} cG={request.cG}")
    return constants_report(model, request.cG, request.d)
