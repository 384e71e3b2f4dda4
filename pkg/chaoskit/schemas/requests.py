from typing import List, Optional, Union

from pydantic import BaseModel, Field, field_validator

from chaoskit.schemas.model import ModelDocument
from chaoskit.services.transport_service import TRANSPORT_CHOICES

Sample = Union[float, List[float], List[List[float]]]


class ConstantsRequest(BaseModel):
    """Model document plus the gradient constant used for kappa0"""
    model: ModelDocument
    cG: float = Field(default=1.0, gt=0, description="Gradient constant c_G")
    d: Optional[int] = Field(None, ge=1, description="Dimension override for G(a, t)")


class WassersteinRequest(BaseModel):
    """Two sample lists; each sample is a scalar, a point or m points. The longer list is subsampled."""
    cloudA: List[Sample] = Field(..., min_length=1)
    cloudB: List[Sample] = Field(..., min_length=1)
    eta: float = Field(default=1.0, gt=0, le=1)
    method: str = Field(default="auto")
    bootstrap: bool = Field(default=False)
    seed: int = Field(default=0, ge=0)

    @field_validator("method")
    def validate_method(cls, v):
        if v not in TRANSPORT_CHOICES:
            raise ValueError(f'Invalid method. Must be one of: {", ".join(TRANSPORT_CHOICES)}')
        return v
