from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator

# Enums for validation
FAMILIES = ["linear", "double-well"]
SIGMA_KINDS = ["none", "constant", "bounded-smooth"]
PROFILE_CHOICES = ["linear", "piecewise"]


class ConstantsBlock(BaseModel):
    """Declared model constants; omitted entries fall back to certified values"""
    K1: Optional[float] = Field(None, ge=0, description="Short-range expansion rate K1")
    K2: Optional[float] = Field(None, gt=0, description="Long-range dissipation rate K2")
    R: Optional[float] = Field(None, gt=0, description="Radius where dissipation starts")
    Kb: Optional[float] = Field(None, ge=0, description="Lipschitz constant of the pairwise drift")
    Ksigma: Optional[float] = Field(None, ge=0, description="Bound for the pairwise diffusion")


class SigmaParams(BaseModel):
    """Pairwise diffusion sigma_tilde(x, y) = scale * g(|x - y|) * M"""
    kind: str = Field(default="none", description="none, constant or bounded-smooth")
    scale: float = Field(default=0.0, ge=0, description="Scale c of the diffusion")
    matrix: Optional[List[List[float]]] = Field(None, description="Fixed d x n matrix M")

    @field_validator("kind")
    def validate_kind(cls, v):
        if v not in SIGMA_KINDS:
            raise ValueError(f'Invalid sigma kind. Must be one of: {", ".join(SIGMA_KINDS)}')
        return v


class LinearParams(BaseModel):
    """b0(x) = -a x, b1(x, y) = kappa (y - x)"""
    a: float = Field(..., gt=0, description="Confinement rate")
    kappa: float = Field(default=0.0, description="Interaction strength")
    R: float = Field(default=1.0, gt=0, description="Radius reported for the piecewise profile")
    profile: str = Field(default="linear", description="linear (gamma(r) = -a r) or piecewise")
    sigma: SigmaParams = Field(default_factory=SigmaParams)

    @field_validator("profile")
    def validate_profile(cls, v):
        if v not in PROFILE_CHOICES:
            raise ValueError(f'Invalid profile. Must be one of: {", ".join(PROFILE_CHOICES)}')
        return v


class DoubleWellParams(BaseModel):
    """b0(x) = x - |x|^2 x, b1(x, y) = kappa (y - x); profile fitted on a box"""
    kappa: float = Field(default=0.0, description="Interaction strength")
    K2: float = Field(default=1.0, gt=0, description="Tail dissipation used by the fit")
    box_radius: float = Field(default=5.0, gt=0, description="Half-width of the fitting box")
    sigma: SigmaParams = Field(default_factory=SigmaParams)


class ModelDocument(BaseModel):
    """JSON model specification"""
    family: str = Field(..., description="Built-in model family")
    d: int = Field(default=1, ge=1, description="State dimension")
    n: int = Field(default=1, ge=1, description="Dimension of the interacting noise")
    beta: float = Field(default=1.0, gt=0, description="Additive noise intensity")
    constants: ConstantsBlock = Field(default_factory=ConstantsBlock)
    params: Dict[str, Any] = Field(default_factory=dict, description="Family parameters")
    drift_lipschitz: Optional[float] = Field(
        None, ge=0,
        description="Global Lipschitz constant K0 of b0, when known; documentation only",
    )

    @field_validator("family")
    def validate_family(cls, v):
        if v not in FAMILIES:
            raise ValueError(f'Unknown model family. Must be one of: {", ".join(FAMILIES)}')
        return v
