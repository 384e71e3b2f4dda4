from typing import List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from chaoskit.schemas.model import ModelDocument

# Enums for validation
SCHEMES = ["euler-maruyama"]
INIT_KINDS = ["iid", "mixture"]
BASE_LAWS = ["point", "gaussian", "uniform"]
SIM_OUTPUTS = ["trajectory", "moments"]


class SimConfig(BaseModel):
    """Time-stepping configuration"""
    model_config = ConfigDict(frozen=True)

    dt: float = Field(..., gt=0, description="Step size")
    T: float = Field(..., ge=0, description="Horizon")
    seed: int = Field(default=0, ge=0, le=2**64 - 1, description="Master seed")
    replicas: int = Field(default=1, ge=1, description="Replica count M")
    scheme: str = Field(default="euler-maruyama", description="Time-stepping scheme")
    output_every: int = Field(default=1, ge=1, description="Record every k-th step")

    @field_validator("scheme")
    def validate_scheme(cls, v):
        if v not in SCHEMES:
            raise ValueError(f'Invalid scheme. Must be one of: {", ".join(SCHEMES)}')
        return v

    @model_validator(mode="after")
    def validate_grid(self):
        steps = round(self.T / self.dt)
        if abs(steps * self.dt - self.T) > 1e-9 * max(1.0, self.T):
            raise ValueError(f"T={self.T} is not an integer multiple of dt={self.dt}")
        return self

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


class BaseLaw(BaseModel):
    """Built-in one-particle law: point mass, Gaussian or uniform box"""
    type: str = Field(..., description="point, gaussian or uniform")
    mean: Union[float, List[float]] = Field(default=0.0, description="Location (point/gaussian)")
    std: float = Field(default=1.0, ge=0, description="Isotropic standard deviation")
    low: Union[float, List[float]] = Field(default=0.0, description="Lower corner (uniform)")
    high: Union[float, List[float]] = Field(default=1.0, description="Upper corner (uniform)")

    @field_validator("type")
    def validate_type(cls, v):
        if v not in BASE_LAWS:
            raise ValueError(f'Invalid base law. Must be one of: {", ".join(BASE_LAWS)}')
        return v


class InitialLaw(BaseModel):
    """Exchangeable initial law of the particle system"""
    kind: str = Field(default="iid", description="iid or mixture")
    base: Optional[BaseLaw] = Field(None, description="Law for the iid kind")
    components: List[BaseLaw] = Field(default_factory=list, description="Mixture components")
    weights: List[float] = Field(default_factory=list, description="Mixture weights")

    @field_validator("kind")
    def validate_kind(cls, v):
        if v not in INIT_KINDS:
            raise ValueError(f'Unknown init kind. Must be one of: {", ".join(INIT_KINDS)}')
        return v

    @model_validator(mode="after")
    def validate_parts(self):
        if self.kind == "iid" and self.base is None:
            raise ValueError("iid init requires a base law")
        if self.kind == "mixture":
            if not self.components:
                raise ValueError("mixture init requires components")
            if self.weights and len(self.weights) != len(self.components):
                raise ValueError("weights and components must have the same length")
            if any(w < 0 for w in self.weights) or (self.weights and sum(self.weights) <= 0):
                raise ValueError("mixture weights must be nonnegative with positive sum")
        return self

    def normalized_weights(self) -> List[float]:
        if not self.weights:
            return [1.0 / len(self.components)] * len(self.components)
        total = float(sum(self.weights))
        return [w / total for w in self.weights]


class SimulationDocument(BaseModel):
    """Input of the `simulate` subcommand"""
    model: Optional[Union[ModelDocument, str]] = Field(None, description="Model document or path")
    sim: SimConfig
    init: InitialLaw
    N: int = Field(..., ge=1, description="Particle count")
    output: str = Field(default="moments", description="trajectory or moments")

    @field_validator("output")
    def validate_output(cls, v):
        if v not in SIM_OUTPUTS:
            raise ValueError(f'Invalid output. Must be one of: {", ".join(SIM_OUTPUTS)}')
        return v
