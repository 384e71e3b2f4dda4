from typing import List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from chaoskit.config import get_settings
from chaoskit.schemas.model import ModelDocument
from chaoskit.schemas.simulation import BaseLaw, InitialLaw, SimConfig

# Enums for validation
EXPERIMENT_KINDS = [
    "constants", "couple", "poc", "poc-eta", "uniform-time", "lln", "gronwall", "duhamel", "moments",
]
FLOW_KINDS = ["frozen", "reference"]
DUHAMEL_KINDS = ["identical", "constant-diffusions", "linear-drifts", "frozen-model"]
LLN_KINDS = ["mean-uniform", "constant-uniform", "difference-gaussian"]


def _default(key: str):
    return lambda: get_settings()[key]


class Thresholds(BaseModel):
    """PASS criteria; defaults come from the laboratory settings"""
    rate_factor: float = Field(default_factory=_default("RATE_FACTOR"), gt=0)
    envelope_factor: float = Field(default_factory=_default("ENVELOPE_FACTOR"), gt=0)
    envelope_start: float = Field(default_factory=_default("ENVELOPE_START"), ge=0)
    slope_window: Tuple[float, float] = Field(default_factory=_default("SLOPE_WINDOW"))
    ks_alpha: float = Field(default_factory=_default("KS_ALPHA"), gt=0, lt=1)
    uniform_factor: float = Field(default_factory=_default("UNIFORM_FACTOR"), gt=0)
    moment_factor: float = Field(default_factory=_default("MOMENT_FACTOR"), gt=0)
    plateau_fraction: float = Field(default_factory=_default("PLATEAU_FRACTION"), gt=0, le=1)

    @field_validator("slope_window")
    def validate_window(cls, v):
        if v[0] >= v[1]:
            raise ValueError("slope_window must be an increasing pair")
        return v


class CouplingSettings(BaseModel):
    x_tilde0: Union[float, List[float]] = Field(default=1.0, description="Start of the first leg")
    x_hat0: Union[float, List[float]] = Field(default=-1.0, description="Start of the second leg")
    epsilon: float = Field(default=0.0, ge=0, description="0 for hard reflection, > 0 for the smoothed variant")
    merge_factor: Optional[float] = Field(None, gt=0, description="Merge threshold in units of sqrt(beta dt d)")
    flow: str = Field(default="frozen", description="frozen initial cloud or self-consistent reference flow")
    min_survivors: int = Field(default=30, ge=1, description="Unmerged pairs needed for a point to enter the fit")
    ks: bool = Field(default=True, description="Compare each leg with an uncoupled run")

    @field_validator("flow")
    def validate_flow(cls, v):
        if v not in FLOW_KINDS:
            raise ValueError(f'Invalid flow. Must be one of: {", ".join(FLOW_KINDS)}')
        return v


class LLNSettings(BaseModel):
    function: str = Field(default="mean-uniform", description="Built-in pair function and sampler")
    N_list: List[int] = Field(default_factory=lambda: [16, 64, 256, 1024, 4096])
    replicas: int = Field(default=2000, ge=2)
    slope_window: Tuple[float, float] = Field(default=(-0.6, -0.4))

    @field_validator("function")
    def validate_function(cls, v):
        if v not in LLN_KINDS:
            raise ValueError(f'Invalid LLN function. Must be one of: {", ".join(LLN_KINDS)}')
        return v

    @field_validator("N_list")
    def validate_sizes(cls, v):
        if not v or any(n < 1 for n in v):
            raise ValueError("N_list must contain positive sizes")
        return v


class GronwallSettings(BaseModel):
    C: float = Field(default=1.0, ge=0)
    theta: float = Field(default=1.0, gt=0)
    a: float = Field(default=1.0, ge=0, description="Constant forcing a(t)")
    T: float = Field(default=1.0, gt=0)
    points: int = Field(default=201, ge=2)
    tolerance: float = Field(default=1e-12, gt=0)


class DuhamelSettings(BaseModel):
    kind: str = Field(default="constant-diffusions")
    beta1: float = Field(default=1.0, gt=0)
    beta2: float = Field(default=0.5, gt=0)
    a1: float = Field(default=1.0, description="Linear drift rate of the first model")
    a2: float = Field(default=2.0, description="Linear drift rate of the second model")
    t: float = Field(default=1.0, gt=0)
    z: List[float] = Field(default_factory=lambda: [-1.0, 0.0, 1.0])
    bump_width: float = Field(default=1.0, gt=0)
    budget: int = Field(default=4096, ge=2)
    outer: int = Field(default=256, ge=2)
    inner: int = Field(default=256, ge=1)
    quad_nodes: int = Field(default=8, ge=1)
    h: float = Field(default=0.05, gt=0)

    @field_validator("kind")
    def validate_kind(cls, v):
        if v not in DUHAMEL_KINDS:
            raise ValueError(f'Invalid Duhamel pair. Must be one of: {", ".join(DUHAMEL_KINDS)}')
        return v


class ExperimentConfig(BaseModel):
    """A single JSON document describing one experiment run"""
    model_config = ConfigDict(extra="forbid")

    kind: str = Field(..., description="Experiment kind")
    model: Optional[Union[ModelDocument, str]] = Field(None, description="Model document or path")
    N: List[int] = Field(default_factory=lambda: [8, 16, 32, 64, 128, 256], description="Particle counts")
    k: int = Field(default=1, ge=1, description="Marginal size")
    eta: float = Field(default=1.0, gt=0, le=1)
    T: float = Field(default=5.0, ge=0)
    dt: float = Field(default=1e-2, gt=0)
    output_every: int = Field(default=10, ge=1)
    M: int = Field(default=512, ge=1, description="Replicas")
    N_ref: Optional[int] = Field(None, ge=1, description="Reference flow size (default 8x max N)")
    seed: int = Field(default=0, ge=0, le=2**64 - 1)
    out: Optional[str] = Field(None, description="Output directory")
    init: InitialLaw = Field(default_factory=lambda: InitialLaw(kind="iid", base=BaseLaw(type="gaussian")))
    cG: float = Field(default=1.0, gt=0, description="Gradient constant used for kappa0")
    bootstrap_resamples: Optional[int] = Field(None, ge=0)
    coupling: CouplingSettings = Field(default_factory=CouplingSettings)
    lln: LLNSettings = Field(default_factory=LLNSettings)
    gronwall: GronwallSettings = Field(default_factory=GronwallSettings)
    duhamel: DuhamelSettings = Field(default_factory=DuhamelSettings)
    thresholds: Thresholds = Field(default_factory=Thresholds)

    @field_validator("kind")
    def validate_kind(cls, v):
        if v not in EXPERIMENT_KINDS:
            raise ValueError(f'Unknown experiment kind. Must be one of: {", ".join(EXPERIMENT_KINDS)}')
        return v

    @field_validator("N")
    def validate_sizes(cls, v):
        if not v or any(n < 1 for n in v):
            raise ValueError("N must be a nonempty list of positive particle counts")
        return sorted(set(v))

    @model_validator(mode="after")
    def validate_experiment(self):
        if self.k > min(self.N):
            raise ValueError(f"k={self.k} exceeds the smallest particle count {min(self.N)}")
        if self.kind == "poc-eta" and not self.eta < 1:
            raise ValueError("poc-eta needs eta in (0, 1)")
        steps = round(self.T / self.dt)
        if abs(steps * self.dt - self.T) > 1e-9 * max(1.0, self.T):
            raise ValueError(f"T={self.T} is not an integer multiple of dt={self.dt}")
        return self

    @property
    def reference_size(self) -> int:
        return self.N_ref if self.N_ref is not None else get_settings()["N_REF_FACTOR"] * max(self.N)

    def sim_config(self, replicas: Optional[int] = None) -> SimConfig:
        return SimConfig(
            dt=self.dt, T=self.T, seed=self.seed, replicas=replicas or self.M, output_every=self.output_every,
        )
