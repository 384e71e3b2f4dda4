from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

# Enums for validation
TRANSPORT_METHODS = ["sorted-1d", "assignment", "dual-lower-bound"]
ASSUMPTION_CHECKS = ["sigma_lipschitz", "sigma_bound", "drift_lipschitz", "dissipativity"]


class ViolationWitness(BaseModel):
    """Sampled input pair breaking one of the audited bounds"""
    check: str = Field(..., description="Name of the violated check")
    ratio: float = Field(..., description="Observed ratio (bound holds iff <= 1)")
    x1: List[float]
    x2: List[float]
    y1: List[float]
    y2: List[float]


class AssumptionReport(BaseModel):
    """Sampled audit of the structural assumptions on a model"""
    model_config = ConfigDict(frozen=True)

    ratios: Dict[str, float] = Field(..., description="Worst ratio per check, normalized so 1 is the bound")
    sample_count: int
    radius: float
    tolerance: float
    witnesses: List[ViolationWitness] = Field(default_factory=list)
    passed: bool


class DeltaResult(BaseModel):
    """delta with its quadrature metadata"""
    model_config = ConfigDict(frozen=True)

    delta: float = Field(..., gt=0)
    error_estimate: float = Field(..., ge=0, description="Absolute error estimate")
    truncation_radius: float = Field(..., description="Radius beyond which the tail is closed-form or negligible")
    node_count: int = Field(..., ge=0, description="Integrand evaluations")
    tail: str = Field(..., description="closed-form or truncated")


class ContractionConstants(BaseModel):
    """delta, c_E and lambda0 together with the inputs they were built from"""
    model_config = ConfigDict(frozen=True)

    delta: float = Field(..., gt=0)
    c_E: float
    lambda0: float
    beta: float = Field(..., gt=0)
    K2: float = Field(..., gt=0)
    Kb: float = Field(default=0.0, ge=0)
    Ksigma: float = Field(default=0.0, ge=0)
    error_estimate: float = Field(default=0.0, ge=0)
    truncation_radius: float = Field(default=0.0, ge=0)
    node_count: int = Field(default=0, ge=0)
    tail: str = Field(default="closed-form")

    @property
    def decay_rate(self) -> float:
        """2 beta / delta, the rate of the exponential term at a = 0"""
        return 2.0 * self.beta / self.delta


class Kappa0Result(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float = Field(..., ge=0)
    degenerate: bool = False
    t_star: Optional[float] = Field(None, description="Minimizing time at the feasible endpoint")
    resolution: float = Field(..., gt=0, description="Bisection resolution in a")
    a_upper: float = Field(..., gt=0, description="Upper end of the search bracket")


class ContractionWindow(BaseModel):
    """Proof-level contraction window for a given a < kappa0"""
    model_config = ConfigDict(frozen=True)

    a: float
    t_hat: float
    alpha: float
    rate: Optional[float] = Field(None, description="-log(alpha)/t_hat when alpha < 1")


class HypothesisReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    threshold_coupling: float = Field(..., description="4 beta^2 / (K2 delta^2)")
    threshold_fluctuation: float = Field(..., description="K2 / 2")
    kappa0: float
    lhs: float = Field(..., description="Kb + Ksigma")
    coupling_gate: bool
    fluctuation_gate: bool
    theorem_gate: bool
    cG: float
    d: int


class ConstantsReport(BaseModel):
    delta: float
    c_E: float
    lambda0: float
    kappa0: float
    kappa0_degenerate: bool = False
    thresholds: Dict[str, float]
    gates: Dict[str, bool]
    cG: float
    d: int
    window: Optional[ContractionWindow] = None


class WassersteinEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float = Field(..., ge=0)
    eta: float = Field(..., gt=0, le=1)
    method: str = Field(..., description="sorted-1d, assignment or dual-lower-bound")
    M: int = Field(..., ge=1, description="Sample count used")
    stderr: Optional[float] = Field(None, ge=0, description="Bootstrap standard error")
    upper_bound: bool = Field(default=False, description="True when the method only bounds W from above")


class RateFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    slope: float
    intercept: float
    half_width: float = Field(..., ge=0, description="95% confidence half-width of the slope")
    r2: float
    points: int
    log_x: bool


class CGEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float = Field(..., ge=0)
    stderr: float = Field(..., ge=0)
    per_order: Dict[str, float] = Field(..., description="Maximum scaled derivative per order")
    eta: float
    h: float


class DuhamelResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_residual: float
    error_bar: float
    t: float
    z: List[List[float]]
    lhs: List[float]
    rhs: List[float]
    residual: List[float]
    lhs_stderr: List[float]
    rhs_stderr: List[float]


class RunRecord(BaseModel):
    """Per-run provenance record"""
    kind: str
    config: Dict[str, Any]
    version: str
    started_at: str
    wall_clock_seconds: float
    threads: int
    digests: Dict[str, str] = Field(default_factory=dict, description="sha256 per output file")
    summary: Dict[str, Any] = Field(default_factory=dict)
    passed: Optional[bool] = None
