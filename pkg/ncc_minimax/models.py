import os
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from .config import Config
from .errors import ConfigError

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = ['t', 'oracle_count', 'diag_oracle_count', 'primal', 'res_x', 'res_y',
               'err_x', 'err_y', 'phi', 'wall_s']


class SchemeName(str, Enum):
    """Gradient estimator schemes / named solvers"""
    PVR = "pvr"
    ZEROSARAH = "zerosarah"
    STOCGDA = "stocgda"
    VR_AGDA = "vr_agda"
    GDA = "gda"


class Lambda0Mode(str, Enum):
    """ZeroSARAH first-step convention"""
    # one full pass seeds the trackers and lambda_0 = 1, so v_0 is the exact gradient
    FULL_PASS = "full_pass"
    # zero trackers, constant lambda from t = 0
    ZERO_INIT = "zero_init"


class BatchCoupling(str, Enum):
    """Whether the x- and y-estimators share one sampled batch"""
    COUPLED = "coupled"
    INDEPENDENT = "independent"


class ProblemName(str, Enum):
    """Problem instances the harness can build"""
    TOY_BILINEAR = "toy_bilinear"
    ROBUST_LOGISTIC = "robust_logistic"
    POISON = "poison"


class SolverConfig(BaseModel):
    """Configuration of one solver run; unset step sizes are derived from theory"""
    scheme: SchemeName = Field(..., description="Estimator scheme / solver name")
    label: Optional[str] = Field(None, description="Display label, defaults to the scheme name")
    eta_x: Optional[float] = Field(None, gt=0, description="Primal step size")
    eta_y: Optional[float] = Field(None, gt=0, description="Dual step size")
    rho: Optional[float] = Field(None, gt=0, le=1, description="Proximal-center averaging weight")
    r: Optional[float] = Field(None, ge=0, description="Smoothing weight, defaults to 2L")
    p: float = Field(default=0.5, gt=0, le=1, description="PVR full-gradient probability")
    batch_size: Optional[int] = Field(None, ge=1, description="b for ZeroSARAH, b_s for the other schemes")
    a: float = Field(default=2.0, ge=1, description="ZeroSARAH batch factor, b = ceil(a sqrt(n))")
    lam: Optional[float] = Field(None, gt=0, le=1, description="ZeroSARAH mixing weight, defaults to 1/b")
    lambda0_mode: Lambda0Mode = Field(default=Lambda0Mode.FULL_PASS, description="ZeroSARAH first step")
    coupling: BatchCoupling = Field(default=BatchCoupling.COUPLED, description="x/y batch coupling")
    snapshot_period: Optional[int] = Field(None, ge=1, description="VR-AGDA snapshot period m, defaults to n/b")
    T: int = Field(default=1000, ge=0, description="Iteration count")
    seed: int = Field(default=0, description="Run seed")
    trace_every: int = Field(default=10, ge=1, description="Trace cadence in iterations")
    residual_eta: Optional[float] = Field(None, gt=0, description="Residual step, defaults to 1/L")
    estimator_errors: bool = Field(default=False, description="Record ||grad K - v|| in traces")
    potential: bool = Field(default=False, description="Record the potential function in traces")
    rho_horizon_scale: Optional[float] = Field(None, gt=0, description="If set, rho = min(bound, c/sqrt(T))")
    resum_every: int = Field(default=1000, ge=1, description="Tracker re-accumulation period")

    @property
    def display_label(self) -> str:
        return self.label or self.scheme.value

    @property
    def smoothed(self) -> bool:
        """Schemes that run on the regularized function K with a proximal center"""
        return self.scheme in (SchemeName.PVR, SchemeName.ZEROSARAH, SchemeName.GDA)


class ProblemSpec(BaseModel):
    """Problem instance description"""
    name: ProblemName = Field(..., description="Problem family")
    params: Dict[str, Any] = Field(default_factory=dict, description="Constructor parameters")
    data: Optional[str] = Field(None, description="Dataset path (LIBSVM text)")


class ExperimentConfig(BaseModel):
    """A set of solver runs over seeds on one problem"""
    problem: ProblemSpec
    solvers: List[SolverConfig] = Field(..., min_length=1)
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)
    master_seed: int = Field(default=0, description="Master seed, NCC_SEED overrides")
    trace_every: Optional[int] = Field(None, ge=1, description="Overrides every solver's cadence")
    output_dir: Optional[str] = Field(None, description="Output directory")
    workers: Optional[int] = Field(None, ge=1, description="Concurrent runs")
    deterministic_traces: bool = Field(default=True, description="Leave wall_s out of trace CSVs")

    @field_validator('solvers')
    @classmethod
    def _unique_labels(cls, solvers: List[SolverConfig]) -> List[SolverConfig]:
        labels = [s.display_label for s in solvers]
        duplicates = sorted({label for label in labels if labels.count(label) > 1})
        if duplicates:
            raise ConfigError(f"duplicate solver labels: {', '.join(duplicates)}")
        return solvers

    @model_validator(mode='after')
    def _data_exists(self) -> 'ExperimentConfig':
        if self.problem.data is not None and not os.path.exists(Config.data_path(self.problem.data)):
            raise ConfigError(f"data path does not exist: {self.problem.data}")
        return self


class TraceRecord(BaseModel):
    """Per-iteration telemetry"""
    t: int = Field(..., ge=0)
    oracle_count: int = Field(..., ge=0, description="Component-gradient units, x and y blocks separately")
    diag_oracle_count: int = Field(default=0, ge=0)
    primal: Optional[float] = Field(None, description="max_y f(x_t, y) when available")
    res_x: float = Field(..., ge=0)
    res_y: float = Field(..., ge=0)
    err_x: Optional[float] = None
    err_y: Optional[float] = None
    phi: Optional[float] = None
    wall_s: Optional[float] = None
    accuracy: Optional[float] = None

    @property
    def stationarity(self) -> float:
        return max(self.res_x, self.res_y)

    def csv_row(self, with_accuracy: bool, with_wall: bool) -> List[str]:
        values: List[Any] = [self.t, self.oracle_count, self.diag_oracle_count, self.primal,
                             self.res_x, self.res_y, self.err_x, self.err_y, self.phi,
                             self.wall_s if with_wall else None]
        if with_accuracy:
            values.append(self.accuracy)
        return [_format_cell(v) for v in values]


def _format_cell(value: Any) -> str:
    if value is None:
        return ''
    if isinstance(value, int):
        return str(value)
    return f"{value:.17g}"


class StepSizeBounds(BaseModel):
    """Sufficient step-size bounds of the PVR or ZeroSARAH analysis and the constants they depend on"""
    scheme: SchemeName
    L: float
    r: float
    eta_x: float
    eta_y: float
    rho: float
    gamma: float
    omega: float
    sigma1: float
    sigma2: float
    L_d: float
    kappa: float
    D_Y: float
    p: Optional[float] = None
    n: Optional[int] = None
    a: Optional[float] = None
    b: Optional[int] = None
    lam: Optional[float] = None
    tau: Optional[float] = None
    b_plus: Optional[int] = None
    L_clamped: bool = Field(default=False, description="L was raised to 1")
    b_clamped: bool = Field(default=False, description="b was clamped to n")
    omega_consistent: bool = Field(default=True, description="eta_y bound re-verified against omega(eta_x)")


class RunManifest(BaseModel):
    """Everything needed to reproduce one (solver, seed) run"""
    schema_version: int = CSV_SCHEMA_VERSION
    run_id: str
    stream_id: str
    seed: int
    master_seed: int
    problem: Dict[str, Any]
    solver: Dict[str, Any]
    step_sizes: Optional[Dict[str, Any]] = None
    defaults: Dict[str, Any] = Field(default_factory=dict)
    trace_file: str
    oracle_count: int = 0
    diag_oracle_count: int = 0
    best: Dict[str, Any] = Field(default_factory=dict)
    final: Dict[str, Any] = Field(default_factory=dict)
    started_at: str
    finished_at: Optional[str] = None
    wall_seconds: Optional[float] = None
    success: bool = True
    error: Optional[str] = None


class DescentCheckpoint(BaseModel):
    """One checkpointed iteration of an expected-descent check"""
    iteration: int
    lhs: float = Field(..., description="Replica mean of Phi_t - Phi_{t+1}")
    rhs: float = Field(..., description="Descent bound right-hand side including the coupling term")
    stderr: float
    verdict: bool


class DescentReport(BaseModel):
    """Expected-descent verification across checkpointed iterations"""
    scheme: SchemeName
    replicas: int
    checkpoints: List[DescentCheckpoint] = Field(default_factory=list)

    @property
    def satisfied(self) -> int:
        return sum(1 for checkpoint in self.checkpoints if checkpoint.verdict)
