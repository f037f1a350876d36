"""
Monte Carlo related data models
"""
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class DgpKind(str, Enum):
    """Simulation designs"""
    DGP1 = "dgp1"
    DGP2 = "dgp2"
    CUSTOM_HETERO = "custom_hetero"
    VARYING_GAMMA = "varying_gamma"


class SimMethod(str, Enum):
    """Estimators compared in a simulation study"""
    SPLINE = "spline"
    SPLINE_WEIGHTED = "spline_weighted"
    KERNEL = "kernel"


class DgpSpec(BaseModel):
    """One simulation design at one sample size"""
    model_config = ConfigDict(frozen=True)

    which: DgpKind = DgpKind.DGP1
    n: int = Field(..., ge=20)
    seed: Optional[int] = None
    noise_sd: float = Field(default=0.5, ge=0)


class Truth(BaseModel):
    """True parameters of one generated sample"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    gamma: np.ndarray = Field(..., description="Constant coefficients (population mean of gamma(z) when it varies)")
    beta_at_sample: np.ndarray = Field(..., description="n x d true coefficient curves at the sample z")
    gamma_varies: bool = False

    @field_validator("gamma", "beta_at_sample", mode="before")
    @classmethod
    def freeze(cls, value):
        array = np.array(value, dtype=float)
        array.setflags(write=False)
        return array


class SelectionPolicy(BaseModel):
    """How smoothing parameters are chosen inside a replication"""
    model_config = ConfigDict(frozen=True)

    spline_ks: Tuple[int, ...] = tuple(range(4, 17))
    spline_degree: int = 3
    fixed_k: Optional[int] = Field(None, ge=2, description="Per-block dimension; skips CV when set")
    bandwidths: Tuple[float, ...] = Field(default=(), description="Kernel CV grid; empty means the default log grid")
    fixed_bandwidth: Optional[float] = Field(None, gt=0)
    kernel: str = "epanechnikov"
    local_order: str = "linear"
    variance_degree: int = Field(default=2, ge=0, description="Power-series degree of the variance curve")

    @model_validator(mode="after")
    def check_dimensions(self) -> "SelectionPolicy":
        smallest = self.spline_degree + 1
        if self.fixed_k is not None and self.fixed_k < smallest:
            raise ValueError(f"fixed_k must be at least {smallest} for degree {self.spline_degree}")
        if not self.spline_ks or min(self.spline_ks) < smallest:
            raise ValueError(f"spline_ks must be nonempty and at least {smallest}")
        return self


class RepRecord(BaseModel):
    """Outcome of one method in one replication"""
    model_config = ConfigDict(frozen=True)

    rep: int
    method: SimMethod
    gamma_hat: List[float] = Field(default_factory=list)
    std_errors: List[float] = Field(default_factory=list)
    ase_beta: List[float] = Field(default_factory=list, description="(1/n) sum_i (beta-hat_l(z_i) - beta_l(z_i))^2 per block")
    selected_k: Optional[int] = Field(None, description="Total series dimension")
    selected_k_per_block: List[int] = Field(default_factory=list, description="Basis dimension of each varying block")
    selected_h: Optional[float] = None
    covered: List[bool] = Field(default_factory=list)
    efficiency_gap: Optional[float] = None
    failure: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.failure is None


class SimReport(BaseModel):
    """Aggregated replication study"""
    model_config = ConfigDict(frozen=True)

    dgp: DgpKind
    n: int
    methods: List[SimMethod]
    requested_reps: int
    reps: int = Field(..., description="Replications in which every method succeeded")
    failed_reps: List[int] = Field(default_factory=list)
    valid: bool = True
    mse_gamma: Dict[str, List[float]] = Field(default_factory=dict)
    mase_beta: Dict[str, List[float]] = Field(default_factory=dict)
    selection: Dict[str, Dict[str, float]] = Field(default_factory=dict)
    coverage: Dict[str, List[float]] = Field(default_factory=dict)
    efficiency_gap_median: Dict[str, float] = Field(default_factory=dict)
    gamma_variance: Dict[str, List[float]] = Field(default_factory=dict)
    wall_clock: float
    seed: int
    records: List[RepRecord] = Field(default_factory=list)

    def table_rows(self) -> List[dict]:
        """Rows (dgp, method, n, metric, value)"""
        rows = []
        for method in self.methods:
            key = method.value
            for j, value in enumerate(self.mse_gamma.get(key, [])):
                rows.append(self._row(key, f"mse_gamma_{j + 1}", value))
            for l, value in enumerate(self.mase_beta.get(key, [])):
                rows.append(self._row(key, f"mase_beta_{l}", value))
        return rows

    def _row(self, method: str, metric: str, value: float) -> dict:
        return {"dgp": self.dgp.value, "method": method, "n": self.n, "metric": metric, "value": value}


class SweepPoint(BaseModel):
    """Metrics at one fixed smoothing value"""
    model_config = ConfigDict(frozen=True)

    method: SimMethod
    value: float = Field(..., description="Per-block k or bandwidth h")
    reps: int
    mse_gamma: List[float]
    mase_beta: List[float]
    mean_cv_score: float
    mean_rss: float


class SweepReport(BaseModel):
    """MSE, MASE, CV and RSS curves over a fixed smoothing grid"""
    model_config = ConfigDict(frozen=True)

    dgp: DgpKind
    n: int
    seed: int
    points: List[SweepPoint]
    failures: Dict[str, int] = Field(default_factory=dict)

    def frame_rows(self) -> List[dict]:
        rows = []
        for point in self.points:
            row = {"method": point.method.value, "value": point.value, "reps": point.reps,
                   "mean_cv_score": point.mean_cv_score, "mean_rss": point.mean_rss}
            row.update({f"mse_gamma_{j + 1}": v for j, v in enumerate(point.mse_gamma)})
            row.update({f"mase_beta_{l}": v for l, v in enumerate(point.mase_beta)})
            rows.append(row)
        return rows
