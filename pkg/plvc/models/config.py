"""
Run configuration models

A run is described by one JSON file (schema_version 1). Every field has a
default and unknown keys are rejected.
"""
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .basis import SUPPORTED_SPLINE_DEGREES
from .simulation import DgpKind, SimMethod

SCHEMA_VERSION = 1


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ColumnRoles(_Section):
    """Mapping of CSV columns to model roles"""
    response: str = "y"
    linear: List[str] = Field(default_factory=list, description="Columns of W")
    varying: List[str] = Field(default_factory=list, description="Non-intercept columns of X")
    index: str = "z"


class BasisConfig(_Section):
    """Series basis and its selection grid"""
    family: Literal["bspline", "power"] = "bspline"
    degree: int = Field(default=3, description="Spline degree")
    degrees: List[int] = Field(default_factory=list, description="Degrees crossed with ks in CV; empty means [degree]")
    ks: List[int] = Field(default_factory=lambda: list(range(4, 17)), description="Per-block dimensions for CV")
    per_block: bool = False
    fixed_k: Optional[int] = Field(None, description="Skip CV and use this per-block dimension")
    power_degrees: List[int] = Field(default_factory=lambda: list(range(1, 8)))
    fixed_power_degree: Optional[int] = None
    knot_lo: Optional[float] = None
    knot_hi: Optional[float] = None
    variance_degree: int = Field(default=2, ge=0, description="Power-series degree of the variance curve")

    @property
    def cv_degrees(self) -> List[int]:
        return list(self.degrees) or [self.degree]


class KernelConfig(_Section):
    """Kernel profile estimator and its bandwidth grid"""
    kernel: Literal["epanechnikov", "gaussian"] = "epanechnikov"
    local_order: Literal["constant", "linear"] = "linear"
    bandwidths: List[float] = Field(default_factory=list, description="Explicit grid; empty means log-spaced h_lo..h_hi")
    h_lo: float = Field(default=0.02, gt=0)
    h_hi: float = Field(default=0.40, gt=0)
    num: int = Field(default=15, ge=1)
    bandwidth: Optional[float] = Field(None, gt=0, description="Skip CV and use this bandwidth")


class TestConfig(_Section):
    """Wild bootstrap specification test"""
    __test__ = False

    null: Literal["parametric_linear", "plvc", "full_vc"] = "plvc"
    alt: Literal["parametric_linear", "plvc", "full_vc"] = "full_vc"
    B: int = 999
    multiplier: Literal["mammen", "rademacher"] = "mammen"
    reselect: bool = False


class SweepConfig(_Section):
    """Fixed-grid sweep run alongside the simulation"""
    method: Literal["spline", "kernel"] = "spline"
    values: List[float] = Field(default_factory=list)
    reps: int = Field(default=100, ge=1)


class SimulateConfig(_Section):
    """Monte Carlo study"""
    dgps: List[DgpKind] = Field(default_factory=lambda: [DgpKind.DGP1, DgpKind.DGP2])
    ns: List[int] = Field(default_factory=lambda: [100, 200])
    methods: List[SimMethod] = Field(default_factory=lambda: [SimMethod.SPLINE, SimMethod.KERNEL])
    reps: int = Field(default=100, ge=1)
    noise_sd: float = Field(default=0.5, ge=0)
    include_records: bool = False
    sweep: Optional[SweepConfig] = None


class RunConfig(_Section):
    """Declarative run configuration"""
    schema_version: Literal[1] = SCHEMA_VERSION
    method: Literal["spline", "spline_weighted", "kernel"] = "spline"
    columns: ColumnRoles = Field(default_factory=ColumnRoles)
    basis: BasisConfig = Field(default_factory=BasisConfig)
    kernel: KernelConfig = Field(default_factory=KernelConfig)
    test: TestConfig = Field(default_factory=TestConfig)
    simulate: SimulateConfig = Field(default_factory=SimulateConfig)
    seed: Optional[int] = Field(None, ge=0)
    strict: bool = False
    dof_correction: bool = True
    threads: Optional[int] = Field(None, ge=1)
    data: Optional[str] = None
    out: str = "out"
    report_sum_curve: bool = False
    grid_points: int = Field(default=201, ge=2)

    @model_validator(mode="after")
    def check_basis(self) -> "RunConfig":
        lo, hi = self.basis.knot_lo, self.basis.knot_hi
        if lo is not None and hi is not None and not lo < hi:
            raise ValueError(f"knot_lo must be below knot_hi (got {lo}, {hi})")
        fixed_k = self.basis.fixed_k
        if self.basis.family == "bspline" and fixed_k is not None and fixed_k < self.basis.degree + 1:
            raise ValueError(f"fixed_k={fixed_k} too small for degree {self.basis.degree}")
        if any(m not in SUPPORTED_SPLINE_DEGREES for m in self.basis.degrees):
            raise ValueError(f"spline degrees must be among {SUPPORTED_SPLINE_DEGREES} (got {self.basis.degrees})")
        return self
