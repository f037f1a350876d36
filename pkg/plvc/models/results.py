"""
Estimation, selection and testing result models
"""
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .basis import BasisSpec
from .data import Dataset


def _readonly(value) -> np.ndarray:
    array = np.array(value, dtype=float)
    array.setflags(write=False)
    return array


class FitResult(BaseModel):
    """Series least-squares fit of the partially linear varying coefficient model"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    gamma_hat: np.ndarray = Field(..., description="Constant coefficients, length q")
    alpha_hat: np.ndarray = Field(..., description="Series coefficients, length K")
    residuals: np.ndarray = Field(..., description="u-hat, length n")
    fitted: np.ndarray = Field(..., description="Fitted values, length n")
    w_resid: np.ndarray = Field(..., description="W - W-tilde, n x q")
    rss: float
    r_squared: float
    phi_hat: np.ndarray = Field(..., description="n^-1 sum (w - w~)(w - w~)'")
    omega_hat: np.ndarray = Field(..., description="n^-1 sum u^2 (w - w~)(w - w~)'")
    sigma_hat: np.ndarray = Field(..., description="Sandwich Phi^-1 Omega Phi^-1")
    sigma2_hat: float
    n: int
    rank: int = Field(..., description="Effective rank of P")
    dof_correction: bool = True
    specs: Tuple[BasisSpec, ...]
    block_offsets: Tuple[int, ...]
    linear_labels: List[str] = Field(default_factory=list)
    varying_labels: List[str] = Field(default_factory=list)
    z: np.ndarray = Field(..., description="Index values of the fitting sample")
    weights: Optional[np.ndarray] = Field(None, description="sigma-hat_i used by the weighted fit")

    @field_validator(
        "gamma_hat", "alpha_hat", "residuals", "fitted", "w_resid",
        "phi_hat", "omega_hat", "sigma_hat", "z", mode="before",
    )
    @classmethod
    def freeze(cls, value):
        return _readonly(value)

    @property
    def q(self) -> int:
        return self.gamma_hat.shape[0]

    @property
    def d(self) -> int:
        return len(self.specs)

    @property
    def total_dimension(self) -> int:
        return self.block_offsets[-1]

    def alpha_block(self, l: int) -> np.ndarray:
        """Series coefficients of varying coefficient l (0 = intercept)"""
        return self.alpha_hat[self.block_offsets[l]:self.block_offsets[l + 1]]

    def standard_errors(self) -> np.ndarray:
        """sqrt(Sigma_jj / n)"""
        return np.sqrt(np.clip(np.diag(self.sigma_hat), 0.0, None) / self.n)

    def t_statistics(self) -> np.ndarray:
        se = self.standard_errors()
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(se > 0, self.gamma_hat / se, np.inf * np.sign(self.gamma_hat))

    def selected_basis(self) -> List[Dict[str, Any]]:
        return [
            {"block": label, **spec.describe()}
            for label, spec in zip(self.varying_labels or [str(l) for l in range(self.d)], self.specs)
        ]


class VarianceModel(BaseModel):
    """Fitted conditional variance curve sigma^2(z), clamped to [eta_1, eta_2]"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    spec: BasisSpec
    coefficients: np.ndarray
    floor: float = Field(..., gt=0, description="eta_1")
    cap: float = Field(..., gt=0, description="eta_2")

    @field_validator("coefficients", mode="before")
    @classmethod
    def freeze(cls, value):
        return _readonly(value)

    @model_validator(mode="after")
    def check_bounds(self) -> "VarianceModel":
        if self.floor > self.cap:
            raise ValueError("variance floor exceeds cap")
        return self

    def raw(self, z) -> np.ndarray:
        """Unclamped fitted curve"""
        return self.spec.evaluate(z, strict=False) @ self.coefficients

    def __call__(self, z) -> np.ndarray:
        return np.clip(self.raw(z), self.floor, self.cap)


class KernelSpec(BaseModel):
    """Kernel, bandwidth and local polynomial order of the profile estimator"""
    model_config = ConfigDict(frozen=True)

    kernel: Literal["epanechnikov", "gaussian"] = "epanechnikov"
    bandwidth: float = Field(..., gt=0, description="h")
    local_order: Literal["constant", "linear"] = "linear"


class KernelProfileResult(BaseModel):
    """Kernel profile estimator of gamma and the coefficient curves"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    gamma_hat: np.ndarray
    beta_at_sample: np.ndarray = Field(..., description="n x d coefficient curves at the sample z")
    residuals: np.ndarray
    y_resid: np.ndarray = Field(..., description="y - E_G(y)")
    w_resid: np.ndarray = Field(..., description="W - E_G(W)")
    rss: float
    sigma_hat: np.ndarray = Field(..., description="Sandwich covariance of sqrt(n)(gamma - true)")
    kernel_spec: KernelSpec
    fallback_points: List[int] = Field(default_factory=list, description="Sample points that used Gaussian fallback weights")
    weighted: bool = False
    dataset: Dataset

    @field_validator("gamma_hat", "beta_at_sample", "residuals", "y_resid", "w_resid", "sigma_hat", mode="before")
    @classmethod
    def freeze(cls, value):
        return _readonly(value)

    @property
    def n(self) -> int:
        return self.residuals.shape[0]

    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.sigma_hat), 0.0, None) / self.n)

    def t_statistics(self) -> np.ndarray:
        se = self.standard_errors()
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(se > 0, self.gamma_hat / se, np.inf * np.sign(self.gamma_hat))


class CvCandidate(BaseModel):
    """One smoothing configuration in a selection grid"""
    model_config = ConfigDict(frozen=True)

    label: str
    per_block_k: Tuple[int, ...] = ()
    total_k: Optional[int] = None
    degree: Optional[int] = None
    bandwidth: Optional[float] = None


class CvReport(BaseModel):
    """Leave-one-out cross-validation over a grid of candidates"""
    model_config = ConfigDict(frozen=True)

    candidates: List[CvCandidate]
    scores: List[float] = Field(..., description="LOO sum of squared prediction errors (nan if not evaluable)")
    in_sample_rss: List[float]
    evaluable: List[bool]
    selected: int
    ties: List[int]
    failures: Dict[int, str] = Field(default_factory=dict)

    @property
    def selected_candidate(self) -> CvCandidate:
        return self.candidates[self.selected]

    @property
    def best_score(self) -> float:
        return self.scores[self.selected]


class ModelClass(BaseModel):
    """Nested model classes of the specification test"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["parametric_linear", "plvc", "full_vc"]

    @property
    def order(self) -> int:
        return {"parametric_linear": 0, "plvc": 1, "full_vc": 2}[self.kind]

    def nested_in(self, other: "ModelClass") -> bool:
        """Strictly nested in ``other``"""
        return self.order < other.order


class TestResult(BaseModel):
    """Wild bootstrap specification test"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)
    __test__ = False

    statistic: float
    bootstrap_stats: np.ndarray
    p_value: float = Field(..., gt=0, le=1)
    B: int
    dropped: int = 0
    seed: int
    rss0: float
    rss: float
    null: ModelClass
    alt: ModelClass
    multiplier: str = "mammen"
    specs: List[Dict[str, Any]] = Field(default_factory=list)

    @field_validator("bootstrap_stats", mode="before")
    @classmethod
    def freeze(cls, value):
        return _readonly(value)
