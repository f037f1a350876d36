"""
Basis related data models
"""
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

SUPPORTED_SPLINE_DEGREES = (2, 3)


class KnotVector(BaseModel):
    """Knot layout of a univariate spline basis on [lo, hi]"""
    model_config = ConfigDict(frozen=True)

    interior_knots: Tuple[float, ...] = Field(default=(), description="Interior breakpoints")
    lo: float = Field(..., description="Lower support bound of the index")
    hi: float = Field(..., description="Upper support bound of the index")
    degree: int = Field(..., ge=0, description="Polynomial degree m")

    @model_validator(mode="after")
    def check_knots(self) -> "KnotVector":
        """Validate ordering and placement of the interior knots"""
        if not self.lo < self.hi:
            raise ValueError(f"lo must be below hi (got lo={self.lo}, hi={self.hi})")
        knots = np.asarray(self.interior_knots, dtype=float)
        if knots.size:
            if np.any(np.diff(knots) < 0):
                raise ValueError("interior knots must be nondecreasing")
            if knots[0] <= self.lo or knots[-1] >= self.hi:
                raise ValueError("interior knots must lie strictly inside (lo, hi)")
        return self

    @property
    def num_interior(self) -> int:
        return len(self.interior_knots)

    @property
    def dimension(self) -> int:
        """Number of basis functions k_l"""
        return self.num_interior + self.degree + 1

    @property
    def extended(self) -> np.ndarray:
        """Full knot sequence with m+1 copies of each boundary"""
        pad = self.degree + 1
        return np.concatenate([
            np.full(pad, self.lo),
            np.asarray(self.interior_knots, dtype=float),
            np.full(pad, self.hi),
        ])


class BasisSpec(BaseModel):
    """Basis family and dimension used for one varying coefficient"""
    model_config = ConfigDict(frozen=True)

    family: Literal["bspline", "power"] = Field(..., description="Basis family")
    knots: Optional[KnotVector] = Field(None, description="Knot layout (bspline only)")
    degree: int = Field(..., ge=0, description="Polynomial degree")

    @model_validator(mode="after")
    def check_family(self) -> "BasisSpec":
        """Keep the knot layout consistent with the family"""
        if self.family == "bspline":
            if self.knots is None:
                raise ValueError("bspline basis requires a knot vector")
            if self.knots.degree != self.degree:
                raise ValueError("knot vector degree does not match basis degree")
        elif self.knots is not None:
            raise ValueError("power basis takes no knot vector")
        return self

    @property
    def dimension(self) -> int:
        """k_l"""
        if self.family == "bspline":
            return self.knots.dimension
        return self.degree + 1

    def describe(self) -> dict:
        """Compact description for reports"""
        record = {"family": self.family, "degree": self.degree, "dimension": self.dimension}
        if self.knots is not None:
            record.update({
                "lo": self.knots.lo,
                "hi": self.knots.hi,
                "interior_knots": list(self.knots.interior_knots),
            })
        return record

    def evaluate(self, z, strict: Optional[bool] = None) -> np.ndarray:
        """Evaluate the basis at z, returning an (n, k_l) matrix"""
        from ..basis.splines import basis_matrix
        return basis_matrix(self, z, strict=strict)
