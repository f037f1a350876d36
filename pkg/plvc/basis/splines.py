"""
Univariate basis systems for the varying coefficients

B-splines are evaluated with scipy's de Boor-Cox recurrence; the explicit
truncated-power form is kept as ``truncated_power_bspline`` for
cross-checking equally spaced knots.
"""
import math
import threading
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import BSpline
from scipy.special import comb

from ..models.basis import SUPPORTED_SPLINE_DEGREES, BasisSpec, KnotVector
from ..utils.config import get_config
from ..utils.errors import BasisDomainError, InvalidDomainError, UnsupportedDegreeError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)


class ClampCounter:
    """Thread-safe tally of index values clamped into the basis support"""

    def __init__(self):
        self._lock = threading.Lock()
        self._count = 0

    def add(self, count: int) -> None:
        with self._lock:
            self._count += count

    @property
    def count(self) -> int:
        with self._lock:
            return self._count

    def reset(self) -> int:
        """Reset the tally, returning the previous value"""
        with self._lock:
            previous, self._count = self._count, 0
            return previous


clamp_counter = ClampCounter()


def make_knots(lo: float, hi: float, num_interior: int, degree: int) -> KnotVector:
    """
    Build an evenly spaced knot vector

    Args:
        lo: Lower support bound
        hi: Upper support bound
        num_interior: Number of interior knots
        degree: Spline degree (2 or 3)

    Returns:
        KnotVector with interior knots at lo + j (hi - lo) / (num_interior + 1)
    """
    lo, hi = float(lo), float(hi)
    if not np.isfinite(lo) or not np.isfinite(hi) or lo >= hi:
        raise InvalidDomainError(
            f"Invalid knot range [{lo}, {hi}]",
            details={"lo": lo, "hi": hi},
        )
    if degree not in SUPPORTED_SPLINE_DEGREES:
        raise UnsupportedDegreeError(
            f"Spline degree {degree} not supported; use one of {SUPPORTED_SPLINE_DEGREES}",
            details={"degree": degree},
        )
    if num_interior < 0:
        raise ValueError("num_interior must be nonnegative")

    spacing = (hi - lo) / (num_interior + 1)
    interior = tuple(lo + j * spacing for j in range(1, num_interior + 1))
    return KnotVector(interior_knots=interior, lo=lo, hi=hi, degree=degree)


def _prepare_index(z, lo: float, hi: float, strict: Optional[bool]) -> np.ndarray:
    """Coerce z to a float array inside [lo, hi], clamping or raising"""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if strict is None:
        strict = get_config().STRICT_BASIS

    outside = (z < lo) | (z > hi)
    if np.any(outside):
        if strict:
            bad = z[outside]
            raise BasisDomainError(
                f"{bad.size} index value(s) outside [{lo}, {hi}]",
                details={"lo": lo, "hi": hi, "first_offending": float(bad[0])},
            )
        clamp_counter.add(int(outside.sum()))
        logger.warning(f"Clamped {int(outside.sum())} index value(s) into [{lo}, {hi}]")
        z = np.clip(z, lo, hi)
    return z


def bspline_matrix(kv: KnotVector, z, strict: Optional[bool] = None) -> np.ndarray:
    """Evaluate all k_l B-splines of ``kv`` at each z, returning (n, k_l)"""
    z = _prepare_index(z, kv.lo, kv.hi, strict)
    design = BSpline.design_matrix(z, kv.extended, kv.degree)
    return design.toarray()


def bspline_eval(kv: KnotVector, z: float, strict: Optional[bool] = None) -> np.ndarray:
    """
    Evaluate the B-spline basis at a single index value

    Args:
        kv: Knot vector
        z: Index value
        strict: Raise on out-of-range z instead of clamping

    Returns:
        Length-k_l vector of nonnegative basis values
    """
    return bspline_matrix(kv, [z], strict=strict)[0]


def power_matrix(degree: int, z) -> np.ndarray:
    """Columns 1, z, ..., z^degree"""
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    return np.vander(z, degree + 1, increasing=True)


def power_eval(degree: int, z: float) -> np.ndarray:
    """(1, z, z^2, ..., z^degree)"""
    return power_matrix(degree, [z])[0]


def basis_matrix(spec: BasisSpec, z, strict: Optional[bool] = None) -> np.ndarray:
    """Evaluate a basis spec at each z, returning (n, k_l)"""
    if spec.family == "bspline":
        return bspline_matrix(spec.knots, z, strict=strict)
    return power_matrix(spec.degree, z)


def bspline_spec(
    z: Sequence[float],
    dimension: int,
    degree: int = 3,
    lo: Optional[float] = None,
    hi: Optional[float] = None,
) -> BasisSpec:
    """
    B-spline basis of a given dimension on the range of z

    Args:
        z: Index sample used for the default knot range
        dimension: Target k_l (must be at least degree + 1)
        degree: Spline degree
        lo: Knot range override (defaults to min z)
        hi: Knot range override (defaults to max z)

    Returns:
        BasisSpec with evenly spaced interior knots
    """
    num_interior = dimension - degree - 1
    if num_interior < 0:
        raise ValueError(f"dimension {dimension} too small for degree {degree}")
    z = np.asarray(z, dtype=float)
    lo = float(np.min(z)) if lo is None else float(lo)
    hi = float(np.max(z)) if hi is None else float(hi)
    kv = make_knots(lo, hi, num_interior, degree)
    return BasisSpec(family="bspline", knots=kv, degree=degree)


def power_spec(degree: int) -> BasisSpec:
    return BasisSpec(family="power", degree=degree)


def truncated_power_bspline(z, knots: Sequence[float]) -> np.ndarray:
    """
    Single B-spline on evenly spaced knots t_0..t_{m+1} via truncated powers

    B(z) = 1 / (m! h^m) * sum_j (-1)^j C(m+1, j) max(0, z - t_j)^m
    """
    t = np.asarray(knots, dtype=float)
    m = t.size - 2
    if m < 1:
        raise ValueError("need at least three knots")
    spacing = np.diff(t)
    h = spacing[0]
    if not np.allclose(spacing, h, rtol=1e-12, atol=0.0):
        raise ValueError("truncated-power form requires evenly spaced knots")

    z = np.atleast_1d(np.asarray(z, dtype=float))
    total = np.zeros_like(z)
    for j in range(m + 2):
        total += (-1) ** j * comb(m + 1, j, exact=True) * np.maximum(0.0, z - t[j]) ** m
    return total / (math.factorial(m) * h ** m)
