"""
Series regressor construction

p^K(x, z) = (x_1 p_1(z)', ..., x_d p_d(z)')'
"""
from typing import Optional, Sequence

import numpy as np

from ..models.basis import BasisSpec
from ..models.data import Dataset, DesignMatrix


def _check_specs(specs: Sequence[BasisSpec], d: int) -> None:
    if len(specs) != d:
        raise ValueError(f"expected {d} basis specs (one per varying coefficient), got {len(specs)}")


def block_offsets(specs: Sequence[BasisSpec]) -> tuple:
    """Cut points of the coefficient blocks inside p^K"""
    return tuple(int(v) for v in np.concatenate([[0], np.cumsum([s.dimension for s in specs])]))


def interleave(x: np.ndarray, z: np.ndarray, specs: Sequence[BasisSpec], strict: Optional[bool] = None) -> np.ndarray:
    """Row-wise series regressors for an (n, d) varying block"""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    _check_specs(specs, x.shape[1])
    blocks = [x[:, [l]] * spec.evaluate(z, strict=strict) for l, spec in enumerate(specs)]
    return np.hstack(blocks)


def build_regressor(x_row: Sequence[float], z: float, specs: Sequence[BasisSpec], strict: Optional[bool] = None) -> np.ndarray:
    """
    Series regressor of one observation

    Args:
        x_row: Varying regressors (length d, intercept first)
        z: Index value
        specs: One basis spec per varying coefficient

    Returns:
        Length-K vector
    """
    return interleave(np.asarray(x_row, dtype=float).reshape(1, -1), [z], specs, strict=strict)[0]


def build_design(ds: Dataset, specs: Sequence[BasisSpec], strict: Optional[bool] = None) -> DesignMatrix:
    """
    Series design matrix P of a dataset

    Args:
        ds: Dataset
        specs: One basis spec per varying coefficient

    Returns:
        DesignMatrix whose row i equals build_regressor(x_i, z_i, specs)
    """
    p = interleave(ds.x, ds.z, specs, strict=strict)
    p.setflags(write=False)
    return DesignMatrix(p=p, block_offsets=block_offsets(specs), specs=tuple(specs))


def shared_specs(spec: BasisSpec, d: int) -> tuple:
    """Same basis for every coefficient block"""
    return tuple(spec for _ in range(d))
