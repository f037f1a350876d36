"""
Dataset and design matrix models
"""
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .basis import BasisSpec


def _frozen_array(value, ndim: int) -> np.ndarray:
    array = np.array(value, dtype=float)
    if ndim == 2 and array.ndim == 1:
        array = array.reshape(-1, 1) if array.size else array.reshape(0, 0)
    if array.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {array.shape}")
    array.setflags(write=False)
    return array


class Dataset(BaseModel):
    """Observation table of the partially linear varying coefficient model"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    y: np.ndarray = Field(..., description="Response, length n")
    w: np.ndarray = Field(..., description="Linear block, n x q (q may be 0)")
    x: np.ndarray = Field(..., description="Varying block, n x d, first column all ones")
    z: np.ndarray = Field(..., description="Index variable, length n")
    response_label: str = "y"
    linear_labels: List[str] = Field(default_factory=list)
    varying_labels: List[str] = Field(default_factory=lambda: ["intercept"])
    index_label: str = "z"

    @field_validator("y", "z", mode="before")
    @classmethod
    def to_vector(cls, value):
        return _frozen_array(value, 1)

    @field_validator("x", mode="before")
    @classmethod
    def to_matrix(cls, value):
        return _frozen_array(value, 2)

    @field_validator("w", mode="before")
    @classmethod
    def to_linear_block(cls, value):
        array = np.array(value, dtype=float)
        if array.ndim == 1:
            array = array.reshape(-1, 1)
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def check_shapes(self) -> "Dataset":
        """Validate dimensions, finiteness and the intercept column"""
        n = self.y.shape[0]
        if self.w.size == 0:
            object.__setattr__(self, "w", _empty_block(n))
        for name, array in (("w", self.w), ("x", self.x), ("z", self.z)):
            if array.shape[0] != n:
                raise ValueError(f"{name} has {array.shape[0]} rows, expected {n}")
        for name, array in (("y", self.y), ("w", self.w), ("x", self.x), ("z", self.z)):
            if not np.all(np.isfinite(array)):
                raise ValueError(f"{name} contains non-finite values")
        if self.x.shape[1] < 1 or not np.all(self.x[:, 0] == 1.0):
            raise ValueError("first varying column must be the intercept (all ones)")
        if len(self.linear_labels) != self.w.shape[1]:
            raise ValueError("linear_labels does not match the linear block width")
        if len(self.varying_labels) != self.x.shape[1]:
            raise ValueError("varying_labels does not match the varying block width")
        return self

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def q(self) -> int:
        return self.w.shape[1]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def with_response(self, y: np.ndarray) -> "Dataset":
        """Same regressors, new response (bootstrap samples)"""
        return self.model_copy(update={"y": _frozen_array(y, 1)})


def _empty_block(n: int) -> np.ndarray:
    block = np.zeros((n, 0))
    block.setflags(write=False)
    return block


class DesignMatrix(BaseModel):
    """Series regressor matrix P with its coefficient block layout"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    p: np.ndarray = Field(..., description="n x K series design")
    block_offsets: Tuple[int, ...] = Field(..., description="d+1 cut points of the coefficient blocks")
    specs: Tuple[BasisSpec, ...] = Field(..., description="Basis of each coefficient block")

    @model_validator(mode="after")
    def check_layout(self) -> "DesignMatrix":
        offsets = np.asarray(self.block_offsets)
        if offsets.size != len(self.specs) + 1 or offsets[0] != 0:
            raise ValueError("block_offsets must hold d+1 cut points starting at 0")
        if np.any(np.diff(offsets) <= 0):
            raise ValueError("block_offsets must be strictly increasing")
        if offsets[-1] != self.p.shape[1]:
            raise ValueError("last block offset must equal K")
        return self

    @property
    def total_dimension(self) -> int:
        """K"""
        return self.p.shape[1]

    def block(self, l: int) -> np.ndarray:
        """Columns of coefficient block l"""
        return self.p[:, self.block_offsets[l]:self.block_offsets[l + 1]]
