"""
Dataset validation and series design assembly
"""
from .dataset import make_dataset, read_dataset, validate_dataset
from .regressors import block_offsets, build_design, build_regressor, interleave, shared_specs

__all__ = [
    'make_dataset',
    'read_dataset',
    'validate_dataset',
    'block_offsets',
    'build_design',
    'build_regressor',
    'interleave',
    'shared_specs',
]
