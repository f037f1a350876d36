"""
Services module for plvc
"""

from .bootstrap_service import SpecificationTestService, get_specification_test_service, wild_bootstrap_test
from .simulation_service import SimulationService, get_simulation_service, run_sim, run_sweep

__all__ = [
    'SpecificationTestService',
    'get_specification_test_service',
    'wild_bootstrap_test',
    'SimulationService',
    'get_simulation_service',
    'run_sim',
    'run_sweep',
]
