"""
plvc: series estimation of partially linear varying coefficient models
"""

__version__ = "0.1.0"
