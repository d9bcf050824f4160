"""Threshold moving-average processes with feedback.

Simulation by forward recursion and by the closed-form stationary solution,
exact ACF/moment formulas for the special shapes that have them, and Monte
Carlo checks of stationarity, uniqueness and exponential decay.
"""

__version__ = "0.1.0"

from .model import ModelError, TmaModel, contraction_delta, load_model, structural_m
from .noise import Innovation
from .stationary import (
    NumericRefusal,
    SeriesPath,
    alpha_series,
    coupling_check,
    exactness_violations,
    simulate_closed_form,
    simulate_recursive,
)

__all__ = [
    "Innovation",
    "ModelError",
    "NumericRefusal",
    "SeriesPath",
    "TmaModel",
    "alpha_series",
    "contraction_delta",
    "coupling_check",
    "exactness_violations",
    "load_model",
    "simulate_closed_form",
    "simulate_recursive",
    "structural_m",
]
