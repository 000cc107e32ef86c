"""Fourier decay of the measure of maximal entropy for a perturbed doubling map."""

__version__ = "0.1.0"

from .dynamics import PerturbedMap, branch, birkhoff_sum, f_map, phi_delta, phi_delta_inv
from .errors import (
    BudgetError,
    DepthOverflowError,
    DomainError,
    FitRefusedError,
    InsufficientRangeError,
    PrecisionWarning,
    ResolutionError,
    ScaleError,
    ValidationError,
)
from .fourier import decay_fit, mu_hat
from .words import Word

__all__ = [
    "__version__",
    "PerturbedMap",
    "Word",
    "branch",
    "birkhoff_sum",
    "f_map",
    "phi_delta",
    "phi_delta_inv",
    "mu_hat",
    "decay_fit",
    "BudgetError",
    "DepthOverflowError",
    "DomainError",
    "FitRefusedError",
    "InsufficientRangeError",
    "PrecisionWarning",
    "ResolutionError",
    "ScaleError",
    "ValidationError",
]
