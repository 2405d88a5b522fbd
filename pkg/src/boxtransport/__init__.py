"""Advection-diffusion transport in a rectangular box with one attracting wall.

Analytic mean and median arrival times, transient and steady densities and
multi-species arrival statistics, with a lattice-walk Monte Carlo to check
them against.
"""

__version__ = "0.1.0"

from .errors import (BoxTransportError, BracketError, ConvergenceError, DegenerateError,
                     ParameterError)
from .model import (DerivedCoefficients, EnclosureGeometry, MovementParams, NondimScale,
                    Species, SpeciesEnsemble, derived_coefficients, dimensionalize,
                    nondimensionalize, validate_params)

__all__ = [
    "BoxTransportError",
    "BracketError",
    "ConvergenceError",
    "DegenerateError",
    "ParameterError",
    "DerivedCoefficients",
    "EnclosureGeometry",
    "MovementParams",
    "NondimScale",
    "Species",
    "SpeciesEnsemble",
    "derived_coefficients",
    "dimensionalize",
    "nondimensionalize",
    "validate_params",
]
