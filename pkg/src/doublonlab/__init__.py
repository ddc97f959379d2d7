"""Doublon emission toolkit for flat-band rhombic photonic chains."""

__version__ = "0.1.0"

from .errors import ConfigError, NumericalError
from .lattice import (
    EmitterLeg,
    EmitterSpec,
    LatticeSpec,
    Model,
    SiteIndex,
    Sublattice,
    site,
    validate_model,
)

__all__ = [
    "ConfigError",
    "NumericalError",
    "EmitterLeg",
    "EmitterSpec",
    "LatticeSpec",
    "Model",
    "SiteIndex",
    "Sublattice",
    "site",
    "validate_model",
    "__version__",
]
