"""Spectral decimation and Laplacian determinants on p.c.f. fractal graphs."""

from .catalog import FamilyDescriptor, basilica, builtin, circle, double_pq, double_sg, load_family
from .decimation import DecimationSystem, SpectrumLevel, multiplicity, spectrum, validate
from .logs import LogCombination, log_of
from .poly import Polynomial, preimages

__version__ = "0.1.0"

__all__ = [
    "DecimationSystem",
    "FamilyDescriptor",
    "LogCombination",
    "Polynomial",
    "SpectrumLevel",
    "basilica",
    "builtin",
    "circle",
    "double_pq",
    "double_sg",
    "load_family",
    "log_of",
    "multiplicity",
    "preimages",
    "spectrum",
    "validate",
]
