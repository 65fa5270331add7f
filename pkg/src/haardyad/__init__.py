"""Desk-scale verification toolkit for random dyadic systems, Haar-basis
operator decompositions, compatibility martingales, and translation
inequalities.

Subpackages follow the pipeline: `lattice` (shifted dyadic grids, good/bad
cubes), `haar` (grid functions and the Haar transform), `kernel` (singular
kernels and coefficient tables), `figiel` (telescoping decomposition and
good-cube averaging), `martingale` (compatibility partitions and difference
sequences), `bourgain` (smoothing identity and multiplier pipeline), and
`harness` (seeded experiment orchestration).
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    HaardyadError,
    ParameterError,
    RangeError,
    ResourceError,
    UnsupportedError,
)

__all__ = [
    "__version__",
    "HaardyadError",
    "ParameterError",
    "RangeError",
    "ResourceError",
    "ConfigError",
    "UnsupportedError",
]
