"""Compressible Euler flow in a channel closed by an elastic plate, in ALE form."""

from .config import Config, ConfigError, parse_config
from .grid import Grid
from .pressure import DensityRangeError, PressureLaw
from .solver import Solver, State

__all__ = ["Config", "ConfigError", "DensityRangeError", "Grid", "PressureLaw", "Solver",
           "State", "parse_config"]
__version__ = "0.1.0"
