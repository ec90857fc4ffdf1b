"""Invariants of generically immersed 3-spheres in 4- and 5-space."""

from .config import Config, DEFAULT, load as load_config

__all__ = ["Config", "DEFAULT", "load_config"]
__version__ = "0.1.0"
