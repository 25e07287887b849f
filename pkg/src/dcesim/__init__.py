"""Dynamical Casimir effect in a cavity with two oscillating walls."""

from ._backend import BACKEND
from .cavity import CavityConfig, WallMotion

__all__ = ["BACKEND", "CavityConfig", "WallMotion"]
__version__ = "0.1.0"
