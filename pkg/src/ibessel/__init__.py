"""Interacting Bessel processes, type-B Dunkl series and their freezing limits."""

from .dunkl import ModelParams, SeriesControl
from .symfunc import Partition

__version__ = "0.1.0"

__all__ = ["ModelParams", "Partition", "SeriesControl", "__version__"]
