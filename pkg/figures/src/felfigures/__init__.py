"""Figure rendering for the simulation engine's experiment CSVs."""

__version__ = "0.1.0"

from .render import FORMATS, FigureJob, render
from .schemas import FIGURES, SchemaError, load_table

__all__ = ["FIGURES", "FORMATS", "FigureJob", "SchemaError", "load_table",
           "render"]
