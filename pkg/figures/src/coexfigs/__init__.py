"""Static figure rendering for coexistence metric CSVs."""

from .render import render
from .spec import FIGURE_KINDS, FigureError, FigureSpec, load_specs

__all__ = ["FIGURE_KINDS", "FigureError", "FigureSpec", "load_specs", "render"]
__version__ = "0.1.0"
