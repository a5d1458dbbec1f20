"""Figure generation from recorded control-run directories."""

from .errors import (MalformedRunFile, MissingColumn, MissingRunFile,
                     PlotsError, SchemaMismatch)
from .figures import (FigureSpec, PanelSpec, build_figure,
                      default_figure_spec, render_figure)
from .io import RunData, TrajectoryTable, load_run, read_key_values, read_trajectory

__version__ = "0.1.0"

__all__ = [
    "FigureSpec", "PanelSpec", "RunData", "TrajectoryTable",
    "build_figure", "default_figure_spec", "load_run",
    "read_key_values", "read_trajectory", "render_figure",
    "PlotsError", "MalformedRunFile", "MissingColumn", "MissingRunFile",
    "SchemaMismatch",
]
