"""Chart renderer for cropmarl benchmark result CSVs."""

from .render import FIGURE_KINDS, FigureSpec, SchemaError, load_aggregate_rows, render

__version__ = "0.1.0"
