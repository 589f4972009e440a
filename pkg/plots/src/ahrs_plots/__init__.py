"""Figure rendering for manifold-ahrs metrics and sensor-log CSVs."""

from .render import FIGURE_KINDS, PlotSpec, SchemaError, build_figure, render

__all__ = ["FIGURE_KINDS", "PlotSpec", "SchemaError", "build_figure", "render"]
