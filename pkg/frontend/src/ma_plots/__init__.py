"""Figure rendering for movable-antenna channel-estimation sweep results."""

from .render import AGG_COLUMNS, KINDS, PlotSpec, SchemaError, TRACE_COLUMNS, render

__all__ = ["AGG_COLUMNS", "KINDS", "PlotSpec", "SchemaError", "TRACE_COLUMNS",
           "render"]
