"""Batch figure rendering for emitted market series."""

from .figures import (
    MissingColumnError,
    PlotError,
    PlotSpec,
    PRESET_BOUNDARIES,
    RenderResult,
    preset_spec,
    read_columns,
    render_price_figure,
)

__version__ = "0.1.0"

__all__ = [
    "MissingColumnError",
    "PlotError",
    "PlotSpec",
    "PRESET_BOUNDARIES",
    "RenderResult",
    "preset_spec",
    "read_columns",
    "render_price_figure",
    "__version__",
]
