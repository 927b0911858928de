"""Figure rendering for kickedising sweep outputs."""

__version__ = "0.1.0"

from .figures import (
    FIGURE_KINDS,
    OTOC_VS_N,
    OTOC_VS_X,
    OTOC_VS_W,
    VEFF_VS_N,
    VEFF_VS_W,
    ZNE_COMPARE,
    FigureSpec,
    SelectionError,
    read_aggregates,
    render,
)

__all__ = [
    "__version__",
    "FIGURE_KINDS",
    "OTOC_VS_N", "OTOC_VS_X", "OTOC_VS_W",
    "VEFF_VS_N", "VEFF_VS_W", "ZNE_COMPARE",
    "FigureSpec", "SelectionError", "read_aggregates", "render",
]
