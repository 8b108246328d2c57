"""Figure rendering for simulation metrics CSVs."""

from .figures import (
    EXPECTED_HEADER,
    PANELS,
    FigureSpec,
    MetricRecord,
    PanelReport,
    SchemaMismatch,
    read_metrics,
    render_panels,
)

__version__ = "0.1.0"

__all__ = [
    "EXPECTED_HEADER",
    "PANELS",
    "FigureSpec",
    "MetricRecord",
    "PanelReport",
    "SchemaMismatch",
    "read_metrics",
    "render_panels",
]
