"""Renders figures from swarmsense experiment CSVs."""

from .figures import FigureKind, FigureSpec, SchemaError, load_rows, render

__all__ = [
    "FigureKind",
    "FigureSpec",
    "SchemaError",
    "load_rows",
    "render",
]
