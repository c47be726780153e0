"""Batch matplotlib figures over rdsync CSV artifacts."""

from .figures import (
    EmptyCsvError,
    FigureSpec,
    KINDS,
    MissingColumnError,
    PlotsError,
    Table,
    read_table,
    render,
)

__all__ = [
    "EmptyCsvError",
    "FigureSpec",
    "KINDS",
    "MissingColumnError",
    "PlotsError",
    "Table",
    "read_table",
    "render",
]
