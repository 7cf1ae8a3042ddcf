"""Figure rendering for epw experiment artifacts.

Consumes the versioned CSV files written by the epw command line tool and
turns them into paper-style figures. No numerics are recomputed here; the
plots show exactly what the CSV content says.
"""

from .figures import FigureSpec, SchemaError, render

__all__ = ["FigureSpec", "SchemaError", "render"]
