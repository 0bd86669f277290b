"""Multisymplectic Lie systems: exact symbolic pipeline plus numerical verification."""

from .symexpr import Chart, RationalExpr, parse, render

__version__ = "0.1.0"

__all__ = ["Chart", "RationalExpr", "parse", "render", "__version__"]
