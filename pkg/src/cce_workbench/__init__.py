"""Exact-arithmetic workbench for conformally compact Einstein metrics."""
from .kernel import ScalarExpr, JetScalar, parse_expr, jet_of, jet_invert

__version__ = "0.1.0"
