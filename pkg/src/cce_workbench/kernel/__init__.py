"""Exact scalar kernel: rational functions, jets and the expression parser."""
from .scalar import ScalarExpr, const, var, differentiate, evaluate
from .jets import JetScalar, jet_exp, jet_invert, jet_of
from .parser import parse_expr
from .surd import Surd

__all__ = [
    "ScalarExpr", "JetScalar", "Surd", "const", "var", "differentiate", "evaluate",
    "jet_exp", "jet_invert", "jet_of", "parse_expr",
]
