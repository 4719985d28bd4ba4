"""Finite relational lattices: natural join with inner union and everything built on the pair."""

from .core import (
    Relation,
    SpecialCode,
    Universe,
    decompose,
    inner_union,
    leq,
    make_relation,
    natural_join,
    special_element,
)
from .expr import Catalog, evaluate, format_expr, infer_header, parse

__version__ = "0.1.0"
