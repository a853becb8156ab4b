"""MiniSol language frontend: parsing, printing, inheritance resolution."""

from .hypothesis import check_hypothesis_grammar
from .parser import parse_expr, parse_source
from .printer import print_contract, print_expr, print_unit
from .resolve import ResolvedContract, ResolvedProgram, load_program, resolve_inheritance

__all__ = [
    "check_hypothesis_grammar",
    "load_program",
    "parse_expr",
    "parse_source",
    "print_contract",
    "print_expr",
    "print_unit",
    "ResolvedContract",
    "ResolvedProgram",
    "resolve_inheritance",
]
