"""Translation of annotation expressions (properties, hypotheses) into terms.

Property arithmetic is unbounded: ``+`` is integer addition, not the
wrapping ``add``. Quantifiers range over addresses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import UnboundSymbol
from .lang import ast as A
from .terms import (
    FALSE,
    INT,
    TRUE,
    App,
    Lit,
    Quant,
    Sym,
    Term,
    and_,
    app,
    eq,
    implies,
    not_,
    or_,
    select,
    sum_,
)

_CMP = {"<": "<", "<=": "<=", ">": ">", ">=": ">="}
_ARITH = {"+": "+", "-": "-", "*": "*", "/": "div", "%": "mod"}
_WRAP = {"+": "add", "-": "sub", "*": "mul", "/": "div", "%": "mod"}


@dataclass
class PropScope:
    """Where names in a property point to."""

    scalars: dict[str, Term] = field(default_factory=dict)  # params, locals, storage scalars
    maps: dict[str, Term] = field(default_factory=dict)
    sender: Optional[Term] = None
    old: Optional["PropScope"] = None


def fold_constant(e: A.Expr) -> int:
    """Value of a constant arithmetic expression (used for ``^``)."""
    if isinstance(e, A.IntLit):
        return e.value
    if isinstance(e, A.BinOp):
        a, b = fold_constant(e.left), fold_constant(e.right)
        ops = {"+": a + b, "-": a - b, "*": a * b}
        if e.op in ops:
            return ops[e.op]
        if e.op == "^":
            return a ** b
        from .words import ediv, emod

        return ediv(a, b) if e.op == "/" else emod(a, b)
    raise ValueError(f"not a constant: {e!r}")


def prop_term(e: A.Expr, scope: PropScope, bound: frozenset = frozenset(), wrapping: bool = False) -> Term:
    def tr(x: A.Expr) -> Term:
        return prop_term(x, scope, bound, wrapping)

    if isinstance(e, A.IntLit):
        return Lit(e.value)
    if isinstance(e, A.BoolLit):
        return TRUE if e.value else FALSE
    if isinstance(e, A.MsgSender):
        if scope.sender is None:
            raise UnboundSymbol("msg.sender is not bound here")
        return scope.sender
    if isinstance(e, A.Name):
        if e.id in bound:
            return Sym(e.id, INT)
        if e.id not in scope.scalars:
            raise UnboundSymbol(f"no symbol for {e.id!r}")
        return scope.scalars[e.id]
    if isinstance(e, A.Index):
        if e.map not in scope.maps:
            raise UnboundSymbol(f"no symbol for map {e.map!r}")
        return select(scope.maps[e.map], tr(e.index))
    if isinstance(e, A.Sum):
        if e.map not in scope.maps:
            raise UnboundSymbol(f"no symbol for map {e.map!r}")
        return sum_(scope.maps[e.map])
    if isinstance(e, A.Old):
        if scope.old is None:
            raise UnboundSymbol("old() has no pre-state here")
        return prop_term(e.expr, scope.old, bound, wrapping)
    if isinstance(e, A.Forall):
        body = prop_term(e.body, scope, bound | {e.var}, wrapping)
        return Quant(e.var, INT, implies(app("isAddr", Sym(e.var, INT)), body))
    if isinstance(e, A.Not):
        return not_(tr(e.operand))
    if isinstance(e, A.BinOp):
        if e.op == "^":
            value = fold_constant(e)
            return Lit(value % 2**256 if wrapping else value)
        a, b = tr(e.left), tr(e.right)
        if e.op == "&&":
            return and_(a, b)
        if e.op == "||":
            return or_(a, b)
        if e.op == "==>":
            return implies(a, b)
        if e.op == "==":
            return eq(a, b)
        if e.op == "!=":
            return not_(eq(a, b))
        if e.op in _CMP:
            return App(_CMP[e.op], (a, b))
        ops = _WRAP if wrapping else _ARITH
        return App(ops[e.op], (a, b))
    raise TypeError(f"not an expression: {e!r}")
