"""The concretely evaluable fragment used for theorem hypotheses."""

from __future__ import annotations

from typing import Optional

from ..errors import HypothesisNotConcrete
from . import ast as A
from .printer import print_expr


def _reject(why: str, e: A.Expr):
    raise HypothesisNotConcrete(why, print_expr(e))


def check_hypothesis_grammar(expr: A.Expr, contract=None, function: Optional[A.FunctionDef] = None,
                             want: str = "bool") -> None:
    """Raise :class:`HypothesisNotConcrete` unless ``expr`` is a valid hypothesis.

    With ``contract`` (a resolved contract) and ``function`` given, names are
    also checked: only parameters of ``function`` and scalar storage of
    ``contract`` may be read, and map reads must use a literal, a parameter
    or ``msg.sender`` as index.
    """
    params = set(function.param_names()) if function is not None else None
    storage = dict(contract.storage) if contract is not None else None

    def index_ok(ix: A.Expr) -> bool:
        if isinstance(ix, (A.IntLit, A.MsgSender)):
            return True
        if isinstance(ix, A.Name):
            return params is None or ix.id in params
        return False

    def visit(e: A.Expr) -> None:
        if isinstance(e, A.Forall):
            _reject("quantifiers cannot be evaluated concretely", e)
        if isinstance(e, A.Sum):
            _reject("sum() cannot be evaluated concretely", e)
        if isinstance(e, A.Old):
            _reject("old() has no meaning in a hypothesis", e)
        if isinstance(e, A.Name) and params is not None:
            if e.id not in params:
                t = storage.get(e.id) if storage is not None else None
                if t is None:
                    _reject("only parameters and storage of the entry contract may appear", e)
                if t.is_map:
                    _reject("a whole map cannot be evaluated concretely", e)
        if isinstance(e, A.Index):
            if storage is not None and (e.map not in storage or not storage[e.map].is_map):
                _reject("unknown storage map", e)
            if not index_ok(e.index):
                _reject("map index must be a literal, a parameter or msg.sender", e)
        for child in e.children():
            visit(child)

    visit(expr)
    if contract is not None and function is not None:
        from .resolve import Scope, check_expr

        env = dict(contract.storage)
        env.update({p.name: p.type for p in function.params})
        sort = check_expr(expr, Scope(env, property=True, where="hypothesis"))
        if sort != want:
            _reject(f"hypothesis must be a {want} expression", expr)
