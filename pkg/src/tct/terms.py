"""Symbolic terms shared by SSA extraction, VC generation and the solver backend.

Integers are unbounded; the wrapping word operations exist only as the
function symbols ``add``, ``sub`` and ``mul``. Maps are total functions
from integers to integers with an uninterpreted ``sum``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Optional, Union

from . import words
from .errors import SortMismatch, UnboundSymbol

INT, BOOL, MAP = "int", "bool", "map"


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Lit(Term):
    value: Union[int, bool]

    @property
    def sort(self) -> str:
        return BOOL if isinstance(self.value, bool) else INT


@dataclass(frozen=True)
class Sym(Term):
    name: str
    sort: str = INT


@dataclass(frozen=True)
class App(Term):
    op: str
    args: tuple


@dataclass(frozen=True)
class Quant(Term):
    """Universal quantification over one integer (or map) variable."""

    var: str
    sort: str
    body: Term


TRUE, FALSE = Lit(True), Lit(False)

WORD_FUNS = ("add", "sub", "mul")
ARITH = ("+", "-", "*", "div", "mod")
COMPARE = ("<", "<=", ">", ">=")
CONNECTIVES = ("and", "or", "=>", "not")
PREDICATES = ("isAddr", "isWord")

# op -> (argument sorts or None for "any", result sort)
SIGNATURES: dict[str, tuple[Optional[tuple[str, ...]], str]] = {
    **{op: ((INT, INT), INT) for op in WORD_FUNS + ARITH},
    **{op: ((INT, INT), BOOL) for op in COMPARE},
    "=": (None, BOOL),
    "and": (None, BOOL),
    "or": (None, BOOL),
    "=>": ((BOOL, BOOL), BOOL),
    "not": ((BOOL,), BOOL),
    "select": ((MAP, INT), INT),
    "store": ((MAP, INT, INT), MAP),
    "sum": ((MAP,), INT),
    "isAddr": ((INT,), BOOL),
    "isWord": ((INT,), BOOL),
    "ite": (None, INT),
}


# ------------------------------------------------------------ construction


def app(op: str, *args: Term) -> App:
    return App(op, tuple(args))


def and_(*ts: Term) -> Term:
    flat: list[Term] = []
    for t in ts:
        if isinstance(t, App) and t.op == "and":
            flat.extend(t.args)
        elif t != TRUE:
            flat.append(t)
    if not flat:
        return TRUE
    return flat[0] if len(flat) == 1 else App("and", tuple(flat))


def or_(*ts: Term) -> Term:
    flat = [t for t in ts if t != FALSE]
    if not flat:
        return FALSE
    return flat[0] if len(flat) == 1 else App("or", tuple(flat))


def not_(t: Term) -> Term:
    if isinstance(t, Lit) and isinstance(t.value, bool):
        return Lit(not t.value)
    if isinstance(t, App) and t.op == "not":
        return t.args[0]
    return App("not", (t,))


def eq(a: Term, b: Term) -> App:
    return App("=", (a, b))


def implies(a: Term, b: Term) -> App:
    return App("=>", (a, b))


def select(m: Term, i: Term) -> App:
    return App("select", (m, i))


def store(m: Term, i: Term, v: Term) -> App:
    return App("store", (m, i, v))


def sum_(m: Term) -> App:
    return App("sum", (m,))


# ------------------------------------------------------------------ queries


def sort_of(t: Term) -> str:
    """Infer and check the sort of ``t``."""
    if isinstance(t, Lit):
        return t.sort
    if isinstance(t, Sym):
        return t.sort
    if isinstance(t, Quant):
        if sort_of(t.body) != BOOL:
            raise SortMismatch(f"quantifier body is not boolean: {show(t)}")
        return BOOL
    if isinstance(t, App):
        try:
            sig, result = SIGNATURES[t.op]
        except KeyError:
            raise SortMismatch(f"unknown operator {t.op!r}") from None
        sorts = [sort_of(a) for a in t.args]
        if t.op == "=":
            if len(sorts) != 2 or sorts[0] != sorts[1]:
                raise SortMismatch(f"equality between different sorts: {show(t)}")
        elif t.op in ("and", "or"):
            if any(s != BOOL for s in sorts):
                raise SortMismatch(f"non-boolean operand in {show(t)}")
        elif t.op == "ite":
            if len(sorts) != 3 or sorts[0] != BOOL or sorts[1] != sorts[2]:
                raise SortMismatch(f"ill-sorted ite: {show(t)}")
            return sorts[1]
        elif tuple(sorts) != sig:
            raise SortMismatch(f"{t.op} expects {sig}, got {tuple(sorts)} in {show(t)}")
        return result
    raise TypeError(f"not a term: {t!r}")


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, App):
        for a in t.args:
            yield from subterms(a)
    elif isinstance(t, Quant):
        yield from subterms(t.body)


def free_syms(t: Term, bound: frozenset = frozenset()) -> set[Sym]:
    out: set[Sym] = set()
    if isinstance(t, Sym):
        if t.name not in bound:
            out.add(t)
    elif isinstance(t, App):
        for a in t.args:
            out |= free_syms(a, bound)
    elif isinstance(t, Quant):
        out |= free_syms(t.body, bound | {t.var})
    return out


def subst(t: Term, mapping: Mapping[str, Term]) -> Term:
    """Capture-free substitution of free symbols by name."""
    if not mapping:
        return t
    if isinstance(t, Sym):
        return mapping.get(t.name, t)
    if isinstance(t, App):
        return App(t.op, tuple(subst(a, mapping) for a in t.args))
    if isinstance(t, Quant):
        inner = {k: v for k, v in mapping.items() if k != t.var}
        return Quant(t.var, t.sort, subst(t.body, inner))
    return t


def is_nonlinear(t: Term) -> bool:
    """True when ``t`` multiplies or divides two non-constant terms."""
    for s in subterms(t):
        if isinstance(s, App) and s.op in ("mul", "*", "div", "mod"):
            a, b = s.args
            if s.op in ("div", "mod"):
                if not isinstance(b, Lit):
                    return True
            elif not isinstance(a, Lit) and not isinstance(b, Lit):
                return True
    return False


# ----------------------------------------------------------------- printing

_INFIX = {
    "+": "+", "-": "-", "*": "*", "div": "div", "mod": "mod",
    "<": "<", "<=": "<=", ">": ">", ">=": ">=", "=": "==",
    "and": "&&", "or": "||", "=>": "==>",
}
_NAMED_CONSTS = {words.TWO_E255: "TwoE255", words.TWO_E256: "TwoE256", words.TWO_E160: "TwoE160"}


def _show_child(t: Term, parent: str) -> str:
    s = show(t)
    if isinstance(t, App) and t.op in _INFIX and not (t.op == parent and t.op in ("and", "or")):
        return f"({s})"
    if isinstance(t, Quant):
        return f"({s})"
    return s


def show(t: Term) -> str:
    """Deterministic human-readable rendering (Boogie-like)."""
    if isinstance(t, Lit):
        if isinstance(t.value, bool):
            return "true" if t.value else "false"
        return _NAMED_CONSTS.get(t.value, str(t.value))
    if isinstance(t, Sym):
        return t.name
    if isinstance(t, Quant):
        sort = "address" if t.sort == INT else "[address]int"
        return f"forall {t.var}: {sort} :: {show(t.body)}"
    if isinstance(t, App):
        if t.op == "select":
            return f"{_show_child(t.args[0], 'select')}[{show(t.args[1])}]"
        if t.op == "store":
            m, i, v = t.args
            return f"{_show_child(m, 'store')}[{show(i)} := {show(v)}]"
        if t.op == "not":
            return f"!{_show_child(t.args[0], 'not')}"
        if t.op in _INFIX:
            sep = f" {_INFIX[t.op]} "
            return sep.join(_show_child(a, t.op) for a in t.args)
        return f"{t.op}({', '.join(show(a) for a in t.args)})"
    raise TypeError(f"not a term: {t!r}")


# --------------------------------------------------------------- evaluation


class MapVal:
    """A total integer map: finitely many explicit entries over a default.

    ``sum`` is the sum over addresses. Concrete maps (default 0) compute it
    from their entries; maps read back from a solver model carry the sum the
    model assigned, which store() then updates by the sum-update law.
    """

    __slots__ = ("entries", "default", "_sum")

    def __init__(self, entries: Optional[Mapping[int, int]] = None, default: int = 0,
                 sum_value: Optional[int] = None):
        self.entries = {k: v for k, v in (entries or {}).items() if v != default}
        self.default = default
        self._sum = sum_value

    def get(self, i: int) -> int:
        return self.entries.get(i, self.default)

    def set(self, i: int, v: int) -> "MapVal":
        new_sum = None
        if self._sum is not None:
            new_sum = self._sum - self.get(i) + v if words.is_address(i) else self._sum
        entries = dict(self.entries)
        entries[i] = v
        out = MapVal(entries, self.default, new_sum)
        return out

    def with_sum(self, s: int) -> "MapVal":
        return MapVal(self.entries, self.default, s)

    @property
    def sum(self) -> int:
        if self._sum is not None:
            return self._sum
        if self.default != 0:
            raise ValueError("sum of a map with a nonzero default is unbounded")
        return sum(v for k, v in self.entries.items() if words.is_address(k))

    def keys(self) -> Iterable[int]:
        return self.entries.keys()

    def __eq__(self, other) -> bool:
        if not isinstance(other, MapVal):
            return NotImplemented
        return self.default == other.default and self.entries == other.entries

    def __hash__(self):
        return hash((self.default, tuple(sorted(self.entries.items()))))

    def __repr__(self) -> str:
        return f"MapVal({dict(sorted(self.entries.items()))}, default={self.default}, sum={self._sum})"


Value = Union[int, bool, MapVal]


def default_domain(env: Mapping[str, Value], extra: Iterable[int] = ()) -> list[int]:
    """Finite set of addresses that decides quantifiers for maps in ``env``.

    Map keys and address-valued symbols are included, plus one address that
    is not among them (standing for every address at its map's default).
    """
    cands: set[int] = set(x for x in extra if words.is_address(x))
    for v in env.values():
        if isinstance(v, MapVal):
            cands.update(k for k in v.keys() if words.is_address(k))
        elif isinstance(v, int) and not isinstance(v, bool) and words.is_address(v):
            cands.add(v)
    fresh = 0x5EED
    while fresh in cands:
        fresh += 1
    cands.add(fresh)
    return sorted(cands)


def eval_term(t: Term, env: Mapping[str, Value], domain: Optional[list[int]] = None) -> Value:
    """Evaluate ``t`` concretely. Raises ZeroDivisionError on div/mod by zero."""
    if isinstance(t, Lit):
        return t.value
    if isinstance(t, Sym):
        try:
            return env[t.name]
        except KeyError:
            raise UnboundSymbol(f"no value for symbol {t.name!r}") from None
    if isinstance(t, Quant):
        if t.sort != INT:
            raise TypeError("only integer quantifiers can be evaluated")
        if domain is None:
            domain = default_domain(env)
        scope = dict(env)
        for x in domain:
            scope[t.var] = x
            if not eval_term(t.body, scope, domain):
                return False
        return True
    if not isinstance(t, App):
        raise TypeError(f"not a term: {t!r}")
    op = t.op
    if op == "and":
        return all(eval_term(a, env, domain) for a in t.args)
    if op == "or":
        return any(eval_term(a, env, domain) for a in t.args)
    if op == "=>":
        return (not eval_term(t.args[0], env, domain)) or bool(eval_term(t.args[1], env, domain))
    if op == "ite":
        c = eval_term(t.args[0], env, domain)
        return eval_term(t.args[1] if c else t.args[2], env, domain)
    args = [eval_term(a, env, domain) for a in t.args]
    fn = _EVAL_OPS.get(op)
    if fn is None:
        raise TypeError(f"cannot evaluate operator {op!r}")
    return fn(*args)


_EVAL_OPS: dict[str, Callable] = {
    "add": words.add,
    "sub": words.sub,
    "mul": words.mul,
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "div": words.ediv,
    "mod": words.emod,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "=": lambda a, b: a == b,
    "not": lambda a: not a,
    "select": lambda m, i: m.get(i),
    "store": lambda m, i, v: m.set(i, v),
    "sum": lambda m: m.sum,
    "isAddr": words.is_address,
    "isWord": words.is_word,
}
