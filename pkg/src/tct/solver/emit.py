"""SMT-LIB v2 rendering of verification queries."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .. import words
from ..errors import UnsupportedExpr
from ..terms import BOOL, INT, MAP, App, Lit, Quant, Sym, Term, free_syms, is_nonlinear, subst, subterms
from ..vcgen import VCQuery

LINEAR_LOGIC = "AUFLIA"
NONLINEAR_LOGIC = "AUFNIA"

_SORTS = {INT: "Int", BOOL: "Bool", MAP: "(Array Int Int)"}
_OPS = {
    "add": "add", "sub": "sub", "mul": "mul",
    "+": "+", "-": "-", "*": "*", "div": "div", "mod": "mod",
    "<": "<", "<=": "<=", ">": ">", ">=": ">=", "=": "=",
    "and": "and", "or": "or", "=>": "=>", "not": "not", "ite": "ite",
    "select": "select", "store": "store", "sum": "sum",
    "isAddr": "isAddr", "isWord": "isWord",
}
_CONSTS = {words.TWO_E160: "TwoE160", words.TWO_E255: "TwoE255", words.TWO_E256: "TwoE256"}
_SIMPLE = re.compile(r"^[A-Za-z~!@$%^&*_+=<>.?/\-][0-9A-Za-z~!@$%^&*_+=<>.?/\-]*$")

GOAL_SKOLEM = "goal."

# Each definition equals (op a b) mod 2^256 on all integers; the in-range
# cases are spelled out so the solver rarely needs its mod reasoning.
_WORD_DEFS = {
    "add": "(define-fun add ((a Int) (b Int)) Int (let ((s (+ a b))) "
           "(ite (and (<= 0 s) (< s TwoE256)) s "
           "(ite (and (<= TwoE256 s) (< s (* 2 TwoE256))) (- s TwoE256) (mod s TwoE256)))))",
    "sub": "(define-fun sub ((a Int) (b Int)) Int (let ((s (- a b))) "
           "(ite (and (<= 0 s) (< s TwoE256)) s "
           "(ite (and (<= (- TwoE256) s) (< s 0)) (+ s TwoE256) (mod s TwoE256)))))",
    "mul": "(define-fun mul ((a Int) (b Int)) Int (let ((p (* a b))) "
           "(ite (and (<= 0 p) (< p TwoE256)) p (mod p TwoE256))))",
}


@dataclass(frozen=True)
class SolverScript:
    text: str
    logic: str
    query: str = ""
    value_terms: tuple = ()  # terms to read back on sat: (label, smt text)
    skolems: tuple = ()  # names of goal witnesses
    nonlinear: bool = False

    @property
    def names(self) -> list[str]:
        return re.findall(r":named ([^\s)]+)", self.text)


def symbol(name: str) -> str:
    return name if _SIMPLE.match(name) else "|" + name.replace("|", "_") + "|"


def render(t: Term, renames: dict | None = None) -> str:
    renames = renames or {}
    if isinstance(t, Lit):
        if isinstance(t.value, bool):
            return "true" if t.value else "false"
        if t.value in _CONSTS:
            return _CONSTS[t.value]
        return str(t.value) if t.value >= 0 else f"(- {-t.value})"
    if isinstance(t, Sym):
        return renames.get(t.name, symbol(t.name))
    if isinstance(t, Quant):
        var = "q." + t.var
        inner = dict(renames)
        inner[t.var] = var
        body = render(t.body, inner)
        pattern = _pattern(t)
        if pattern is not None:
            body = f"(! {body} :pattern ({render(pattern, inner)}))"
        return f"(forall (({var} {_SORTS[t.sort]})) {body})"
    if isinstance(t, App):
        op = _OPS.get(t.op)
        if op is None:
            raise UnsupportedExpr(f"no SMT rendering for operator {t.op!r}")
        return "(" + " ".join([op] + [render(a, renames) for a in t.args]) + ")"
    raise UnsupportedExpr(f"not a term: {t!r}")


def _pattern(q: Quant):
    """A select on the bound variable, used as the instantiation trigger."""
    for s in subterms(q.body):
        if isinstance(s, App) and s.op == "select" and s.args[1] == Sym(q.var, q.sort):
            if not any(isinstance(x, Quant) for x in subterms(s.args[0])):
                return s
    return None


def _ground_subterms(t: Term, bound: frozenset = frozenset()):
    """Subterms of ``t`` that do not mention a quantified variable."""
    if isinstance(t, Quant):
        yield from _ground_subterms(t.body, bound | {t.var})
        return
    if not any(s.name in bound for s in free_syms(t)):
        yield t
    if isinstance(t, App):
        for a in t.args:
            yield from _ground_subterms(a, bound)


def _split_goal(goal: Term) -> tuple[Term, list[tuple[str, str]]]:
    """Skolemize leading universal quantifiers of the goal."""
    skolems = []
    while isinstance(goal, Quant):
        name = GOAL_SKOLEM + goal.var
        skolems.append((name, goal.sort))
        goal = subst(goal.body, {goal.var: Sym(name, goal.sort)})
    return goal, skolems


def emit_script(q: VCQuery, anchors: tuple = ()) -> SolverScript:
    """Deterministic SMT-LIB script: assumptions asserted, the goal negated.

    ``anchors`` are extra SMT-LIB formulas (pinning symbols to concrete
    values) asserted before the goal.
    """
    symbols = q.symbols()
    goal, skolems = _split_goal(q.goal)
    formulas = q.ranges() + [a.term for a in q.assumptions] + [goal]
    nonlinear = any(is_nonlinear(f) for f in formulas)
    logic = NONLINEAR_LOGIC if nonlinear else LINEAR_LOGIC

    used_ops = set()
    for f in formulas:
        for s in subterms(f):
            if isinstance(s, App):
                used_ops.add(s.op)

    out = [
        "(set-option :produce-models true)",
        "(set-option :random-seed 0)",
        f"(set-logic {logic})",
        f"(define-fun TwoE160 () Int {words.TWO_E160})",
        f"(define-fun TwoE255 () Int {words.TWO_E255})",
        f"(define-fun TwoE256 () Int {words.TWO_E256})",
        "(define-fun isAddr ((a Int)) Bool (and (<= 0 a) (< a TwoE160)))",
        "(define-fun isWord ((a Int)) Bool (and (<= 0 a) (< a TwoE256)))",
    ]
    for fn in ("add", "sub", "mul"):
        if fn in used_ops:
            out.append(_WORD_DEFS[fn])
    out.append("(declare-fun sum ((Array Int Int)) Int)")

    names = sorted(symbols)
    declared = list(names) + [n for n, _ in skolems]
    sorts = dict(symbols)
    sorts.update(dict(skolems))
    maps = [n for n in names if symbols[n] == MAP]
    for n in declared:
        out.append(f"(declare-const {symbol(n)} {_SORTS[sorts[n]]})")
    # sum-bound instances only for maps the invariants and the goal talk about
    goal_maps = {s.name for s in free_syms(q.goal) if s.sort == MAP}
    base_maps = {d.name for d in q.declarations if d.sort == MAP}
    bound_maps = [m for m in maps if m in goal_maps or m in base_maps]
    for m in bound_maps:
        out.append(f"(declare-const {symbol('nn.' + m)} Int)")

    def named(term: str, label: str) -> str:
        return f"(assert (! {term} :named {label}))"

    for i, r in enumerate(q.ranges()):
        out.append(named(render(r), f"range_{i}"))
    for n, sort in skolems:
        if sort == INT:
            out.append(named(f"(isWord {symbol(n)})", f"range_{n}"))

    # ground instances of the map-sum laws
    stores: list[Term] = []
    indices: list[Term] = []
    for f in formulas:
        for s in _ground_subterms(f):
            if isinstance(s, App) and s.op == "store" and s not in stores:
                stores.append(s)
            if isinstance(s, App) and s.op in ("select", "store") and s.args[1] not in indices:
                indices.append(s.args[1])
    for n, sort in skolems:
        if Sym(n, sort) not in indices and sort == INT:
            indices.append(Sym(n, sort))
    k = 0
    for s in stores:
        m, a, v = s.args
        law = (f"(=> (isAddr {render(a)}) (= (sum {render(s)}) "
               f"(+ (- (sum {render(m)}) (select {render(m)} {render(a)})) {render(v)})))")
        out.append(named(law, f"ax_update_{k}"))
        k += 1
    k = 0
    for m in bound_maps:
        ms, nn = symbol(m), symbol("nn." + m)
        for i in indices:
            ri = render(i)
            law = (f"(=> (isAddr {ri}) (or (and (isAddr {nn}) (< (select {ms} {nn}) 0)) "
                   f"(<= (select {ms} {ri}) (sum {ms}))))")
            out.append(named(law, f"ax_bound_{k}"))
            k += 1

    counters: dict[str, int] = {}
    for a in q.assumptions:
        tag = a.tag
        idx = counters.get(tag, 0)
        counters[tag] = idx + 1
        out.append(named(render(a.term), f"{tag}_{idx}"))
    for i, a in enumerate(anchors):
        out.append(named(a, f"anchor_{i}"))
    out.append(named(f"(not {render(goal)})", "goal"))
    out.append("(check-sat)")

    value_terms = [(n, symbol(n)) for n in declared]
    value_terms += [(f"sum({m})", f"(sum {symbol(m)})") for m in maps]
    return SolverScript(
        text="\n".join(out) + "\n",
        logic=logic,
        query=q.name,
        value_terms=tuple(value_terms),
        skolems=tuple(n for n, _ in skolems),
        nonlinear=nonlinear,
    )
