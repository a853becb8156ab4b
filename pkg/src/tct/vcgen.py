"""Proof obligations for one straight-line path."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import words
from .errors import ModifiesViolation
from .lang import ast as A
from .lang.hypothesis import check_hypothesis_grammar
from .lang.parser import parse_expr
from .lang.printer import print_expr
from .lang.resolve import ResolvedProgram
from .symbolic import PropScope, prop_term
from .terms import (
    BOOL,
    INT,
    MAP,
    TRUE,
    App,
    Lit,
    Quant,
    Sym,
    Term,
    app,
    eq,
    free_syms,
    implies,
    or_,
    select,
    show,
    sort_of,
    store,
    sum_,
)
from .tracepath import AccountInfo, AssertGoal, AssignDef, AssumeExpr, DefineSymbol, MapStoreDef, SSAProgram

# ------------------------------------------------------------------ axioms


@dataclass(frozen=True)
class AxiomSet:
    formulas: dict
    constants: dict

    def body(self, name: str) -> tuple[list[tuple[str, str]], Term]:
        """Strip the leading quantifiers of axiom ``name``: (bound vars, body)."""
        t = self.formulas[name]
        bound = []
        while isinstance(t, Quant):
            bound.append((t.var, t.sort))
            t = t.body
        return bound, t


def axioms() -> AxiomSet:
    """The arithmetic and map-sum laws every obligation is checked against."""
    m, a, b, v = Sym("m", MAP), Sym("a"), Sym("b"), Sym("v")
    two256 = Lit(words.TWO_E256)
    is_addr = app("isAddr", a)
    sum_update = Quant("m", MAP, Quant("a", INT, Quant("v", INT, implies(
        is_addr,
        eq(sum_(store(m, a, v)), app("+", app("-", sum_(m), select(m, a)), v)),
    ))))
    nonneg = Quant("a", INT, implies(is_addr, app("<=", Lit(0), select(m, a))))
    bounded = Quant("a", INT, implies(is_addr, app("<=", select(m, a), sum_(m))))
    sum_bound = Quant("m", MAP, implies(nonneg, bounded))

    def word_def(fn: str, op: str) -> Term:
        return Quant("a", INT, Quant("b", INT, eq(app(fn, a, b), app("mod", app(op, a, b), two256))))

    return AxiomSet(
        formulas={
            "sum-update": sum_update,
            "sum-bound": sum_bound,
            "add": word_def("add", "+"),
            "sub": word_def("sub", "-"),
            "mul": word_def("mul", "*"),
        },
        constants={"TwoE255": words.TWO_E255, "TwoE256": words.TWO_E256},
    )


# -------------------------------------------------------------- hypothesis


@dataclass(frozen=True)
class Hypothesis:
    expr: A.Expr

    @classmethod
    def parse(cls, text: str) -> "Hypothesis":
        return cls(parse_expr(text))

    @property
    def text(self) -> str:
        return print_expr(self.expr)


TRUE_HYPOTHESIS = Hypothesis(A.BoolLit(True))


# ------------------------------------------------------------------ queries


@dataclass(frozen=True)
class Assumption:
    term: Term
    tag: str  # hyp | inv | init | pre | path | def
    text: str = ""

    def dump(self) -> str:
        if self.tag == "def":
            lhs, rhs = self.term.args
            return f"      {show(lhs)} := {show(rhs)};"
        prefix = f"({self.tag})" if self.tag not in ("path",) else "     "
        return f"{prefix} assume ({show(self.term)});"


@dataclass
class VCQuery:
    index: int
    origin: str
    label: str
    goal: Term
    assumptions: list[Assumption]
    declarations: list[DefineSymbol]
    defined: dict[str, str] = field(default_factory=dict)  # derived symbol -> sort
    contract: str = ""
    function: str = ""

    @property
    def name(self) -> str:
        return f"q{self.index:02d}-{self.origin}"

    def ranges(self) -> list[Term]:
        out = []
        for d in self.declarations:
            s = Sym(d.name, d.sort)
            if d.sort == MAP:
                q = Sym("q", INT)
                out.append(Quant("q", INT, implies(app("isAddr", q), app("isWord", select(s, q)))))
            elif d.type == "address":
                out.append(app("isAddr", s))
            elif d.sort == INT:
                out.append(app("isWord", s))
        return out

    def symbols(self) -> dict[str, str]:
        out = {d.name: d.sort for d in self.declarations}
        out.update(self.defined)
        return out

    def dump(self) -> str:
        lines = [f"// {self.name} {self.contract}::{self.function}: {self.label}"]
        for d in self.declarations:
            lines.append(f"var {d.name}: {d.type};")
        lines += [a.dump() for a in self.assumptions]
        tag = {"invariant": "inv", "postcondition": "post", "inline-assert": "assert",
               "modifies-frame": "frame"}[self.origin]
        lines.append(f"({tag}) assert ({show(self.goal)});")
        return "\n".join(lines) + "\n"


def dump_queries(queries: list[VCQuery]) -> str:
    return "\n".join(q.dump() for q in queries)


# ----------------------------------------------------------------- builder


def _scope(info: AccountInfo, program: ResolvedProgram, versions: dict[str, str]) -> PropScope:
    rc = program.by_code(info.code_hash)
    scalars: dict[str, Term] = {}
    maps: dict[str, Term] = {}
    for slot, t in rc.storage.items():
        if t.is_map:
            maps[slot] = Sym(versions[slot], MAP)
        else:
            scalars[slot] = Sym(versions[slot], BOOL if t.kind == "bool" else INT)
    return PropScope(scalars, maps)


def _entry_scope(ssa: SSAProgram, program: ResolvedProgram, final: bool) -> PropScope:
    info = ssa.entry
    rc = program.by_code(info.code_hash)
    fn = rc.function(ssa.entry_function)
    initial = _scope(info, program, info.initial)
    initial.sender = Sym(ssa.accounts[0].symbol)
    params = fn.params if fn is not None else []
    for p in params:
        initial.scalars[p.name] = Sym(ssa.entry_params[p.name], BOOL if p.type.kind == "bool" else INT)
    if not final:
        return initial
    scope = _scope(info, program, info.current)
    scope.sender = initial.sender
    for p in params:
        scope.scalars[p.name] = initial.scalars[p.name]
    scope.old = initial
    return scope


def hypothesis_term(hyp: Hypothesis, ssa: SSAProgram, program: ResolvedProgram) -> Term:
    rc = program.by_code(ssa.entry.code_hash)
    fn = rc.function(ssa.entry_function) or A.FunctionDef("constructor", [], [], is_constructor=True)
    check_hypothesis_grammar(hyp.expr, rc, fn)
    return prop_term(hyp.expr, _entry_scope(ssa, program, final=False))


def _frame_goal(st, program_name: str) -> Optional[Term]:
    w = st.writer
    if w is None or w.modifies is None:
        return None
    entries = [(slot, pat) for slot, pat in w.modifies if slot == w.slot]
    if not entries:
        raise ModifiesViolation(w.contract, w.function, w.slot)
    if w.index is None or any(pat is None for _, pat in entries):
        return None
    return or_(*[eq(w.index, pat) for _, pat in entries])


def build_vc(ssa: SSAProgram, hypothesis: Hypothesis, program: ResolvedProgram,
             is_deployment: Optional[bool] = None) -> list[VCQuery]:
    """One query per goal; assumptions in hyp, inv/init, pre, path order."""
    if is_deployment is None:
        is_deployment = ssa.is_deployment
    entry = ssa.entry
    rc = program.by_code(entry.code_hash)
    fn = rc.function(ssa.entry_function)
    touched = [a for a in ssa.accounts if a.code_hash is not None]

    head: list[Assumption] = [Assumption(hypothesis_term(hypothesis, ssa, program), "hyp", hypothesis.text)]
    if is_deployment:
        for slot, t in rc.storage.items():
            s = Sym(entry.initial[slot], MAP if t.is_map else (BOOL if t.kind == "bool" else INT))
            if t.is_map:
                q = Sym("x", INT)
                head.append(Assumption(Quant("x", INT, eq(select(s, q), Lit(0))), "init"))
                head.append(Assumption(eq(sum_(s), Lit(0)), "init"))
            else:
                head.append(Assumption(eq(s, Lit(False) if t.kind == "bool" else Lit(0)), "init"))
    else:
        for info in touched:
            arc = program.by_code(info.code_hash)
            scope = _scope(info, program, info.initial)
            for inv in arc.invariants:
                head.append(Assumption(prop_term(inv, scope), "inv", f"{arc.name}: {print_expr(inv)}"))
    if fn is not None and fn.pre:
        scope = _entry_scope(ssa, program, final=False)
        for pre in fn.pre:
            head.append(Assumption(prop_term(pre, scope), "pre", print_expr(pre)))

    declarations = [st for st in ssa.stmts if isinstance(st, DefineSymbol)]
    pending: list[tuple[str, str, Term, list[Assumption], dict]] = []
    body: list[Assumption] = []
    defined: dict[str, str] = {}
    for st in ssa.stmts:
        if isinstance(st, AssumeExpr):
            body.append(Assumption(st.term, "path", st.origin))
        elif isinstance(st, (AssignDef, MapStoreDef)):
            goal = _frame_goal(st, rc.name)
            if goal is not None:
                w = st.writer
                label = f"{w.contract}.{w.function} writes {w.slot}[{show(w.index)}]"
                pending.append(("modifies-frame", label, goal, list(body), dict(defined)))
            sort = MAP if isinstance(st, MapStoreDef) else st.sort
            body.append(Assumption(eq(Sym(st.name, sort), st.term), "def"))
            defined[st.name] = sort
        elif isinstance(st, AssertGoal):
            pending.append((st.origin, st.label, st.term, list(body), dict(defined)))

    final_goals: list[tuple[str, str, Term]] = []
    for info in touched:
        arc = program.by_code(info.code_hash)
        scope = _scope(info, program, info.current)
        for inv in arc.invariants:
            final_goals.append(("invariant", f"{arc.name}: {print_expr(inv)}", prop_term(inv, scope)))
    if fn is not None and fn.post:
        scope = _entry_scope(ssa, program, final=True)
        for post in fn.post:
            final_goals.append(("postcondition", f"{rc.name}.{fn.name}: {print_expr(post)}",
                                prop_term(post, scope)))
    for origin, label, goal in final_goals:
        pending.append((origin, label, goal, list(body), dict(defined)))

    queries = []
    for i, (origin, label, goal, prefix, defs) in enumerate(pending, 1):
        q = VCQuery(i, origin, label, goal, head + prefix, declarations, defs, rc.name, ssa.entry_function)
        _check_query(q)
        queries.append(q)
    return queries


def _check_query(q: VCQuery) -> None:
    from .errors import SortMismatch, UnboundSymbol

    known = q.symbols()
    for t in [a.term for a in q.assumptions] + [q.goal]:
        if sort_of(t) != BOOL:
            raise SortMismatch(f"non-boolean formula in {q.name}: {show(t)}")
        for s in free_syms(t):
            if known.get(s.name) != s.sort:
                raise UnboundSymbol(f"{s.name} is not declared in {q.name}")
