"""Inheritance flattening and static checks for MiniSol units."""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from ..errors import (
    CyclicInheritance,
    DuplicateName,
    NameResolutionError,
    OverrideWeakensSpec,
    StorageRedeclaration,
    TypeMismatch,
)
from . import ast as A
from .printer import print_contract


@dataclass
class ResolvedContract:
    name: str
    lineage: list[str]
    storage: dict[str, A.TypeTag]
    functions: dict[str, A.FunctionDef]
    constructor: Optional[A.FunctionDef]
    invariants: list[A.Expr]
    code_hash: str = ""

    def function(self, name: str) -> Optional[A.FunctionDef]:
        if name == "constructor":
            return self.constructor
        return self.functions.get(name)

    def scalars(self) -> list[str]:
        return [n for n, t in self.storage.items() if not t.is_map]

    def maps(self) -> list[str]:
        return [n for n, t in self.storage.items() if t.is_map]

    def as_contract_def(self) -> A.ContractDef:
        return A.ContractDef(
            name=self.name,
            bases=[],
            storage=[A.StorageDecl(t, n) for n, t in self.storage.items()],
            functions=list(self.functions.values()),
            constructor=self.constructor,
            invariants=list(self.invariants),
        )


@dataclass
class ResolvedProgram:
    contracts: dict[str, ResolvedContract] = field(default_factory=dict)

    def __post_init__(self):
        self.by_hash = {c.code_hash: c for c in self.contracts.values()}

    def contract(self, name: str) -> ResolvedContract:
        try:
            return self.contracts[name]
        except KeyError:
            raise NameResolutionError(f"unknown contract {name!r}") from None

    def by_code(self, code_hash: str) -> ResolvedContract:
        try:
            return self.by_hash[code_hash]
        except KeyError:
            raise NameResolutionError(f"no contract with code hash {code_hash}") from None

    def merge(self, other: "ResolvedProgram") -> "ResolvedProgram":
        merged = dict(self.contracts)
        for name, c in other.contracts.items():
            if name in merged and merged[name].code_hash != c.code_hash:
                raise DuplicateName(f"contract {name!r} defined differently in two sources")
            merged[name] = c
        return ResolvedProgram(merged)

    def to_unit(self) -> A.SourceUnit:
        return A.SourceUnit([c.as_contract_def() for c in self.contracts.values()])


def code_hash_of(contract: A.ContractDef) -> str:
    return hashlib.sha256(print_contract(contract).encode("utf-8")).hexdigest()


# --------------------------------------------------------------- flattening


def _lineages(unit: A.SourceUnit) -> dict[str, list[str]]:
    decls = {c.name: c for c in unit.contracts}
    order = {c.name: i for i, c in enumerate(unit.contracts)}
    result: dict[str, list[str]] = {}

    def visit(name: str, stack: list[str]) -> list[str]:
        if name in stack:
            cycle = " -> ".join(stack[stack.index(name):] + [name])
            raise CyclicInheritance(f"cyclic inheritance {cycle}")
        if name in result:
            return result[name]
        c = decls[name]
        lineage: list[str] = []
        for b in c.bases:
            if b not in decls:
                raise NameResolutionError(f"unknown base contract {b!r}", c.loc.line, c.loc.col)
            for x in visit(b, stack + [name]):
                if x not in lineage:
                    lineage.append(x)
        lineage.append(name)
        result[name] = lineage
        return lineage

    for c in unit.contracts:
        visit(c.name, [])
    for c in unit.contracts:
        for b in c.bases:
            if order[b] >= order[c.name]:
                raise NameResolutionError(
                    f"base contract {b!r} must be declared before {c.name!r}", c.loc.line, c.loc.col
                )
    return result


def _covers(entry: A.ModifiesEntry, allowed: list[A.ModifiesEntry]) -> bool:
    for a in allowed:
        if a.slot == entry.slot and (a.index is None or a.index == entry.index):
            return True
    return False


def _override(base: A.FunctionDef, own: A.FunctionDef, contract: str) -> A.FunctionDef:
    if [p.type for p in base.params] != [p.type for p in own.params]:
        raise TypeMismatch(f"{contract}.{own.name} overrides with a different signature", own.loc.line, own.loc.col)
    modifies = own.modifies
    if base.modifies is not None:
        if modifies is None:
            modifies = list(base.modifies)
        else:
            for m in modifies:
                if not _covers(m, base.modifies):
                    raise OverrideWeakensSpec(
                        f"{contract}.{own.name} modifies {m.slot!r} outside the base declaration",
                        own.loc.line,
                        own.loc.col,
                    )
    # base conditions first; skip ones already present so re-flattening is a no-op
    pre = list(base.pre) + [e for e in own.pre if e not in base.pre]
    post = list(base.post) + [e for e in own.post if e not in base.post]
    return dataclasses.replace(own, pre=pre, post=post, modifies=modifies)


def _flatten(name: str, lineage: list[str], decls: dict[str, A.ContractDef]) -> ResolvedContract:
    storage: dict[str, A.TypeTag] = {}
    functions: dict[str, A.FunctionDef] = {}
    invariants: list[A.Expr] = []
    constructor = None
    for cname in lineage:
        c = decls[cname]
        for d in c.storage:
            if d.name in storage:
                raise StorageRedeclaration(
                    f"{cname} redeclares storage {d.name!r}", d.loc.line, d.loc.col
                )
            storage[d.name] = d.type
        for f in c.functions:
            functions[f.name] = _override(functions[f.name], f, cname) if f.name in functions else f
        if c.constructor is not None:
            constructor = c.constructor
        invariants.extend(c.invariants)
    for fname in functions:
        if fname in storage:
            raise DuplicateName(f"{name}: function {fname!r} clashes with a storage slot")
    rc = ResolvedContract(name, lineage, storage, functions, constructor, invariants)
    for f in list(functions.values()) + ([constructor] if constructor else []):
        A.number_body(f.body)
    rc.code_hash = code_hash_of(rc.as_contract_def())
    return rc


def resolve_inheritance(unit: Union[A.SourceUnit, ResolvedProgram]) -> ResolvedProgram:
    """Flatten every contract of ``unit`` and type-check the result."""
    if isinstance(unit, ResolvedProgram):
        unit = unit.to_unit()
    decls = {c.name: c for c in unit.contracts}
    lineages = _lineages(unit)
    contracts = {}
    for c in unit.contracts:
        rc = _flatten(c.name, lineages[c.name], decls)
        check_contract(rc)
        contracts[c.name] = rc
    return ResolvedProgram(contracts)


# -------------------------------------------------------------- type checks

INT, BOOLT, MAPT = "int", "bool", "map"


def _sort_of(t: A.TypeTag) -> str:
    if t.is_map:
        return MAPT
    return BOOLT if t.kind == "bool" else INT


def is_constant(e: A.Expr) -> bool:
    if isinstance(e, A.IntLit):
        return True
    if isinstance(e, A.BinOp) and e.op in A.ARITH_OPS:
        return is_constant(e.left) and is_constant(e.right)
    return False


@dataclass
class Scope:
    """Names visible to an expression and what kind of position it is in."""

    names: dict[str, A.TypeTag]
    property: bool = False
    allow_old: bool = False
    allow_sender: bool = True
    bound: frozenset = frozenset()
    where: str = ""


def _err(cls, msg: str, e: A.Node):
    return cls(msg, e.loc.line, e.loc.col)


def check_expr(e: A.Expr, scope: Scope) -> str:
    """Return the sort ("int" | "bool") of ``e`` or raise."""
    if isinstance(e, A.IntLit):
        return INT
    if isinstance(e, A.BoolLit):
        return BOOLT
    if isinstance(e, A.MsgSender):
        if not scope.allow_sender:
            raise _err(NameResolutionError, f"msg.sender is not available in {scope.where}", e)
        return INT
    if isinstance(e, A.Name):
        if e.id in scope.bound:
            return INT
        t = scope.names.get(e.id)
        if t is None:
            raise _err(NameResolutionError, f"unknown name {e.id!r} in {scope.where}", e)
        if t.is_map:
            raise _err(TypeMismatch, f"map {e.id!r} used as a value", e)
        return _sort_of(t)
    if isinstance(e, A.Index):
        t = scope.names.get(e.map)
        if t is None or not t.is_map:
            raise _err(NameResolutionError, f"{e.map!r} is not a storage map", e)
        if check_expr(e.index, scope) != INT:
            raise _err(TypeMismatch, "map index must be an address", e)
        return INT
    if isinstance(e, A.Sum):
        if not scope.property:
            raise _err(TypeMismatch, "sum() is only allowed in annotations", e)
        t = scope.names.get(e.map)
        if t is None or not t.is_map:
            raise _err(NameResolutionError, f"{e.map!r} is not a storage map", e)
        return INT
    if isinstance(e, A.Forall):
        if not scope.property:
            raise _err(TypeMismatch, "forall is only allowed in annotations", e)
        inner = dataclasses.replace(scope, bound=scope.bound | {e.var})
        if check_expr(e.body, inner) != BOOLT:
            raise _err(TypeMismatch, "forall body must be boolean", e)
        return BOOLT
    if isinstance(e, A.Old):
        if not scope.allow_old:
            raise _err(TypeMismatch, "old() is only allowed in postconditions", e)
        return check_expr(e.expr, dataclasses.replace(scope, allow_old=False))
    if isinstance(e, A.Not):
        if check_expr(e.operand, scope) != BOOLT:
            raise _err(TypeMismatch, "'!' needs a boolean operand", e)
        return BOOLT
    if isinstance(e, A.BinOp):
        ls, rs = check_expr(e.left, scope), check_expr(e.right, scope)
        if e.op in A.BOOL_OPS:
            if ls != BOOLT or rs != BOOLT:
                raise _err(TypeMismatch, f"'{e.op}' needs boolean operands", e)
            return BOOLT
        if e.op in ("==", "!="):
            if ls != rs:
                raise _err(TypeMismatch, f"'{e.op}' compares values of different sorts", e)
            return BOOLT
        if ls != INT or rs != INT:
            raise _err(TypeMismatch, f"'{e.op}' needs integer operands", e)
        if e.op == "^" and not is_constant(e):
            raise _err(TypeMismatch, "'^' is only allowed between constants", e)
        return BOOLT if e.op in A.COMPARE_OPS else INT
    raise TypeError(f"not an expression: {e!r}")


def _check_body(body: list[A.Stmt], rc: ResolvedContract, fn: A.FunctionDef, env: dict[str, A.TypeTag]) -> None:
    params = set(fn.param_names())
    where = f"{rc.name}.{fn.name}"

    def expr(e: A.Expr, want: Optional[str] = None) -> str:
        s = check_expr(e, Scope(env, where=where))
        if want is not None and s != want:
            raise _err(TypeMismatch, f"expected a {want} expression in {where}", e)
        return s

    for s in body:
        if isinstance(s, A.LocalDecl):
            if s.name in env:
                raise _err(DuplicateName, f"local {s.name!r} shadows an existing name in {where}", s)
            expr(s.value, _sort_of(s.type))
            env[s.name] = s.type
        elif isinstance(s, A.Assign):
            t = env.get(s.target)
            if t is None:
                raise _err(NameResolutionError, f"unknown name {s.target!r} in {where}", s)
            if s.target in params:
                raise _err(TypeMismatch, f"parameter {s.target!r} is immutable", s)
            if t.is_map:
                raise _err(TypeMismatch, f"cannot assign the whole map {s.target!r}", s)
            expr(s.value, _sort_of(t))
        elif isinstance(s, A.MapAssign):
            t = env.get(s.map)
            if t is None or not t.is_map:
                raise _err(NameResolutionError, f"{s.map!r} is not a storage map", s)
            expr(s.index, INT)
            expr(s.value, INT)
        elif isinstance(s, (A.Require, A.Assert)):
            expr(s.cond, BOOLT)
        elif isinstance(s, A.If):
            expr(s.cond, BOOLT)
            _check_body(s.then, rc, fn, dict(env))
            _check_body(s.orelse, rc, fn, dict(env))
        elif isinstance(s, A.Call):
            expr(s.target, INT)
            for a in s.args:
                expr(a)
        elif isinstance(s, A.Return):
            if s.value is not None:
                got = expr(s.value)
                if fn.returns is not None and got != _sort_of(fn.returns):
                    raise _err(TypeMismatch, f"return value does not match declared type in {where}", s)


def check_contract(rc: ResolvedContract) -> None:
    storage = dict(rc.storage)
    for inv in rc.invariants:
        scope = Scope(storage, property=True, allow_sender=False, where=f"{rc.name} invariant")
        if check_expr(inv, scope) != BOOLT:
            raise _err(TypeMismatch, "invariant must be boolean", inv)
    fns = list(rc.functions.values()) + ([rc.constructor] if rc.constructor else [])
    for fn in fns:
        env = dict(storage)
        for p in fn.params:
            if p.name in env:
                raise DuplicateName(f"parameter {p.name!r} of {rc.name}.{fn.name} shadows storage")
            env[p.name] = p.type
        for cond, allow_old in [(e, False) for e in fn.pre] + [(e, True) for e in fn.post]:
            scope = Scope(dict(env), property=True, allow_old=allow_old, where=f"{rc.name}.{fn.name} spec")
            if check_expr(cond, scope) != BOOLT:
                raise _err(TypeMismatch, "pre/postcondition must be boolean", cond)
        for m in fn.modifies or []:
            if m.slot not in storage:
                raise NameResolutionError(f"{rc.name}.{fn.name} modifies unknown storage {m.slot!r}")
            if m.index is not None:
                if not storage[m.slot].is_map:
                    raise TypeMismatch(f"modifies entry {m.slot!r} is not a map")
                from .hypothesis import check_hypothesis_grammar

                check_hypothesis_grammar(m.index, rc, fn, want=INT)
        _check_body(fn.body, rc, fn, dict(env))


def load_program(sources: Iterable[str]) -> ResolvedProgram:
    """Parse and resolve several MiniSol texts into one program."""
    from .parser import parse_source

    program = ResolvedProgram()
    for text in sources:
        program = program.merge(resolve_inheritance(parse_source(text)))
    return program
