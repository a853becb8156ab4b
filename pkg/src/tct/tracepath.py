"""Path hashing and straight-line (SSA) extraction of concrete traces."""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import IncompleteTrace, RevertedTrace, SortMismatch, TraceMismatch, UnboundSymbol
from .interp import events as E
from .interp.events import trace_complete
from .lang import ast as A
from .lang.printer import print_expr
from .lang.resolve import ResolvedContract, ResolvedProgram
from .symbolic import PropScope, fold_constant, prop_term
from .terms import (
    BOOL,
    FALSE,
    INT,
    MAP,
    TRUE,
    App,
    Lit,
    Sym,
    Term,
    and_,
    app,
    eq,
    free_syms,
    implies,
    not_,
    or_,
    select,
    show,
    sort_of,
    store,
)

# ---------------------------------------------------------------- path hash

PATH_DOMAIN = b"TCT-PATH-v1\x00"
TAGS = {
    E.Assign: 0x01,
    E.StorageWrite: 0x02,
    E.StorageRead: 0x03,
    E.Branch: 0x04,
    E.RequirePass: 0x05,
    E.AssertSite: 0x06,
    E.CallEnter: 0x07,
    E.CallExit: 0x08,
    E.Revert: 0x09,
}


def _name_bytes(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack(">H", len(raw)) + raw


def _sid_bytes(sid: Optional[E.StatementId]) -> bytes:
    if sid is None:
        return b"\x00"
    return b"\x01" + bytes.fromhex(sid.code_hash) + _name_bytes(sid.function) + struct.pack(">I", sid.index)


def encode_path(trace: list) -> bytes:
    """Canonical byte encoding of the control-flow projection of ``trace``.

    Data values (storage contents, argument values, concrete addresses) are
    never encoded. Accounts entered by calls are encoded by alias number:
    the order in which they first appear in the trace, the sender being 0.
    """
    if not trace_complete(trace):
        raise IncompleteTrace("trace does not end in a revert or a completed entry call")
    out = bytearray(PATH_DOMAIN)
    aliases: dict[int, int] = {}
    for ev in trace:
        out.append(TAGS[type(ev)])
        out += _sid_bytes(ev.sid)
        if isinstance(ev, E.Branch):
            out.append(1 if ev.taken else 0)
        elif isinstance(ev, E.CallEnter):
            if not aliases:
                aliases[ev.caller] = 0
            alias = aliases.setdefault(ev.callee, len(aliases))
            out += bytes.fromhex(ev.code_hash) + struct.pack(">H", alias) + _name_bytes(ev.function)
    return bytes(out)


def path_hash(trace: list) -> str:
    """0x-prefixed SHA-256 of :func:`encode_path`."""
    return "0x" + hashlib.sha256(encode_path(trace)).hexdigest()


# ------------------------------------------------------------- SSA program


@dataclass(frozen=True)
class DefineSymbol:
    name: str
    sort: str
    kind: str  # param | state | alias
    type: str = "uint256"  # MiniSol type, decides the range assumption

    def dump(self) -> str:
        return f"var {self.name}: {self.type};  // {self.kind}"


@dataclass(frozen=True)
class AssumeExpr:
    term: Term
    origin: str  # require | branch | short-circuit | call-target | nonzero-divisor | index-range
    where: str = ""

    def dump(self) -> str:
        return f"assume ({show(self.term)});  // {self.origin} {self.where}".rstrip()


@dataclass(frozen=True)
class WriteInfo:
    """Who wrote a storage slot and what its modifies clause allows."""

    contract: str
    function: str
    slot: str
    index: Optional[Term]
    # None: no modifies annotation. Otherwise (slot, pattern or None) pairs
    # translated in the writer's scope at the time of the write.
    modifies: Optional[tuple] = None


@dataclass(frozen=True)
class AssignDef:
    name: str
    sort: str
    term: Term
    where: str = ""
    writer: Optional[WriteInfo] = None

    def dump(self) -> str:
        return f"{self.name} := {show(self.term)};"


@dataclass(frozen=True)
class MapStoreDef:
    name: str
    prior: str
    index: Term
    value: Term
    where: str = ""
    writer: Optional[WriteInfo] = None

    @property
    def term(self) -> Term:
        return store(Sym(self.prior, MAP), self.index, self.value)

    def dump(self) -> str:
        return f"{self.name} := {self.prior}[{show(self.index)} := {show(self.value)}];"


@dataclass(frozen=True)
class AssertGoal:
    term: Term
    origin: str  # inline-assert | invariant | postcondition | modifies-frame
    label: str = ""

    def dump(self) -> str:
        return f"assert ({show(self.term)});  // {self.origin} {self.label}".rstrip()


SSAStmt = Union[DefineSymbol, AssumeExpr, AssignDef, MapStoreDef, AssertGoal]


@dataclass
class AccountInfo:
    alias: int
    symbol: str
    prefix: str
    contract: Optional[str]
    code_hash: Optional[str]
    address: int
    initial: dict[str, str] = field(default_factory=dict)
    current: dict[str, str] = field(default_factory=dict)


@dataclass
class SSAProgram:
    stmts: list = field(default_factory=list)
    symbols: dict[str, str] = field(default_factory=dict)  # name -> sort
    accounts: list[AccountInfo] = field(default_factory=list)
    entry_contract: str = ""
    entry_function: str = ""
    entry_code_hash: str = ""
    entry_params: dict[str, str] = field(default_factory=dict)
    is_deployment: bool = False
    entry_alias: int = 1

    @property
    def entry(self) -> AccountInfo:
        return self.accounts[self.entry_alias]

    def dump(self) -> str:
        lines = [f"// {self.entry_contract}::{self.entry_function}"]
        lines += [s.dump() for s in self.stmts]
        return "\n".join(lines) + "\n"


# ----------------------------------------------------------- well-formedness


def check_ssa(ssa: SSAProgram) -> None:
    """Single assignment, definition before use, and sort correctness."""
    defined: dict[str, str] = {}

    def use(t: Term, where: str) -> None:
        for s in free_syms(t):
            if s.name not in defined:
                raise UnboundSymbol(f"{s.name} used before definition in {where}")
            if defined[s.name] != s.sort:
                raise SortMismatch(f"{s.name} used as {s.sort}, defined as {defined[s.name]}")
        sort_of(t)

    def define(name: str, sort: str) -> None:
        if name in defined:
            raise SortMismatch(f"{name} defined twice")
        defined[name] = sort

    for st in ssa.stmts:
        if isinstance(st, DefineSymbol):
            define(st.name, st.sort)
        elif isinstance(st, AssumeExpr):
            use(st.term, st.dump())
            if sort_of(st.term) != BOOL:
                raise SortMismatch(f"assumption is not boolean: {st.dump()}")
        elif isinstance(st, AssertGoal):
            use(st.term, st.dump())
            if sort_of(st.term) != BOOL:
                raise SortMismatch(f"goal is not boolean: {st.dump()}")
        elif isinstance(st, AssignDef):
            use(st.term, st.dump())
            if sort_of(st.term) != st.sort:
                raise SortMismatch(f"definition sort mismatch: {st.dump()}")
            define(st.name, st.sort)
        elif isinstance(st, MapStoreDef):
            use(st.term, st.dump())
            define(st.name, MAP)
    for name, sort in ssa.symbols.items():
        if defined.get(name) != sort:
            raise SortMismatch(f"symbol table disagrees on {name}")


# -------------------------------------------------------------- extraction


class _SReturn(Exception):
    pass


def _sort(t: A.TypeTag) -> str:
    return MAP if t.is_map else (BOOL if t.kind == "bool" else INT)


@dataclass
class _Frame:
    rc: ResolvedContract
    fn: A.FunctionDef
    acct: AccountInfo
    sender: Term
    locals: dict[str, Term]
    types: dict[str, str]  # local/param -> MiniSol type
    old: dict[str, str]  # storage versions at frame entry


class _Extractor:
    def __init__(self, trace: list, program: ResolvedProgram):
        self.trace = trace
        self.program = program
        self.pos = 0
        self.ssa = SSAProgram()
        self.counters: dict[str, int] = {}
        self.by_address: dict[int, AccountInfo] = {}
        self.address_syms: set[str] = set()

    # -- bookkeeping

    def fresh(self, base: str, start: int = 0) -> str:
        k = self.counters.get(base, start)
        name = f"{base}_{k}"
        while name in self.ssa.symbols:
            k += 1
            name = f"{base}_{k}"
        self.counters[base] = k + 1
        return name

    def add(self, st) -> None:
        self.ssa.stmts.append(st)
        if isinstance(st, DefineSymbol):
            self.ssa.symbols[st.name] = st.sort
            if st.type == "address":
                self.address_syms.add(st.name)
        elif isinstance(st, AssignDef):
            self.ssa.symbols[st.name] = st.sort
        elif isinstance(st, MapStoreDef):
            self.ssa.symbols[st.name] = MAP

    def expect(self, cls, sid) -> object:
        if self.pos >= len(self.trace):
            raise IncompleteTrace(f"trace ended while expecting {cls.__name__}")
        ev = self.trace[self.pos]
        if not isinstance(ev, cls) or ev.sid != sid:
            raise TraceMismatch(f"event {self.pos}: expected {cls.__name__} at {sid}, found {ev.dump()}")
        self.pos += 1
        return ev

    def account_for(self, address: int, code_hash: Optional[str]) -> AccountInfo:
        info = self.by_address.get(address)
        if info is not None:
            return info
        alias = len(self.ssa.accounts)
        symbol = {0: "msg.sender", 1: "this"}.get(alias, f"acct{alias}")
        prefix = {0: "sender.", 1: ""}.get(alias, f"acct{alias}.")
        rc = self.program.by_code(code_hash) if code_hash else None
        info = AccountInfo(alias, symbol, prefix, rc.name if rc else None, code_hash, address)
        self.ssa.accounts.append(info)
        self.by_address[address] = info
        self.add(DefineSymbol(symbol, INT, "alias", "address"))
        for other in self.ssa.accounts[:-1]:
            self.add(AssumeExpr(not_(eq(Sym(other.symbol), Sym(symbol))), "distinct-accounts"))
        return info

    def touch(self, info: AccountInfo, code_hash: str) -> None:
        """Give an entered account symbols for every storage slot."""
        if info.initial:
            return
        rc = self.program.by_code(code_hash)
        info.contract, info.code_hash = rc.name, code_hash
        for slot, t in rc.storage.items():
            name = self.fresh(info.prefix + slot)
            self.add(DefineSymbol(name, _sort(t), "state", str(t) if not t.is_map else "map"))
            info.initial[slot] = info.current[slot] = name

    def where(self, fr: _Frame, node: A.Node) -> str:
        return f"@{fr.rc.name}.{fr.fn.name}:{node.nid}"

    def is_address_term(self, t: Term) -> bool:
        return (isinstance(t, Sym) and t.name in self.address_syms) or (
            isinstance(t, Lit) and isinstance(t.value, int) and 0 <= t.value < 2**160)

    # -- expressions

    def cur(self, fr: _Frame, slot: str) -> Sym:
        t = fr.rc.storage[slot]
        return Sym(fr.acct.current[slot], _sort(t))

    def expr(self, e: A.Expr, fr: _Frame, quiet: bool = False) -> Term:
        sid = E.StatementId(fr.rc.code_hash, fr.fn.name, e.nid)

        def tr(x: A.Expr) -> Term:
            return self.expr(x, fr, quiet)

        if isinstance(e, A.IntLit):
            return Lit(e.value)
        if isinstance(e, A.BoolLit):
            return TRUE if e.value else FALSE
        if isinstance(e, A.MsgSender):
            return fr.sender
        if isinstance(e, A.Name):
            if e.id in fr.locals:
                return fr.locals[e.id]
            if not quiet:
                self.expect(E.StorageRead, sid)
            return self.cur(fr, e.id)
        if isinstance(e, A.Index):
            idx = tr(e.index)
            if not quiet:
                self.expect(E.StorageRead, sid)
                if not self.is_address_term(idx):
                    self.add(AssumeExpr(app("isAddr", idx), "index-range", self.where(fr, e)))
            return select(self.cur(fr, e.map), idx)
        if isinstance(e, A.Not):
            return not_(tr(e.operand))
        if not isinstance(e, A.BinOp):
            raise TraceMismatch(f"expression not allowed in code: {print_expr(e)}")
        if e.op in ("&&", "||"):
            left = tr(e.left)
            if quiet:
                right = tr(e.right)
                return and_(left, right) if e.op == "&&" else or_(left, right)
            ev = self.expect(E.Branch, sid)
            # the right operand runs iff (&&: left true) / (||: left false)
            known = left if e.op == "&&" else not_(left)
            if ev.taken:
                self.add(AssumeExpr(known, "short-circuit", self.where(fr, e)))
                return tr(e.right)
            self.add(AssumeExpr(not_(known), "short-circuit", self.where(fr, e)))
            return FALSE if e.op == "&&" else TRUE
        if e.op == "^":
            return Lit(fold_constant(e) % 2**256)
        a, b = tr(e.left), tr(e.right)
        if e.op == "==>":
            return implies(a, b)
        if e.op == "==":
            return eq(a, b)
        if e.op == "!=":
            return not_(eq(a, b))
        if e.op in ("<", "<=", ">", ">="):
            return App(e.op, (a, b))
        if e.op in ("/", "%"):
            if not quiet:
                self.add(AssumeExpr(not_(eq(b, Lit(0))), "nonzero-divisor", self.where(fr, e)))
            return App("div" if e.op == "/" else "mod", (a, b))
        return App({"+": "add", "-": "sub", "*": "mul"}[e.op], (a, b))

    # -- statements

    def prop_scope(self, fr: _Frame, old: bool = False) -> PropScope:
        versions = fr.old if old else fr.acct.current
        scalars: dict[str, Term] = {}
        maps: dict[str, Term] = {}
        for slot, t in fr.rc.storage.items():
            if t.is_map:
                maps[slot] = Sym(versions[slot], MAP)
            else:
                scalars[slot] = Sym(versions[slot], _sort(t))
        for name in fr.fn.param_names():
            scalars[name] = fr.locals[name]
        scope = PropScope(scalars, maps, fr.sender)
        if not old:
            scope.old = self.prop_scope(fr, old=True)
        return scope

    def write_info(self, fr: _Frame, slot: str, index: Optional[Term]) -> WriteInfo:
        mods = None
        if fr.fn.modifies is not None:
            scope = self.prop_scope(fr)
            mods = tuple(
                (m.slot, None if m.index is None else prop_term(m.index, scope))
                for m in fr.fn.modifies
            )
        return WriteInfo(fr.rc.name, fr.fn.name, slot, index, mods)

    def block(self, body: list, fr: _Frame) -> None:
        for s in body:
            self.stmt(s, fr)

    def stmt(self, s: A.Stmt, fr: _Frame) -> None:
        sid = E.StatementId(fr.rc.code_hash, fr.fn.name, s.nid)
        where = self.where(fr, s)
        if isinstance(s, A.LocalDecl):
            t = self.expr(s.value, fr)
            self.expect(E.Assign, sid)
            name = self.fresh(s.name, 1)
            self.add(AssignDef(name, _sort(s.type), t, where))
            fr.locals[s.name] = Sym(name, _sort(s.type))
            fr.types[s.name] = str(s.type)
            if s.type.kind == "address":
                self.address_syms.add(name)
        elif isinstance(s, A.Assign):
            t = self.expr(s.value, fr)
            if s.target in fr.locals:
                self.expect(E.Assign, sid)
                name = self.fresh(s.target, 1)
                sort = fr.locals[s.target].sort
                self.add(AssignDef(name, sort, t, where))
                fr.locals[s.target] = Sym(name, sort)
            else:
                self.expect(E.StorageWrite, sid)
                ty = fr.rc.storage[s.target]
                name = self.fresh(fr.acct.prefix + s.target)
                self.add(AssignDef(name, _sort(ty), t, where, self.write_info(fr, s.target, None)))
                fr.acct.current[s.target] = name
        elif isinstance(s, A.MapAssign):
            idx = self.expr(s.index, fr)
            if not self.is_address_term(idx):
                self.add(AssumeExpr(app("isAddr", idx), "index-range", where))
            value = self.expr(s.value, fr)
            self.expect(E.StorageWrite, sid)
            prior = fr.acct.current[s.map]
            name = self.fresh(fr.acct.prefix + s.map)
            self.add(MapStoreDef(name, prior, idx, value, where, self.write_info(fr, s.map, idx)))
            fr.acct.current[s.map] = name
        elif isinstance(s, A.Require):
            c = self.expr(s.cond, fr)
            self.expect(E.RequirePass, sid)
            self.add(AssumeExpr(c, "require", where))
        elif isinstance(s, A.Assert):
            self.expect(E.AssertSite, sid)
            self.add(AssertGoal(self.expr(s.cond, fr, quiet=True), "inline-assert", where))
        elif isinstance(s, A.If):
            c = self.expr(s.cond, fr)
            ev = self.expect(E.Branch, sid)
            self.add(AssumeExpr(c if ev.taken else not_(c), "branch", where))
            self.block(s.then if ev.taken else s.orelse, fr)
        elif isinstance(s, A.Call):
            target = self.expr(s.target, fr)
            args = [self.expr(a, fr) for a in s.args]
            ev = self.expect(E.CallEnter, sid)
            if ev.function != s.func:
                raise TraceMismatch(f"call at {sid} enters {ev.function}, code calls {s.func}")
            self.call(ev, fr, target, args, where)
            self.expect(E.CallExit, sid)
        elif isinstance(s, A.Return):
            if s.value is not None:
                self.expr(s.value, fr)
            raise _SReturn()
        else:
            raise TypeError(f"not a statement: {s!r}")

    def call(self, ev: E.CallEnter, caller: Optional[_Frame], target: Optional[Term], args: list, where: str):
        info = self.account_for(ev.callee, ev.code_hash)
        self.touch(info, ev.code_hash)
        if target is not None and target != Sym(info.symbol):
            self.add(AssumeExpr(eq(target, Sym(info.symbol)), "call-target", where))
        rc = self.program.by_code(ev.code_hash)
        fn = rc.function(ev.function)
        if fn is None:
            fn = A.FunctionDef(ev.function, [], [], is_constructor=True)
        locals_: dict[str, Term] = {}
        types: dict[str, str] = {}
        for p, a in zip(fn.params, args):
            sort = _sort(p.type)
            if caller is None:
                name = p.name
                self.add(DefineSymbol(name, sort, "param", str(p.type)))
            else:
                name = self.fresh(p.name, 1)
                self.add(AssignDef(name, sort, a, where))
                if p.type.kind == "address":
                    self.address_syms.add(name)
            locals_[p.name] = Sym(name, sort)
            types[p.name] = str(p.type)
        sender = Sym(caller.acct.symbol) if caller is not None else Sym(self.ssa.accounts[0].symbol)
        fr = _Frame(rc, fn, info, sender, locals_, types, dict(info.current))
        try:
            self.block(fn.body, fr)
        except _SReturn:
            pass
        if caller is not None:
            scope = self.prop_scope(fr)
            for post in fn.post:
                self.add(AssertGoal(prop_term(post, scope), "postcondition",
                                    f"{rc.name}.{fn.name}: {print_expr(post)}"))
        return fr

    def run(self) -> SSAProgram:
        if not self.trace:
            raise IncompleteTrace("empty trace")
        if isinstance(self.trace[-1], E.Revert):
            raise RevertedTrace("reverted traces have no straight-line form")
        if not trace_complete(self.trace):
            raise IncompleteTrace("trace does not close its entry call")
        first = self.trace[0]
        if not isinstance(first, E.CallEnter) or first.sid is not None:
            raise TraceMismatch("trace must start with the entry call")
        self.pos = 1
        self.account_for(first.caller, None)
        rc = self.program.by_code(first.code_hash)
        fn = rc.function(first.function)
        params = list(fn.params) if fn is not None else []
        ssa = self.ssa
        ssa.entry_contract, ssa.entry_function, ssa.entry_code_hash = rc.name, first.function, rc.code_hash
        ssa.is_deployment = first.function == "constructor"
        ssa.entry_params = {p.name: p.name for p in params}
        self.call(first, None, None, [None] * len(params), "@entry")
        ssa.entry_alias = self.by_address[first.callee].alias
        self.expect(E.CallExit, None)
        if self.pos != len(self.trace):
            raise TraceMismatch("events remain after the entry call returned")
        check_ssa(ssa)
        return ssa


def extract_straightline(trace: list, program: ResolvedProgram) -> SSAProgram:
    """Symbolic straight-line rendering of a completed trace."""
    return _Extractor(trace, program).run()

