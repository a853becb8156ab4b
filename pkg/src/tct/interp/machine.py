"""Deterministic MiniSol execution with trace recording."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from .. import words
from ..errors import ArityMismatch, HypothesisEvalError, NameResolutionError, UnknownFunction
from ..lang import ast as A
from ..lang.printer import print_expr
from ..lang.resolve import ResolvedContract
from ..terms import MapVal, default_domain
from .events import (
    AssertSite,
    Assign,
    Branch,
    CallEnter,
    CallExit,
    RequirePass,
    Revert,
    StatementId,
    StorageRead,
    StorageWrite,
)
from .world import Account, StateDelta, WorldState, fresh_storage

DEFAULT_STEP_LIMIT = 1_000_000
MAX_CALL_DEPTH = 64

COMMITTED, REVERTED, STEP_LIMIT = "Committed", "Reverted", "StepLimitExceeded"


@dataclass(frozen=True)
class Transaction:
    origin: int
    target: Optional[int]  # None for a deployment
    function: str
    args: tuple = ()
    tx_id: str = ""
    contract: Optional[str] = None  # contract name, deployments only

    @property
    def is_deployment(self) -> bool:
        return self.target is None


@dataclass
class ExecutionResult:
    status: str
    trace: list
    delta: StateDelta
    return_value: Any = None
    created_address: Optional[int] = None
    revert_reason: str = ""
    assert_failures: list[str] = field(default_factory=list)

    @property
    def committed(self) -> bool:
        return self.status == COMMITTED


# ---------------------------------------------------------------- evaluator


class ConcreteEnv:
    """Name resolution for :func:`eval_concrete` over plain dictionaries."""

    def __init__(self, values=None, maps=None, sender: Optional[int] = None, old: "ConcreteEnv" = None):
        self.values = dict(values or {})
        self.maps = dict(maps or {})
        self.sender_value = sender
        self.old = old

    def name(self, e: A.Name):
        try:
            return self.values[e.id]
        except KeyError:
            raise NameResolutionError(f"no value for {e.id!r}") from None

    def index(self, e: A.Index, idx: int) -> int:
        try:
            return self.maps[e.map].get(idx)
        except KeyError:
            raise NameResolutionError(f"no map named {e.map!r}") from None

    def sender(self) -> int:
        if self.sender_value is None:
            raise NameResolutionError("msg.sender is not bound")
        return self.sender_value

    def map_value(self, name: str) -> MapVal:
        return self.maps[name]

    def old_env(self) -> "ConcreteEnv":
        if self.old is None:
            raise NameResolutionError("old() has no pre-state here")
        return self.old

    def domain(self) -> list[int]:
        env = {k: v for k, v in self.values.items()}
        env.update({f"map:{k}": v for k, v in self.maps.items()})
        extra = [self.sender_value] if self.sender_value is not None else []
        return default_domain(env, extra)

    def branch(self, e: A.BinOp, taken: bool) -> None:
        pass

    def div_zero(self, e: A.BinOp):
        raise ZeroDivisionError("division by zero")


def eval_concrete(e: A.Expr, env: ConcreteEnv, wrapping: bool = True, bound: Optional[dict] = None):
    """Evaluate ``e``; + - * wrap modulo 2^256 when ``wrapping`` is set.

    Division and modulo are Euclidean. Division by zero is delegated to
    ``env.div_zero`` (a revert during execution, an error elsewhere).
    """
    bound = bound or {}

    def ev(x: A.Expr):
        return eval_concrete(x, env, wrapping, bound)

    if isinstance(e, A.IntLit):
        return e.value
    if isinstance(e, A.BoolLit):
        return e.value
    if isinstance(e, A.MsgSender):
        return env.sender()
    if isinstance(e, A.Name):
        if e.id in bound:
            return bound[e.id]
        return env.name(e)
    if isinstance(e, A.Index):
        return env.index(e, ev(e.index))
    if isinstance(e, A.Not):
        return not ev(e.operand)
    if isinstance(e, A.Sum):
        return env.map_value(e.map).sum
    if isinstance(e, A.Old):
        return eval_concrete(e.expr, env.old_env(), wrapping, bound)
    if isinstance(e, A.Forall):
        for x in env.domain():
            if not eval_concrete(e.body, env, wrapping, {**bound, e.var: x}):
                return False
        return True
    if not isinstance(e, A.BinOp):
        raise TypeError(f"not an expression: {e!r}")

    op = e.op
    if op == "&&":
        left = ev(e.left)
        env.branch(e, bool(left))
        return ev(e.right) if left else False
    if op == "||":
        left = ev(e.left)
        env.branch(e, not left)
        return True if left else ev(e.right)
    a, b = ev(e.left), ev(e.right)
    if op == "==>":
        return (not a) or bool(b)
    if op == "==":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    if op in ("/", "%"):
        if b == 0:
            return env.div_zero(e)
        r = words.ediv(a, b) if op == "/" else words.emod(a, b)
        return words.wrap(r) if wrapping else r
    if op == "^":
        r = a ** b
    elif op == "+":
        r = a + b
    elif op == "-":
        r = a - b
    elif op == "*":
        r = a * b
    else:
        raise TypeError(f"unknown operator {op!r}")
    return words.wrap(r) if wrapping else r


def eval_hypothesis(expr: A.Expr, rc: ResolvedContract, fn: A.FunctionDef, args, sender: int,
                    world: WorldState, address: Optional[int]) -> bool:
    """Evaluate a hypothesis with unbounded arithmetic against a concrete state.

    ``address`` is None for deployments, where storage is still all zero.
    """
    values = dict(zip(fn.param_names(), args))
    maps: dict[str, MapVal] = {}
    for slot, t in rc.storage.items():
        if address is None:
            raw = fresh_storage(rc)[slot]
        else:
            raw = world.read(address, slot)
        if t.is_map:
            maps[slot] = MapVal(raw)
        else:
            values.setdefault(slot, raw)
    env = ConcreteEnv(values, maps, sender)
    try:
        return bool(eval_concrete(expr, env, wrapping=False))
    except ZeroDivisionError as exc:
        raise HypothesisEvalError(f"hypothesis {print_expr(expr)}: {exc}") from None


# ----------------------------------------------------------------- machine


class _Revert(Exception):
    def __init__(self, sid: Optional[StatementId], reason: str):
        super().__init__(reason)
        self.sid = sid
        self.reason = reason


class _StepLimit(Exception):
    pass


class _Return(Exception):
    def __init__(self, value):
        super().__init__()
        self.value = value


@dataclass
class Frame:
    rc: ResolvedContract
    address: int
    fn: A.FunctionDef
    sender: int
    locals: dict
    params: frozenset
    depth: int
    old: Optional[dict] = None  # storage snapshot at entry (debug checks only)

    def sid(self, node: A.Node) -> StatementId:
        return StatementId(self.rc.code_hash, self.fn.name, node.nid)


class _FrameEnv(ConcreteEnv):
    def __init__(self, m: "Machine", frame: Frame, quiet: bool = False):
        super().__init__(sender=frame.sender)
        self.m = m
        self.frame = frame
        self.quiet = quiet

    def name(self, e: A.Name):
        if e.id in self.frame.locals:
            return self.frame.locals[e.id]
        if e.id in self.frame.rc.storage:
            if not self.quiet:
                self.m.emit(StorageRead(self.frame.sid(e), self.frame.address, e.id, None))
            return self.m.read(self.frame.address, e.id, None)
        raise NameResolutionError(f"unknown name {e.id!r}")

    def index(self, e: A.Index, idx: int) -> int:
        if not words.is_address(idx):
            if self.quiet:
                raise ZeroDivisionError("map index is not an address")
            raise _Revert(self.frame.sid(e), "map index is not an address")
        if not self.quiet:
            self.m.emit(StorageRead(self.frame.sid(e), self.frame.address, e.map, idx))
        return self.m.read(self.frame.address, e.map, idx)

    def map_value(self, name: str) -> MapVal:
        return self.m.map_value(self.frame.address, name)

    def old_env(self) -> ConcreteEnv:
        values = dict(self.frame.locals)
        maps = {}
        for slot, v in (self.frame.old or {}).items():
            if isinstance(v, dict):
                maps[slot] = MapVal(v)
            else:
                values[slot] = v
        return ConcreteEnv(values, maps, self.frame.sender)

    def domain(self) -> list[int]:
        keys: set[int] = set()
        for slot, t in self.frame.rc.storage.items():
            if t.is_map:
                keys.update(self.map_value(slot).keys())
        keys.add(self.frame.sender)
        keys.update(v for v in self.frame.locals.values() if isinstance(v, int) and not isinstance(v, bool))
        return default_domain({}, keys)

    def branch(self, e: A.BinOp, taken: bool) -> None:
        if not self.quiet:
            self.m.emit(Branch(self.frame.sid(e), taken))

    def div_zero(self, e: A.BinOp):
        if self.quiet:
            raise ZeroDivisionError("division by zero")
        raise _Revert(self.frame.sid(e), "division by zero")


class Machine:
    """One transaction's execution over a copy-on-write view of a world."""

    def __init__(self, world: WorldState, step_limit: int = DEFAULT_STEP_LIMIT, debug_asserts: bool = False):
        self.world = world
        self.step_limit = step_limit
        self.debug = debug_asserts
        self.trace: list = []
        self.writes: dict[tuple, tuple] = {}
        self.created: dict[int, Account] = {}
        self.failures: list[str] = []
        self.entered: list[int] = []

    # -- events and storage

    def emit(self, ev) -> None:
        self.trace.append(ev)
        if len(self.trace) > self.step_limit:
            raise _StepLimit()

    def _base(self, address: int, slot: str, index: Optional[int]):
        acct = self.created.get(address) or self.world.account(address)
        value = acct.storage[slot]
        if index is None:
            return value
        return value.get(index, 0)

    def read(self, address: int, slot: str, index: Optional[int]):
        key = (address, slot, index)
        if key in self.writes:
            return self.writes[key][1]
        return self._base(address, slot, index)

    def write(self, address: int, slot: str, index: Optional[int], value) -> None:
        key = (address, slot, index)
        before = self.writes[key][0] if key in self.writes else self._base(address, slot, index)
        self.writes[key] = (before, value)

    def map_value(self, address: int, slot: str) -> MapVal:
        acct = self.created.get(address) or self.world.account(address)
        entries = dict(acct.storage[slot])
        for (a, s, i), (_, after) in self.writes.items():
            if a == address and s == slot and i is not None:
                entries[i] = after
        return MapVal(entries)

    def storage_view(self, address: int, rc: ResolvedContract) -> dict:
        out = {}
        for slot, t in rc.storage.items():
            out[slot] = dict(self.map_value(address, slot).entries) if t.is_map else self.read(address, slot, None)
        return out

    def code_at(self, address: int) -> Optional[ResolvedContract]:
        acct = self.created.get(address) or self.world.accounts.get(address)
        if acct is None or acct.code_hash is None:
            return None
        return self.world.program.by_code(acct.code_hash)

    # -- statements

    def run_function(self, sid, caller: int, address: int, rc: ResolvedContract, fn: A.FunctionDef,
                     args: tuple, depth: int):
        self.emit(CallEnter(sid, caller, address, rc.code_hash, fn.name))
        if address not in self.entered:
            self.entered.append(address)
        frame = Frame(rc, address, fn, caller, dict(zip(fn.param_names(), args)),
                      frozenset(fn.param_names()), depth)
        if self.debug and fn.post:
            frame.old = self.storage_view(address, rc)
        ret = None
        try:
            self.exec_block(fn.body, frame)
        except _Return as r:
            ret = r.value
        if self.debug:
            env = _FrameEnv(self, frame, quiet=True)
            for post in fn.post:
                self._debug_check(post, env, f"postcondition of {rc.name}.{fn.name}", wrapping=False)
        self.emit(CallExit(sid))
        return ret

    def _debug_check(self, cond: A.Expr, env: ConcreteEnv, what: str, wrapping: bool) -> None:
        try:
            ok = eval_concrete(cond, env, wrapping=wrapping)
        except (ZeroDivisionError, NameResolutionError) as exc:
            self.failures.append(f"{what}: {print_expr(cond)} ({exc})")
            return
        if not ok:
            self.failures.append(f"{what}: {print_expr(cond)}")

    def exec_block(self, body: list, frame: Frame) -> None:
        for s in body:
            self.exec_stmt(s, frame)

    def exec_stmt(self, s: A.Stmt, frame: Frame) -> None:
        env = _FrameEnv(self, frame)
        sid = frame.sid(s)
        if isinstance(s, A.LocalDecl):
            frame.locals[s.name] = eval_concrete(s.value, env)
            self.emit(Assign(sid, s.name, print_expr(s.value)))
        elif isinstance(s, A.Assign):
            value = eval_concrete(s.value, env)
            if s.target in frame.locals:
                frame.locals[s.target] = value
                self.emit(Assign(sid, s.target, print_expr(s.value)))
            else:
                self.write(frame.address, s.target, None, value)
                self.emit(StorageWrite(sid, frame.address, s.target, None))
        elif isinstance(s, A.MapAssign):
            idx = eval_concrete(s.index, env)
            if not words.is_address(idx):
                raise _Revert(sid, "map index is not an address")
            value = eval_concrete(s.value, env)
            self.write(frame.address, s.map, idx, value)
            self.emit(StorageWrite(sid, frame.address, s.map, idx))
        elif isinstance(s, A.Require):
            if not eval_concrete(s.cond, env):
                raise _Revert(sid, "require failed")
            self.emit(RequirePass(sid))
        elif isinstance(s, A.Assert):
            self.emit(AssertSite(sid))
            if self.debug:
                self._debug_check(s.cond, _FrameEnv(self, frame, quiet=True),
                                  f"assert in {frame.rc.name}.{frame.fn.name}", wrapping=True)
        elif isinstance(s, A.If):
            cond = bool(eval_concrete(s.cond, env))
            self.emit(Branch(sid, cond))
            self.exec_block(s.then if cond else s.orelse, frame)
        elif isinstance(s, A.Call):
            target = eval_concrete(s.target, env)
            args = tuple(eval_concrete(a, env) for a in s.args)
            rc = self.code_at(target) if isinstance(target, int) else None
            if rc is None:
                raise _Revert(sid, "call to non-contract")
            fn = rc.functions.get(s.func)
            if fn is None:
                raise _Revert(sid, f"{rc.name} has no function {s.func}")
            if len(fn.params) != len(args):
                raise _Revert(sid, f"{rc.name}.{s.func} arity mismatch")
            if frame.depth + 1 >= MAX_CALL_DEPTH:
                raise _Revert(sid, "call depth exceeded")
            self.run_function(sid, frame.address, target, rc, fn, args, frame.depth + 1)
        elif isinstance(s, A.Return):
            raise _Return(None if s.value is None else eval_concrete(s.value, env))
        else:
            raise TypeError(f"not a statement: {s!r}")

    def check_invariants(self) -> None:
        for address in self.entered:
            rc = self.code_at(address)
            if rc is None or not rc.invariants:
                continue
            frame = Frame(rc, address, A.FunctionDef("<invariant>", [], []), 0, {}, frozenset(), 0)
            env = _FrameEnv(self, frame, quiet=True)
            for inv in rc.invariants:
                self._debug_check(inv, env, f"invariant of {rc.name}", wrapping=False)


# ------------------------------------------------------------ entry points


def _check_args(rc: ResolvedContract, fn: A.FunctionDef, args: tuple) -> None:
    if len(args) != len(fn.params):
        raise ArityMismatch(f"{rc.name}.{fn.name} expects {len(fn.params)} arguments, got {len(args)}")
    for p, a in zip(fn.params, args):
        kind = p.type.kind
        if kind == "bool":
            ok = isinstance(a, bool)
        else:
            ok = isinstance(a, int) and not isinstance(a, bool)
            ok = ok and (words.is_address(a) if kind == "address" else words.is_word(a))
        if not ok:
            raise ArityMismatch(f"argument {p.name} of {rc.name}.{fn.name} is not a valid {kind}: {a!r}")


def _finish(m: Machine, run) -> ExecutionResult:
    try:
        ret, created = run()
    except _Revert as r:
        trace = m.trace + [Revert(r.sid, r.reason)]
        return ExecutionResult(REVERTED, trace, StateDelta(), revert_reason=r.reason)
    except _StepLimit:
        return ExecutionResult(STEP_LIMIT, m.trace, StateDelta(), revert_reason="step limit exceeded")
    if m.debug:
        m.check_invariants()
    delta = StateDelta(dict(m.writes), list(m.created.values()))
    return ExecutionResult(COMMITTED, m.trace, delta, ret, created, assert_failures=list(m.failures))


def execute(world: WorldState, tx: Transaction, step_limit: int = DEFAULT_STEP_LIMIT,
            debug_asserts: bool = False) -> ExecutionResult:
    """Run ``tx`` against ``world`` without modifying it.

    Commit the result with ``world.apply(result.delta)``.
    """
    if tx.is_deployment:
        return deploy(world, world.program.contract(tx.contract), tx.args, tx.origin,
                      step_limit=step_limit, debug_asserts=debug_asserts)[1]
    rc = world.code(tx.target)
    if rc is None:
        raise UnknownFunction(f"{words.hex_address(tx.target)} has no code")
    fn = rc.functions.get(tx.function)
    if fn is None:
        raise UnknownFunction(f"{rc.name} has no function {tx.function!r}")
    _check_args(rc, fn, tx.args)
    m = Machine(world, step_limit, debug_asserts)
    return _finish(m, lambda: (m.run_function(None, tx.origin, tx.target, rc, fn, tuple(tx.args), 0), None))


def deploy(world: WorldState, rc: ResolvedContract, args: tuple, sender: int,
           step_limit: int = DEFAULT_STEP_LIMIT, debug_asserts: bool = False):
    """Run ``rc``'s constructor at a fresh address; returns (address, result)."""
    fn = rc.constructor or A.FunctionDef("constructor", [], [], is_constructor=True)
    _check_args(rc, fn, tuple(args))
    address = world.next_contract_address()
    m = Machine(world, step_limit, debug_asserts)

    def run():
        m.created[address] = Account(address, rc.code_hash, rc.name, fresh_storage(rc))
        m.run_function(None, sender, address, rc, fn, tuple(args), 0)
        return None, address

    result = _finish(m, run)
    return (address if result.committed else None), result
