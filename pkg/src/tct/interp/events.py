"""Trace events recorded by the interpreter."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from ..words import hex_address


@dataclass(frozen=True, order=True)
class StatementId:
    code_hash: str
    function: str
    index: int

    def __str__(self) -> str:
        return f"{self.code_hash[:16]}:{self.function}:{self.index}"


def _sid(s: Optional[StatementId]) -> str:
    return "-" if s is None else str(s)


def _ix(i: Optional[int]) -> str:
    return "-" if i is None else hex_address(i) if 0 <= i < 2**160 else str(i)


@dataclass(frozen=True)
class Assign:
    sid: StatementId
    local: str
    source: str

    def dump(self) -> str:
        return f"Assign {_sid(self.sid)} {self.local} := {self.source}"


@dataclass(frozen=True)
class StorageWrite:
    sid: StatementId
    account: int
    slot: str
    index: Optional[int] = None

    def dump(self) -> str:
        return f"StorageWrite {_sid(self.sid)} {hex_address(self.account)} {self.slot} {_ix(self.index)}"


@dataclass(frozen=True)
class StorageRead:
    sid: StatementId
    account: int
    slot: str
    index: Optional[int] = None

    def dump(self) -> str:
        return f"StorageRead {_sid(self.sid)} {hex_address(self.account)} {self.slot} {_ix(self.index)}"


@dataclass(frozen=True)
class Branch:
    sid: StatementId
    taken: bool

    def dump(self) -> str:
        return f"Branch {_sid(self.sid)} {int(self.taken)}"


@dataclass(frozen=True)
class RequirePass:
    sid: StatementId

    def dump(self) -> str:
        return f"RequirePass {_sid(self.sid)}"


@dataclass(frozen=True)
class AssertSite:
    sid: StatementId

    def dump(self) -> str:
        return f"AssertSite {_sid(self.sid)}"


@dataclass(frozen=True)
class CallEnter:
    sid: Optional[StatementId]  # None for the transaction's entry frame
    caller: int
    callee: int
    code_hash: str
    function: str

    def dump(self) -> str:
        return (f"CallEnter {_sid(self.sid)} {hex_address(self.caller)} {hex_address(self.callee)} "
                f"{self.code_hash[:16]} {self.function}")


@dataclass(frozen=True)
class CallExit:
    sid: Optional[StatementId]

    def dump(self) -> str:
        return f"CallExit {_sid(self.sid)}"


@dataclass(frozen=True)
class Revert:
    sid: Optional[StatementId]
    reason: str = ""

    def dump(self) -> str:
        return f"Revert {_sid(self.sid)} {self.reason}"


TraceEvent = Union[Assign, StorageWrite, StorageRead, Branch, RequirePass, AssertSite, CallEnter, CallExit, Revert]


def dump_trace(trace: list) -> str:
    return "".join(ev.dump() + "\n" for ev in trace)


def trace_complete(trace: list) -> bool:
    """A trace is complete when it ends in Revert or closes its entry frame."""
    if not trace:
        return False
    if isinstance(trace[-1], Revert):
        return True
    depth = 0
    for ev in trace:
        if isinstance(ev, CallEnter):
            depth += 1
        elif isinstance(ev, CallExit):
            depth -= 1
            if depth < 0:
                return False
    return depth == 0 and isinstance(trace[-1], CallExit)
