"""MiniSol abstract syntax.

Nodes are plain dataclasses. Source positions and pre-order node indices
are excluded from equality so that structurally identical programs
compare equal regardless of layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional


@dataclass(frozen=True)
class Loc:
    line: int = 0
    col: int = 0


NOLOC = Loc()


@dataclass(frozen=True)
class TypeTag:
    kind: str  # "uint256" | "address" | "bool" | "map"

    @property
    def is_map(self) -> bool:
        return self.kind == "map"

    def __str__(self) -> str:
        return "map(address => uint256)" if self.is_map else self.kind


UINT256 = TypeTag("uint256")
ADDRESS = TypeTag("address")
BOOL = TypeTag("bool")
MAP = TypeTag("map")

SCALAR_TYPES = {"uint256": UINT256, "address": ADDRESS, "bool": BOOL}


@dataclass(eq=True)
class Node:
    loc: Loc = field(default=NOLOC, compare=False, repr=False, kw_only=True)
    # pre-order index within the enclosing function body; -1 outside bodies
    nid: int = field(default=-1, compare=False, repr=False, kw_only=True)

    def children(self) -> Iterator["Node"]:
        return iter(())


# ---------------------------------------------------------------- expressions


class Expr(Node):
    pass


@dataclass(eq=True)
class IntLit(Expr):
    value: int
    hex: bool = field(default=False, compare=False)


@dataclass(eq=True)
class BoolLit(Expr):
    value: bool


@dataclass(eq=True)
class Name(Expr):
    id: str


@dataclass(eq=True)
class MsgSender(Expr):
    pass


@dataclass(eq=True)
class Index(Expr):
    map: str
    index: Expr

    def children(self):
        yield self.index


BINOPS = ("+", "-", "*", "/", "%", "^", "==", "!=", "<", "<=", ">", ">=", "&&", "||", "==>")
ARITH_OPS = ("+", "-", "*", "/", "%", "^")
COMPARE_OPS = ("==", "!=", "<", "<=", ">", ">=")
BOOL_OPS = ("&&", "||", "==>")


@dataclass(eq=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def children(self):
        yield self.left
        yield self.right


@dataclass(eq=True)
class Not(Expr):
    operand: Expr

    def children(self):
        yield self.operand


@dataclass(eq=True)
class Forall(Expr):
    """``forall v: address :: body`` -- property positions only."""

    var: str
    body: Expr

    def children(self):
        yield self.body


@dataclass(eq=True)
class Sum(Expr):
    map: str


@dataclass(eq=True)
class Old(Expr):
    expr: Expr

    def children(self):
        yield self.expr


# ----------------------------------------------------------------- statements


class Stmt(Node):
    pass


@dataclass(eq=True)
class LocalDecl(Stmt):
    type: TypeTag
    name: str
    value: Expr

    def children(self):
        yield self.value


@dataclass(eq=True)
class Assign(Stmt):
    """Assignment to a local or a scalar storage slot."""

    target: str
    value: Expr

    def children(self):
        yield self.value


@dataclass(eq=True)
class MapAssign(Stmt):
    map: str
    index: Expr
    value: Expr

    def children(self):
        yield self.index
        yield self.value


@dataclass(eq=True)
class Require(Stmt):
    cond: Expr

    def children(self):
        yield self.cond


@dataclass(eq=True)
class Assert(Stmt):
    cond: Expr

    def children(self):
        yield self.cond


@dataclass(eq=True)
class If(Stmt):
    cond: Expr
    then: list[Stmt]
    orelse: list[Stmt]

    def children(self):
        yield self.cond
        yield from self.then
        yield from self.orelse


@dataclass(eq=True)
class Call(Stmt):
    target: Expr
    func: str
    args: list[Expr]

    def children(self):
        yield self.target
        yield from self.args


@dataclass(eq=True)
class Return(Stmt):
    value: Optional[Expr] = None

    def children(self):
        if self.value is not None:
            yield self.value


# -------------------------------------------------------------- declarations


@dataclass(eq=True)
class Param:
    type: TypeTag
    name: str


@dataclass(eq=True)
class ModifiesEntry:
    slot: str
    index: Optional[Expr] = None


@dataclass(eq=True)
class StorageDecl:
    type: TypeTag
    name: str
    loc: Loc = field(default=NOLOC, compare=False, repr=False)


@dataclass(eq=True)
class FunctionDef:
    name: str
    params: list[Param]
    body: list[Stmt]
    returns: Optional[TypeTag] = None
    pre: list[Expr] = field(default_factory=list)
    post: list[Expr] = field(default_factory=list)
    # None means "no modifies annotation"; [] means "modifies nothing"
    modifies: Optional[list[ModifiesEntry]] = None
    is_constructor: bool = False
    loc: Loc = field(default=NOLOC, compare=False, repr=False)

    def param_names(self) -> list[str]:
        return [p.name for p in self.params]


@dataclass(eq=True)
class ContractDef:
    name: str
    bases: list[str]
    storage: list[StorageDecl]
    functions: list[FunctionDef]
    constructor: Optional[FunctionDef] = None
    invariants: list[Expr] = field(default_factory=list)
    loc: Loc = field(default=NOLOC, compare=False, repr=False)

    def storage_types(self) -> dict[str, TypeTag]:
        return {d.name: d.type for d in self.storage}

    def function(self, name: str) -> Optional[FunctionDef]:
        for f in self.functions:
            if f.name == name:
                return f
        return None


@dataclass(eq=True)
class SourceUnit:
    contracts: list[ContractDef]
    source_hash: str = field(default="", compare=False)

    def contract(self, name: str) -> Optional[ContractDef]:
        for c in self.contracts:
            if c.name == name:
                return c
        return None


def walk(node: Node) -> Iterator[Node]:
    """Pre-order traversal."""
    yield node
    for child in node.children():
        yield from walk(child)


def walk_body(body: list[Stmt]) -> Iterator[Node]:
    for stmt in body:
        yield from walk(stmt)


def number_body(body: list[Stmt]) -> int:
    """Assign pre-order indices to every node of a function body."""
    count = 0
    for node in walk_body(body):
        node.nid = count
        count += 1
    return count
