"""Theorem repository: proven (f, phi, h) triples and their applicability."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field
from typing import Optional

from .errors import HypothesisEvalError, IncompleteEvidence, PersistenceFailure
from .interp.machine import Transaction, eval_hypothesis
from .interp.world import WorldState
from .lang import ast as A
from .lang.parser import parse_expr
from .lang.printer import print_expr

SCHEMA_VERSION = 1


def canonical_hypothesis(text: str) -> str:
    return print_expr(parse_expr(text))


@dataclass(frozen=True)
class Evidence:
    """One goal's verdict. ``checked_at`` is a logical clock, not wall time."""

    query: str
    origin: str
    label: str
    verdict: str
    solver: str
    checked_at: int = 0


@dataclass
class Theorem:
    code_hash: str
    function: str
    hypothesis: str
    path_hash: str
    contract: str = ""
    evidence: list[Evidence] = field(default_factory=list)

    def __post_init__(self):
        self.hypothesis = canonical_hypothesis(self.hypothesis)

    @property
    def id(self) -> str:
        key = json.dumps([self.code_hash, self.function, self.hypothesis, self.path_hash])
        return "0x" + hashlib.sha256(key.encode()).hexdigest()

    @property
    def f(self) -> tuple[str, str]:
        return (self.code_hash, self.function)

    @property
    def hypothesis_expr(self) -> A.Expr:
        return parse_expr(self.hypothesis)

    def complete(self) -> bool:
        return all(e.verdict == "Proven" for e in self.evidence)

    def tuple_text(self) -> str:
        return f"({self.contract or self.code_hash[:16]}::{self.function}, {self.hypothesis}, {self.path_hash})"

    def to_obj(self) -> dict:
        obj = asdict(self)
        obj["id"] = self.id
        return obj

    @classmethod
    def from_obj(cls, obj: dict) -> "Theorem":
        th = cls(obj["code_hash"], obj["function"], obj["hypothesis"], obj["path_hash"],
                 obj.get("contract", ""), [Evidence(**e) for e in obj.get("evidence", [])])
        if "id" in obj and obj["id"] != th.id:
            raise PersistenceFailure(f"theorem id mismatch for {obj['id']}")
        return th

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Theorem":
        return cls.from_obj(json.loads(text))


def confirm(theorem: Theorem, path_hash: str) -> bool:
    return theorem.path_hash == path_hash


class TheoremRepo:
    def __init__(self, path: Optional[str] = None):
        self.path = path
        self.theorems: dict[str, Theorem] = {}  # insertion order
        self.index: dict[tuple[str, str], list[str]] = {}

    def __len__(self) -> int:
        return len(self.theorems)

    def __iter__(self):
        return iter(self.theorems.values())

    def __contains__(self, theorem_id: str) -> bool:
        return theorem_id in self.theorems

    def add(self, theorem: Theorem) -> str:
        bad = [e for e in theorem.evidence if e.verdict != "Proven"]
        if bad:
            raise IncompleteEvidence(f"goal {bad[0].query} is {bad[0].verdict}, not Proven")
        tid = theorem.id
        if tid in self.theorems:
            return tid
        self.theorems[tid] = theorem
        self.index.setdefault(theorem.f, []).append(tid)
        if self.path:
            self.save(self.path)
        return tid

    def lookup(self, code_hash: str, function: str) -> list[Theorem]:
        return [self.theorems[t] for t in self.index.get((code_hash, function), [])]

    def find_applicable(self, tx: Transaction, world: WorldState) -> list[Theorem]:
        """Theorems for tx's function whose hypothesis holds now, in insertion order."""
        if tx.is_deployment:
            rc = world.program.contract(tx.contract)
            address = None
        else:
            rc = world.code(tx.target)
            address = tx.target
        if rc is None:
            return []
        fn = rc.function(tx.function)
        if fn is None and tx.is_deployment:
            fn = A.FunctionDef("constructor", [], [], is_constructor=True)
        if fn is None:
            return []
        out = []
        for th in self.lookup(rc.code_hash, tx.function):
            try:
                if eval_hypothesis(th.hypothesis_expr, rc, fn, tx.args, tx.origin, world, address):
                    out.append(th)
            except HypothesisEvalError:
                continue
        return out

    # -- persistence

    def to_obj(self) -> dict:
        return {"schema": SCHEMA_VERSION, "theorems": [t.to_obj() for t in self.theorems.values()]}

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), sort_keys=True, indent=1) + "\n"

    def save(self, path: str) -> None:
        """Atomic write: temp file in the same directory, then rename."""
        directory = os.path.dirname(os.path.abspath(path))
        try:
            fd, tmp = tempfile.mkstemp(dir=directory, prefix=".repo-", suffix=".tmp")
            with os.fdopen(fd, "w") as fh:
                fh.write(self.to_json())
            os.replace(tmp, path)
        except OSError as exc:
            raise PersistenceFailure(f"cannot write {path}: {exc}") from None

    @classmethod
    def from_json(cls, text: str, path: Optional[str] = None) -> "TheoremRepo":
        obj = json.loads(text)
        if obj.get("schema") != SCHEMA_VERSION:
            raise PersistenceFailure(f"unsupported repo schema {obj.get('schema')!r}")
        repo = cls(None)
        for rec in obj["theorems"]:
            repo.add(Theorem.from_obj(rec))
        repo.path = path
        return repo

    @classmethod
    def load(cls, path: str) -> "TheoremRepo":
        if not os.path.exists(path):
            return cls(path)
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise PersistenceFailure(f"cannot read {path}: {exc}") from None
        try:
            return cls.from_json(text, path)
        except (ValueError, KeyError) as exc:
            raise PersistenceFailure(f"corrupt repo file {path}: {exc}") from None

    def __eq__(self, other) -> bool:
        return isinstance(other, TheoremRepo) and self.to_obj() == other.to_obj()
