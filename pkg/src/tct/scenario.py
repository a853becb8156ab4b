"""Scenario files: one directive per line, run against a fresh N-node network.

Directives::

    account NAME [ADDRESS]
    deploy NAME = Contract(args) from ACCT [hyp "phi"]
    submit [ID:] NAME.fn(args) from ACCT [hyp "phi"]
    prove [ID:] NAME.fn(args) from ACCT hyp "phi"
    prove [ID:] new Contract(args) from ACCT hyp "phi"
    import-theorem PATH
    expect-commit | expect-accept | expect-reject REASON
    expect-verdict Proven|Counterexample|Unknown
    expect-error TEXT
    expect-model EXPR
    expect-state NAME EXPR
    expect-counter KEY N
    expect-calls FUNCTION N
    expect-lockstep
    reset-counters
    snapshot [LABEL]

``#`` starts a comment. Account names used in arguments but never declared
become externally owned accounts at a name-derived address.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass, field
from typing import Optional

from . import words
from .errors import LangError, TCTError
from .interp.events import CallEnter
from .interp.machine import DEFAULT_STEP_LIMIT, ConcreteEnv, Transaction, eval_concrete
from .interp.world import WorldState, address_of_name
from .lang import load_program
from .lang.parser import parse_expr
from .protocol import Counters, Network, Outcome, ProofResult, VCBundle
from .repo import Theorem
from .solver import COUNTEREXAMPLE, SolverConfig
from .terms import MapVal

_CALL = re.compile(
    r"^(?:(?P<id>[A-Za-z_][\w-]*):\s*)?"
    r"(?:new\s+(?P<contract>\w+)|(?P<target>\w+)\.(?P<fn>\w+))\((?P<args>.*)\)"
    r"\s+from\s+(?P<sender>\w+)"
    r'(?:\s+hyp\s+"(?P<hyp>[^"]*)")?\s*$'
)
_DEPLOY = re.compile(
    r"^(?P<name>\w+)\s*=\s*(?P<contract>\w+)\((?P<args>.*)\)\s+from\s+(?P<sender>\w+)"
    r'(?:\s+hyp\s+"(?P<hyp>[^"]*)")?\s*$'
)


class ScenarioError(TCTError):
    """Malformed directive (usage error)."""


class ExpectationFailed(TCTError):
    pass


@dataclass
class DirectiveResult:
    line: int
    text: str
    output: str
    ok: bool = True


@dataclass
class ScenarioOutcome:
    results: list[DirectiveResult] = field(default_factory=list)
    snapshots: dict[str, list] = field(default_factory=dict)
    counters: Counters = field(default_factory=Counters)
    commits: int = 0
    rejects: int = 0
    theorems_stored: int = 0
    failure: Optional[DirectiveResult] = None
    lockstep: bool = True

    @property
    def exit_code(self) -> int:
        return 0 if self.failure is None else 1

    def report(self) -> str:
        lines = []
        for r in self.results:
            lines.append(f"{r.line:>4} {r.text}")
            for out in r.output.splitlines():
                lines.append(f"       {out}")
        if self.results:
            c = self.counters
            lines.append(f"summary: commits={self.commits} rejects={self.rejects} "
                         f"theorems={self.theorems_stored} solver_calls={c.solver_calls} "
                         f"lockstep={'yes' if self.lockstep else 'NO'}")
        if self.failure is not None:
            lines.append(f"FAILED at line {self.failure.line}: {self.failure.text}")
        return "\n".join(lines) + ("\n" if lines else "")


def split_args(text: str) -> list[str]:
    out, depth, cur = [], 0, ""
    for ch in text:
        if ch == "," and depth == 0:
            out.append(cur.strip())
            cur = ""
            continue
        depth += ch in "(["
        depth -= ch in ")]"
        cur += ch
    if cur.strip():
        out.append(cur.strip())
    return out


class Session:
    """A network plus the scenario-level names for its accounts."""

    def __init__(self, sources: Optional[list[str]] = None, n_nodes: int = 3,
                 config: Optional[SolverConfig] = None, timeout_ms: Optional[int] = None,
                 step_limit: int = DEFAULT_STEP_LIMIT, debug_asserts: bool = False,
                 dump_dir: Optional[str] = None, timestamps: bool = False,
                 base_dir: str = "."):
        self.sources = list(sources if sources is not None else corpus_sources())
        self.program = load_program(self.sources)
        self.config = config or SolverConfig()
        self.net = Network(WorldState(self.program), n_nodes, self.config, timeout_ms, step_limit, debug_asserts)
        self.names: dict[str, int] = {}
        self.last: Optional[Outcome] = None
        self.dump_dir = dump_dir
        self.timestamps = timestamps
        self.base_dir = base_dir
        self.outcome = ScenarioOutcome()

    # -- names and calls

    def address(self, name: str) -> int:
        if name not in self.names:
            addr = address_of_name(name)
            self.names[name] = addr
            self.net.add_account(addr)
        return self.names[name]

    def declare_account(self, name: str, address: Optional[int] = None) -> int:
        addr = address if address is not None else address_of_name(name)
        self.names[name] = addr
        self.net.add_account(addr)
        return addr

    def eval_arg(self, text: str):
        e = parse_expr(text)
        from .lang import ast as A

        values = {}
        for node in A.walk(e):
            if isinstance(node, A.Name):
                values[node.id] = self.address(node.id)
        v = eval_concrete(e, ConcreteEnv(values), wrapping=False)
        return v

    def parse_call(self, text: str) -> tuple[Transaction, Optional[str]]:
        m = _CALL.match(text.strip())
        if not m:
            raise ScenarioError(f"cannot parse call: {text!r}")
        args = tuple(self.eval_arg(a) for a in split_args(m["args"]))
        sender = self.address(m["sender"])
        if m["contract"]:
            self.program.contract(m["contract"])
            tx = Transaction(sender, None, "constructor", args, m["id"] or "", m["contract"])
        else:
            if m["target"] not in self.names:
                raise ScenarioError(f"unknown contract instance {m['target']!r}")
            tx = Transaction(sender, self.names[m["target"]], m["fn"], args, m["id"] or "")
        return tx, m["hyp"]

    def world(self, node: int = 0) -> WorldState:
        return self.net.nodes[node].world

    # -- directives

    def run_text(self, text: str) -> ScenarioOutcome:
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            start = time.monotonic()
            try:
                output = self.directive(line)
                ok = True
            except ExpectationFailed as exc:
                output, ok = f"expectation failed: {exc}", False
            if self.timestamps:
                output += f"\n({(time.monotonic() - start) * 1000:.0f} ms)"
            res = DirectiveResult(lineno, line, output, ok)
            self.outcome.results.append(res)
            if not ok:
                self.outcome.failure = res
                break
        self.finish()
        return self.outcome

    def finish(self) -> None:
        o = self.outcome
        o.counters = self.net.node_counters()
        o.theorems_stored = len(self.net.service.repo)
        o.lockstep = self.net.lockstep()

    def directive(self, line: str) -> str:
        verb, _, rest = line.partition(" ")
        rest = rest.strip()
        handler = getattr(self, "do_" + verb.replace("-", "_"), None)
        if handler is None:
            raise ScenarioError(f"unknown directive {verb!r}")
        return handler(rest)

    def _record(self, out: Outcome) -> str:
        self.last = out
        if out.kind == "Commit":
            self.outcome.commits += 1
        elif out.kind == "Reject":
            self.outcome.rejects += 1
        text = out.line()
        if out.proof is not None and not out.proof.proven:
            text += "\n" + out.proof.report().rstrip()
        for w in out.warnings:
            text += f"\nwarning: {w}"
        self._dump(out)
        return text

    def _dump(self, out: Outcome) -> None:
        if not self.dump_dir or out.proof is None:
            return
        from .interp.events import dump_trace
        from .vcgen import dump_queries

        p = out.proof
        d = os.path.join(self.dump_dir, "proofs")
        os.makedirs(d, exist_ok=True)
        stem = os.path.join(d, out.tx_id)
        if p.execution is not None:
            _write(stem + ".trace", dump_trace(p.execution.trace))
        if p.ssa is not None:
            _write(stem + ".ssa", p.ssa.dump())
        if p.goals:
            _write(stem + ".vc", dump_queries([g.query for g in p.goals]))
        for g in p.goals:
            _write(f"{stem}-{g.query.name}.smt2", g.script)

    def do_account(self, rest: str) -> str:
        parts = rest.split()
        if len(parts) not in (1, 2):
            raise ScenarioError("usage: account NAME [ADDRESS]")
        addr = self.declare_account(parts[0], int(parts[1], 0) if len(parts) == 2 else None)
        return f"{parts[0]} = {words.hex_address(addr)}"

    def do_deploy(self, rest: str) -> str:
        m = _DEPLOY.match(rest)
        if not m:
            raise ScenarioError(f"cannot parse deploy: {rest!r}")
        tx, _ = self.parse_call(f"{m['name']}: new {m['contract']}({m['args']}) from {m['sender']}")
        out = self.net.workflow_transact(tx, m["hyp"] if m["hyp"] is not None else "true")
        text = self._record(out)
        if out.kind == "Commit":
            self.names[m["name"]] = out.created
            text += f"\n{m['name']} = {words.hex_address(out.created)}"
        return text

    def do_submit(self, rest: str) -> str:
        tx, hyp = self.parse_call(rest)
        return self._record(self.net.workflow_transact(tx, hyp))

    def do_prove(self, rest: str) -> str:
        tx, hyp = self.parse_call(rest)
        if hyp is None:
            raise ScenarioError("prove needs hyp \"...\"")
        out = self.net.prove_and_submit_theorem(tx, hyp)
        text = self._record(out)
        if out.proof is not None and out.proof.proven:
            text += "\n" + out.proof.report().rstrip()
        return text

    def do_import_theorem(self, rest: str) -> str:
        path = os.path.join(self.base_dir, rest)
        theorem, bundle = load_theorem_file(path)
        out = self.net.workflow_submit_theorem(theorem, bundle)
        return self._record(out)

    # -- expectations

    def _need_last(self) -> Outcome:
        if self.last is None:
            raise ExpectationFailed("no previous outcome")
        return self.last

    def do_expect_commit(self, rest: str) -> str:
        o = self._need_last()
        if o.kind != "Commit":
            raise ExpectationFailed(f"expected Commit, got {o.line()}")
        return "ok"

    def do_expect_accept(self, rest: str) -> str:
        o = self._need_last()
        if o.kind != "Accepted":
            raise ExpectationFailed(f"expected Accepted, got {o.line()}")
        return "ok"

    def do_expect_reject(self, rest: str) -> str:
        o = self._need_last()
        if o.kind != "Reject" or (rest and o.reason != rest):
            raise ExpectationFailed(f"expected Reject {rest}, got {o.line()}")
        return "ok"

    def _last_proof(self) -> ProofResult:
        o = self._need_last()
        if o.proof is None:
            raise ExpectationFailed("previous directive ran no proof")
        return o.proof

    def do_expect_verdict(self, rest: str) -> str:
        p = self._last_proof()
        if p.status != rest:
            raise ExpectationFailed(f"expected verdict {rest}, got {p.status}")
        return "ok"

    def do_expect_error(self, rest: str) -> str:
        o = self._need_last()
        if rest not in o.detail:
            raise ExpectationFailed(f"{rest!r} not in {o.detail!r}")
        return "ok"

    def do_expect_model(self, rest: str) -> str:
        p = self._last_proof()
        bad = p.failing
        if bad is None or bad.verdict.kind != COUNTEREXAMPLE:
            raise ExpectationFailed("no counterexample model")
        values, maps = {}, {}
        for k, v in bad.verdict.model.items():
            (maps if isinstance(v, MapVal) else values)[k] = v
        if not eval_concrete(parse_expr(rest), ConcreteEnv(values, maps), wrapping=False):
            raise ExpectationFailed(f"model does not satisfy {rest}")
        return "ok"

    def do_expect_state(self, rest: str) -> str:
        name, _, expr = rest.partition(" ")
        if name not in self.names:
            raise ScenarioError(f"unknown instance {name!r}")
        e = parse_expr(expr)
        for node in self.net.nodes:
            acct = node.world.account(self.names[name])
            values = {n: a for n, a in self.names.items()}
            maps = {}
            for slot, v in acct.storage.items():
                if isinstance(v, dict):
                    maps[slot] = MapVal(v)
                else:
                    values[slot] = v
            if not eval_concrete(e, ConcreteEnv(values, maps), wrapping=False):
                raise ExpectationFailed(f"node {node.id}: {expr} is false for {name}")
        return "ok"

    def do_expect_counter(self, rest: str) -> str:
        key, n = rest.split()
        got = getattr(self.net.node_counters(), key)
        if got != int(n):
            raise ExpectationFailed(f"{key} = {got}, expected {n}")
        return f"{key} = {got}"

    def do_expect_calls(self, rest: str) -> str:
        fn, n = rest.split()
        p = self._last_proof()
        trace = p.execution.trace if p.execution else []
        got = sum(1 for ev in trace if isinstance(ev, CallEnter) and ev.function == fn)
        if got != int(n):
            raise ExpectationFailed(f"{got} calls to {fn}, expected {n}")
        return f"{fn} entered {got} times"

    def do_expect_lockstep(self, rest: str) -> str:
        if not self.net.lockstep():
            raise ExpectationFailed("node snapshots differ")
        return "ok"

    def do_reset_counters(self, rest: str) -> str:
        self.net.reset_counters()
        return "ok"

    def do_snapshot(self, rest: str) -> str:
        label = rest or f"s{len(self.outcome.snapshots)}"
        snaps = self.net.snapshots()
        self.outcome.snapshots[label] = snaps
        if self.dump_dir:
            for i, s in enumerate(snaps):
                d = os.path.join(self.dump_dir, "snapshots", label, f"node{i}")
                os.makedirs(d, exist_ok=True)
                for k, text in s.items():
                    _write(os.path.join(d, f"{k}.json"), text)
        return f"{label}: {len(snaps)} nodes, lockstep={'yes' if all(s == snaps[0] for s in snaps) else 'NO'}"

    # -- persistence

    def save(self, directory: str) -> None:
        os.makedirs(directory, exist_ok=True)
        obj = {"sources": self.sources, "names": {k: words.hex_address(v) for k, v in self.names.items()},
               "network": self.net.to_obj()}
        _write(os.path.join(directory, "session.json"), json.dumps(obj, sort_keys=True, indent=1) + "\n")

    @classmethod
    def load(cls, directory: str, **kw) -> "Session":
        with open(os.path.join(directory, "session.json")) as fh:
            obj = json.load(fh)
        s = cls(obj["sources"], len(obj["network"]["nodes"]), **kw)
        s.net = Network.from_obj(obj["network"], s.program, s.config, s.net.timeout_ms, s.net.step_limit,
                                 s.net.service.debug_asserts)
        s.names = {k: int(v, 16) for k, v in obj["names"].items()}
        return s


def _write(path: str, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)


def corpus_sources() -> list[str]:
    d = os.path.join(os.path.dirname(__file__), "corpus")
    return [open(os.path.join(d, f)).read() for f in sorted(os.listdir(d)) if f.endswith(".msol")]


def scenario_path(name: str) -> str:
    """Path of a bundled scenario (``attack1`` or ``attack1.tct``)."""
    d = os.path.join(os.path.dirname(__file__), "scenarios")
    return os.path.join(d, name if name.endswith(".tct") else name + ".tct")


def run_scenario(path: str, **kw) -> ScenarioOutcome:
    with open(path) as fh:
        text = fh.read()
    kw.setdefault("base_dir", os.path.dirname(os.path.abspath(path)))
    return Session(**kw).run_text(text)


# -- theorem files


def theorem_file_text(theorem: Theorem, bundle: VCBundle) -> str:
    obj = {"schema": 1, "theorem": theorem.to_obj(), "bundle": bundle.to_obj()}
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def load_theorem_file(path: str) -> tuple[Theorem, VCBundle]:
    with open(path) as fh:
        obj = json.load(fh)
    return Theorem.from_obj(obj["theorem"]), VCBundle.from_obj(obj["bundle"])
