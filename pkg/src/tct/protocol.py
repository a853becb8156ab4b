"""Issuer, pre-execution service and validating nodes over an ordered message bus."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

from . import words
from .errors import HypothesisEvalError, ModifiesViolation, SolverFailure
from .interp.machine import COMMITTED, DEFAULT_STEP_LIMIT, STEP_LIMIT, ExecutionResult, Transaction, eval_hypothesis, execute
from .interp.world import WorldState
from .lang import ast as A
from .lang.hypothesis import check_hypothesis_grammar
from .lang.printer import print_expr
from .lang.resolve import ResolvedContract
from .repo import Evidence, Theorem, TheoremRepo
from .solver import COUNTEREXAMPLE, FAILURE, PROVEN, UNKNOWN, SolverConfig, Verdict, check, emit_script, replay
from .solver.driver import solver_identity
from .solver.emit import render
from .terms import MAP, Lit, Sym, eq, select, sum_
from .tracepath import SSAProgram, extract_straightline, path_hash
from .vcgen import Hypothesis, VCQuery, build_vc

# reject reasons
NO_THEOREM = "NoTheorem"
HYPOTHESIS_FALSE = "HypothesisFalse"
PATH_HASH_MISMATCH = "PathHashMismatch"
THEOREM_UNPROVEN = "TheoremUnproven"
REVERTED = "Reverted"
STEP_LIMIT_REASON = "StepLimit"
REJECT_REASONS = (NO_THEOREM, HYPOTHESIS_FALSE, PATH_HASH_MISMATCH, THEOREM_UNPROVEN, REVERTED, STEP_LIMIT_REASON)


def tx_obj(tx: Transaction) -> dict:
    return {
        "id": tx.tx_id,
        "origin": words.hex_address(tx.origin),
        "target": None if tx.target is None else words.hex_address(tx.target),
        "contract": tx.contract,
        "function": tx.function,
        "args": [a if isinstance(a, bool) else str(a) for a in tx.args],
    }


def tx_from_obj(obj: dict) -> Transaction:
    args = tuple(a if isinstance(a, bool) else int(a) for a in obj["args"])
    target = None if obj["target"] is None else int(obj["target"], 16)
    return Transaction(int(obj["origin"], 16), target, obj["function"], args, obj["id"], obj.get("contract"))


# ---------------------------------------------------------------- messages


@dataclass(frozen=True)
class VCBundle:
    """What a node needs to re-derive a theorem's obligations: the sample transaction."""

    sample_tx: Transaction

    def to_obj(self) -> dict:
        return {"sample_tx": tx_obj(self.sample_tx)}

    @classmethod
    def from_obj(cls, obj: dict) -> "VCBundle":
        return cls(tx_from_obj(obj["sample_tx"]))


@dataclass(frozen=True)
class SubmitTx:
    tx: Transaction

    def to_obj(self):
        return {"type": "SubmitTx", "tx": tx_obj(self.tx)}


@dataclass(frozen=True)
class NeedTheorem:
    tx: Transaction

    def to_obj(self):
        return {"type": "NeedTheorem", "tx": self.tx.tx_id}


@dataclass(frozen=True)
class SubmitTxWithTheorem:
    tx: Transaction
    theorem: Theorem
    bundle: Optional[VCBundle] = None

    def to_obj(self):
        return {"type": "SubmitTxWithTheorem", "tx": tx_obj(self.tx), "theorem": self.theorem.id,
                "bundle": None if self.bundle is None else self.bundle.to_obj()}


@dataclass(frozen=True)
class SubmitTheoremOnly:
    theorem: Theorem
    bundle: VCBundle

    def to_obj(self):
        return {"type": "SubmitTheoremOnly", "theorem": self.theorem.id, "bundle": self.bundle.to_obj()}


@dataclass(frozen=True)
class Commit:
    tx_id: str
    block_index: int

    def to_obj(self):
        return {"type": "Commit", "tx": self.tx_id, "block": self.block_index}


@dataclass(frozen=True)
class Reject:
    tx_id: str
    reason: str
    detail: str = ""

    def to_obj(self):
        return {"type": "Reject", "tx": self.tx_id, "reason": self.reason, "detail": self.detail}


@dataclass(frozen=True)
class Accepted:
    theorem_id: str

    def to_obj(self):
        return {"type": "Accepted", "theorem": self.theorem_id}


Message = Union[SubmitTx, NeedTheorem, SubmitTxWithTheorem, SubmitTheoremOnly, Commit, Reject, Accepted]


# ---------------------------------------------------------------- counters


@dataclass
class Counters:
    solver_calls: int = 0
    phi_evals: int = 0
    executions: int = 0
    hash_checks: int = 0
    lookups: int = 0

    def add(self, other: "Counters") -> "Counters":
        return Counters(*(getattr(self, k) + getattr(other, k) for k in self.__dataclass_fields__))

    def to_obj(self) -> dict:
        return dict(self.__dict__)


# ------------------------------------------------------------------ proving


@dataclass
class GoalResult:
    query: VCQuery
    verdict: Verdict
    anchored: bool = False
    replay_ok: Optional[bool] = None
    script: str = ""


@dataclass
class ProofResult:
    """Outcome of test-running a transaction and discharging its obligations."""

    status: str  # Proven | Counterexample | Unknown | SolverFailure | HypothesisFalse | Reverted | StepLimit | ModifiesViolation
    tx: Transaction
    hypothesis: Hypothesis
    execution: Optional[ExecutionResult] = None
    ssa: Optional[SSAProgram] = None
    goals: list[GoalResult] = field(default_factory=list)
    theorem: Optional[Theorem] = None
    bundle: Optional[VCBundle] = None
    error: str = ""

    @property
    def proven(self) -> bool:
        return self.status == PROVEN

    @property
    def failing(self) -> Optional[GoalResult]:
        for g in self.goals:
            if g.verdict.kind != PROVEN:
                return g
        return None

    @property
    def path_hash(self) -> Optional[str]:
        if self.execution is None or not self.execution.committed:
            return None
        return path_hash(self.execution.trace)

    def report(self) -> str:
        lines = [f"status: {self.status}"]
        if self.error:
            lines.append(f"error: {self.error}")
        for g in self.goals:
            lines.append(f"{g.query.name} {g.query.label}: {g.verdict.kind}"
                         + (f" ({g.verdict.reason})" if g.verdict.reason else ""))
        bad = self.failing
        if bad is not None and bad.verdict.kind == COUNTEREXAMPLE:
            lines.append(f"counterexample for {bad.query.name}"
                         + (" (anchored to the sample transaction)" if bad.anchored else "")
                         + (f", replay {'ok' if bad.replay_ok else 'FAILED'}"))
            lines += ["  " + b for b in bad.verdict.bindings()]
        if self.theorem is not None and self.proven:
            lines.append(f"theorem {self.theorem.id}")
            lines.append(f"  tau := {self.theorem.tuple_text()}")
        return "\n".join(lines) + "\n"


def _entry(world: WorldState, tx: Transaction) -> tuple[ResolvedContract, A.FunctionDef, Optional[int]]:
    if tx.is_deployment:
        rc = world.program.contract(tx.contract)
        fn = rc.constructor or A.FunctionDef("constructor", [], [], is_constructor=True)
        return rc, fn, None
    rc = world.code(tx.target)
    if rc is None:
        from .errors import UnknownFunction

        raise UnknownFunction(f"{words.hex_address(tx.target)} has no code")
    fn = rc.function(tx.function)
    if fn is None:
        from .errors import UnknownFunction

        raise UnknownFunction(f"{rc.name} has no function {tx.function!r}")
    return rc, fn, tx.target


def hypothesis_holds(world: WorldState, tx: Transaction, hyp: Hypothesis) -> bool:
    """phi and the entry precondition, evaluated concretely (unbounded arithmetic)."""
    rc, fn, address = _entry(world, tx)
    for cond in [hyp.expr] + list(fn.pre):
        if not eval_hypothesis(cond, rc, fn, tx.args, tx.origin, world, address):
            return False
    return True


def anchors(ssa: SSAProgram, q: VCQuery, world: WorldState, tx: Transaction) -> tuple[str, ...]:
    """SMT formulas pinning a query's free symbols to the sample transaction's values."""
    symbols = q.symbols()
    out: list[str] = []
    rc, fn, _ = _entry(world, tx)
    for p, v in zip(fn.params, tx.args):
        name = ssa.entry_params.get(p.name)
        if name in symbols:
            out.append(render(eq(Sym(name, symbols[name]), Lit(v))))
    for info in ssa.accounts:
        if info.symbol in symbols:
            out.append(render(eq(Sym(info.symbol), Lit(info.address))))
        acct = world.accounts.get(info.address)
        if info.code_hash is None or acct is None or acct.code_hash is None:
            continue
        for slot, version in info.initial.items():
            if version not in symbols:
                continue
            value = acct.storage[slot]
            if symbols[version] == MAP:
                # entry-wise pins; a whole-array equality leaves the solver at unknown
                m = Sym(version, MAP)
                for k, v in sorted(value.items()):
                    out.append(render(eq(select(m, Lit(k)), Lit(v))))
                total = sum(v for k, v in value.items() if words.is_address(k))
                out.append(render(eq(sum_(m), Lit(total))))
            else:
                out.append(render(eq(Sym(version, symbols[version]), Lit(value))))
    return tuple(out)


def discharge(queries: list[VCQuery], config: SolverConfig, timeout_ms: Optional[int],
              counters: Counters, parallel: bool = True) -> list[GoalResult]:
    """Run the solver on every query; each call owns its solver process."""
    scripts = [emit_script(q) for q in queries]

    def run(s):
        try:
            return check(s, timeout_ms, config)
        except SolverFailure as exc:
            return Verdict(FAILURE, reason=str(exc), query=s.query)

    counters.solver_calls += len(scripts)
    if parallel and len(scripts) > 1:
        with ThreadPoolExecutor(max_workers=min(4, len(scripts))) as pool:
            verdicts = list(pool.map(run, scripts))
    else:
        verdicts = [run(s) for s in scripts]
    return [GoalResult(q, v, script=s.text) for q, v, s in zip(queries, verdicts, scripts)]


def _status(goals: list[GoalResult]) -> str:
    for kind in (COUNTEREXAMPLE, FAILURE, UNKNOWN):
        if any(g.verdict.kind == kind for g in goals):
            return kind
    return PROVEN


def certify(world: WorldState, tx: Transaction, hyp: Hypothesis, config: SolverConfig,
            counters: Counters, timeout_ms: Optional[int] = None, seq: int = 0,
            step_limit: int = DEFAULT_STEP_LIMIT, anchor: bool = False, parallel: bool = True) -> ProofResult:
    """Test-run ``tx`` on ``world`` (unchanged), build its obligations and prove them."""
    rc, fn, _ = _entry(world, tx)
    check_hypothesis_grammar(hyp.expr, rc, fn)
    counters.phi_evals += 1
    try:
        holds = hypothesis_holds(world, tx, hyp)
    except HypothesisEvalError as exc:
        return ProofResult(HYPOTHESIS_FALSE, tx, hyp, error=str(exc))
    if not holds:
        return ProofResult(HYPOTHESIS_FALSE, tx, hyp, error="hypothesis is false for this transaction")
    counters.executions += 1
    result = execute(world, tx, step_limit)
    if result.status != COMMITTED:
        status = STEP_LIMIT_REASON if result.status == STEP_LIMIT else REVERTED
        return ProofResult(status, tx, hyp, result, error=result.revert_reason)
    ssa = extract_straightline(result.trace, world.program)
    try:
        queries = build_vc(ssa, hyp, world.program)
    except ModifiesViolation as exc:
        return ProofResult("ModifiesViolation", tx, hyp, result, ssa, error=str(exc))
    goals = discharge(queries, config, timeout_ms, counters, parallel)
    if anchor:
        for g in goals:
            if g.verdict.kind != COUNTEREXAMPLE:
                continue
            pinned = emit_script(g.query, anchors(ssa, g.query, world, tx))
            counters.solver_calls += 1
            try:
                v = check(pinned, timeout_ms, config)
            except SolverFailure:
                v = None
            if v is not None and v.kind == COUNTEREXAMPLE:
                g.verdict, g.anchored, g.script = v, True, pinned.text
    for g in goals:
        if g.verdict.kind == COUNTEREXAMPLE:
            g.replay_ok = replay(g.query, g.verdict.model).ok
    status = _status(goals)
    ident = solver_identity(config.path) if goals else ""
    evidence = [Evidence(g.query.name, g.query.origin, g.query.label, g.verdict.kind, ident, seq) for g in goals]
    theorem = Theorem(rc.code_hash, tx.function, hyp.text, path_hash(result.trace), rc.name, evidence)
    return ProofResult(status, tx, hyp, result, ssa, goals, theorem, VCBundle(tx))


def prove_for_tx(world: WorldState, tx: Transaction, hypothesis: Union[Hypothesis, str],
                 config: Optional[SolverConfig] = None, counters: Optional[Counters] = None,
                 timeout_ms: Optional[int] = None, step_limit: int = DEFAULT_STEP_LIMIT) -> ProofResult:
    """Issuer side: certify ``tx`` under ``hypothesis`` against the issuer's view of state.

    Counterexamples are re-checked with the sample transaction's concrete
    values pinned, so reported models explain the actual transaction when
    possible.
    """
    if isinstance(hypothesis, str):
        hypothesis = Hypothesis.parse(hypothesis)
    return certify(world, tx, hypothesis, config or SolverConfig(), counters or Counters(),
                   timeout_ms, step_limit=step_limit, anchor=True)


# -------------------------------------------------------------------- nodes


@dataclass
class BlockEntry:
    index: int
    tx: Transaction
    theorem_id: str
    path_hash: str
    writes: list[str]

    def to_obj(self) -> dict:
        return {"index": self.index, "tx": tx_obj(self.tx), "theorem": self.theorem_id,
                "path_hash": self.path_hash, "writes": self.writes}

    @classmethod
    def from_obj(cls, obj: dict) -> "BlockEntry":
        return cls(obj["index"], tx_from_obj(obj["tx"]), obj["theorem"], obj["path_hash"], list(obj["writes"]))


class Node:
    def __init__(self, node_id: int, world: WorldState, config: SolverConfig,
                 timeout_ms: Optional[int] = None, step_limit: int = DEFAULT_STEP_LIMIT,
                 repo: Optional[TheoremRepo] = None, debug_asserts: bool = False):
        self.id = node_id
        self.debug_asserts = debug_asserts
        self.assert_failures: list[str] = []  # from the last committed execution (debug mode)
        self.world = world
        self.repo = repo if repo is not None else TheoremRepo()
        self.log: list[BlockEntry] = []
        self.counters = Counters()
        self.config = config
        self.timeout_ms = timeout_ms
        self.step_limit = step_limit

    def verify_bundle(self, theorem: Theorem, bundle: VCBundle, seq: int) -> tuple[Optional[str], str, Optional[ProofResult]]:
        """Re-derive and re-prove ``theorem`` from its sample transaction on scratch state.

        Returns (reject reason or None, detail, proof).
        """
        tx = bundle.sample_tx
        try:
            rc, fn, _ = _entry(self.world, tx)
        except Exception as exc:
            return THEOREM_UNPROVEN, str(exc), None
        if (rc.code_hash, tx.function) != theorem.f:
            return THEOREM_UNPROVEN, "sample transaction does not call the theorem's function", None
        proof = certify(self.world, tx, Hypothesis.parse(theorem.hypothesis), self.config, self.counters,
                        self.timeout_ms, seq, self.step_limit, parallel=True)
        if proof.status == HYPOTHESIS_FALSE:
            return HYPOTHESIS_FALSE, proof.error, proof
        if proof.status in (REVERTED, STEP_LIMIT_REASON):
            return proof.status, proof.error, proof
        self.counters.hash_checks += 1
        if proof.path_hash != theorem.path_hash:
            return PATH_HASH_MISMATCH, f"sample path {proof.path_hash} != {theorem.path_hash}", proof
        if not proof.proven:
            bad = proof.failing
            detail = proof.error or (f"{bad.query.name}: {bad.verdict.kind}" if bad else proof.status)
            return THEOREM_UNPROVEN, detail, proof
        return None, "", proof

    def accept_theorem(self, theorem: Theorem, bundle: VCBundle, seq: int) -> Union[Accepted, Reject]:
        """Workflow C: verify and store; world and log stay untouched."""
        if theorem.id in self.repo:
            return Accepted(theorem.id)
        reason, detail, proof = self.verify_bundle(theorem, bundle, seq)
        if reason is not None:
            return Reject(bundle.sample_tx.tx_id, reason, detail)
        self.repo.add(proof.theorem)
        return Accepted(theorem.id)

    def validate_and_commit(self, tx: Transaction, theorem: Theorem, bundle: Optional[VCBundle],
                            seq: int) -> Union[Commit, Reject]:
        """Checks in order: theorem known or verified, phi, execute, completed, path hash."""
        # (1) theorem
        try:
            rc, fn, address = _entry(self.world, tx)
        except Exception as exc:
            return Reject(tx.tx_id, NO_THEOREM, str(exc))
        if (rc.code_hash, tx.function) != theorem.f:
            return Reject(tx.tx_id, NO_THEOREM, "theorem is about a different function")
        if theorem.id not in self.repo:
            if bundle is None:
                return Reject(tx.tx_id, NO_THEOREM, "theorem not in repository and no bundle")
            reason, detail, proof = self.verify_bundle(theorem, bundle, seq)
            if reason is not None:
                return Reject(tx.tx_id, reason, detail)
            self.repo.add(proof.theorem)
        # (2) phi
        self.counters.phi_evals += 1
        try:
            holds = hypothesis_holds(self.world, tx, Hypothesis.parse(theorem.hypothesis))
        except HypothesisEvalError as exc:
            return Reject(tx.tx_id, HYPOTHESIS_FALSE, str(exc))
        if not holds:
            return Reject(tx.tx_id, HYPOTHESIS_FALSE, "")
        # (3) execute, (4) completed
        self.counters.executions += 1
        result = execute(self.world, tx, self.step_limit, self.debug_asserts)
        self.assert_failures = list(result.assert_failures)
        if result.status == STEP_LIMIT:
            return Reject(tx.tx_id, STEP_LIMIT_REASON, result.revert_reason)
        if result.status != COMMITTED:
            return Reject(tx.tx_id, REVERTED, result.revert_reason)
        # (5) path hash
        self.counters.hash_checks += 1
        h = path_hash(result.trace)
        if h != theorem.path_hash:
            return Reject(tx.tx_id, PATH_HASH_MISMATCH, f"{h} != {theorem.path_hash}")
        self.world.apply(result.delta)
        entry = BlockEntry(len(self.log), tx, theorem.id, h, result.delta.lines())
        self.log.append(entry)
        return Commit(tx.tx_id, entry.index)

    # -- serialization

    def log_json(self) -> str:
        return json.dumps([e.to_obj() for e in self.log], sort_keys=True, indent=1) + "\n"

    def snapshot(self) -> dict[str, str]:
        return {"world": self.world.to_json(), "repo": self.repo.to_json(), "log": self.log_json()}


# ------------------------------------------------------------------ network


@dataclass
class Outcome:
    """Result of one workflow as seen by the issuer."""

    kind: str  # Commit | Reject | NeedTheorem | Accepted
    tx_id: str = ""
    reason: str = ""
    detail: str = ""
    block: Optional[int] = None
    theorem_id: str = ""
    per_node: list = field(default_factory=list)
    proof: Optional[ProofResult] = None
    created: Optional[int] = None  # address of a contract deployed by a committed transaction
    warnings: list[str] = field(default_factory=list)  # debug-mode assertion failures

    def line(self) -> str:
        if self.kind == "Commit":
            return f"{self.tx_id}: Commit block {self.block}"
        if self.kind == "Reject":
            return f"{self.tx_id}: Reject {self.reason}" + (f" ({self.detail})" if self.detail else "")
        if self.kind == "Accepted":
            return f"{self.tx_id}: Accepted theorem {self.theorem_id}"
        return f"{self.tx_id}: {self.kind}"


class Network:
    """N nodes in lock step; node 0 doubles as the pre-execution service."""

    def __init__(self, world: WorldState, n_nodes: int = 3, config: Optional[SolverConfig] = None,
                 timeout_ms: Optional[int] = None, step_limit: int = DEFAULT_STEP_LIMIT,
                 debug_asserts: bool = False):
        if n_nodes < 1:
            raise ValueError("a network needs at least one node")
        self.config = config or SolverConfig()
        self.timeout_ms = timeout_ms
        self.step_limit = step_limit
        self.nodes = [Node(i, world.copy(), self.config, timeout_ms, step_limit, debug_asserts=debug_asserts)
                      for i in range(n_nodes)]
        self.bus: list[dict] = []
        self.service_counters = Counters()
        self.issuer_counters = Counters()
        self._auto = 0

    @property
    def service(self) -> Node:
        return self.nodes[0]

    @property
    def program(self):
        return self.service.world.program

    def post(self, msg) -> int:
        self.bus.append(msg.to_obj())
        return len(self.bus) - 1

    def tx_id(self, tx: Transaction) -> Transaction:
        if tx.tx_id:
            return tx
        self._auto += 1
        return Transaction(tx.origin, tx.target, tx.function, tx.args, f"tx{self._auto}", tx.contract)

    # -- genesis (outside the protocol)

    def add_account(self, address: int) -> None:
        for n in self.nodes:
            n.world.add_eoa(address)

    # -- workflows

    def lookup(self, tx: Transaction) -> list[Theorem]:
        self.service_counters.lookups += 1
        return self.service.repo.find_applicable(tx, self.service.world)

    def workflow_submit(self, tx: Transaction) -> Outcome:
        """Submit through the pre-execution service (workflow B, or NeedTheorem)."""
        tx = self.tx_id(tx)
        self.post(SubmitTx(tx))
        candidates = self.lookup(tx)
        if not candidates:
            self.post(NeedTheorem(tx))
            return Outcome("NeedTheorem", tx.tx_id)
        return self._broadcast_tx(tx, candidates[0], None)

    def workflow_submit_with_theorem(self, tx: Transaction, theorem: Theorem, bundle: Optional[VCBundle]) -> Outcome:
        tx = self.tx_id(tx)
        return self._broadcast_tx(tx, theorem, bundle)

    def _broadcast_tx(self, tx: Transaction, theorem: Theorem, bundle: Optional[VCBundle]) -> Outcome:
        seq = self.post(SubmitTxWithTheorem(tx, theorem, bundle))
        created = self.service.world.next_contract_address() if tx.is_deployment else None
        results = [n.validate_and_commit(tx, theorem, bundle, seq) for n in self.nodes]
        first = results[0]
        self.post(first)
        if isinstance(first, Commit):
            return Outcome("Commit", tx.tx_id, block=first.block_index, theorem_id=theorem.id,
                           per_node=[r.to_obj() for r in results], created=created,
                           warnings=list(self.service.assert_failures))
        return Outcome("Reject", tx.tx_id, first.reason, first.detail, theorem_id=theorem.id,
                       per_node=[r.to_obj() for r in results])

    def workflow_transact(self, tx: Transaction, hypothesis: Optional[str] = None) -> Outcome:
        """Workflow B when a theorem applies, otherwise workflow A with ``hypothesis``."""
        tx = self.tx_id(tx)
        out = self.workflow_submit(tx)
        if out.kind != "NeedTheorem":
            return out
        if hypothesis is None:
            self.post(Reject(tx.tx_id, NO_THEOREM, "no applicable theorem"))
            return Outcome("Reject", tx.tx_id, NO_THEOREM, "no applicable theorem")
        proof = prove_for_tx(self.service.world, tx, hypothesis, self.config, self.issuer_counters,
                             self.timeout_ms, self.step_limit)
        if not proof.proven:
            reason, detail = _proof_reject(proof)
            self.post(Reject(tx.tx_id, reason, detail))
            return Outcome("Reject", tx.tx_id, reason, detail, proof=proof)
        out = self._broadcast_tx(tx, proof.theorem, proof.bundle)
        out.proof = proof
        return out

    def workflow_submit_theorem(self, theorem: Theorem, bundle: VCBundle) -> Outcome:
        """Workflow C: every node re-proves and stores; no state change."""
        seq = self.post(SubmitTheoremOnly(theorem, bundle))
        results = [n.accept_theorem(theorem, bundle, seq) for n in self.nodes]
        first = results[0]
        self.post(first)
        tid = bundle.sample_tx.tx_id
        if isinstance(first, Accepted):
            return Outcome("Accepted", tid, theorem_id=theorem.id, per_node=[r.to_obj() for r in results])
        return Outcome("Reject", tid, first.reason, first.detail, theorem_id=theorem.id,
                       per_node=[r.to_obj() for r in results])

    def prove_and_submit_theorem(self, tx: Transaction, hypothesis: str) -> Outcome:
        tx = self.tx_id(tx)
        proof = prove_for_tx(self.service.world, tx, hypothesis, self.config, self.issuer_counters,
                             self.timeout_ms, self.step_limit)
        if not proof.proven:
            reason, detail = _proof_reject(proof)
            return Outcome("Reject", tx.tx_id, reason, detail, proof=proof)
        out = self.workflow_submit_theorem(proof.theorem, proof.bundle)
        out.proof = proof
        return out

    # -- observation

    def node_counters(self) -> Counters:
        total = Counters()
        for n in self.nodes:
            total = total.add(n.counters)
        return total

    def reset_counters(self) -> None:
        for n in self.nodes:
            n.counters = Counters()
        self.service_counters = Counters()
        self.issuer_counters = Counters()

    def snapshots(self) -> list[dict[str, str]]:
        return [n.snapshot() for n in self.nodes]

    def lockstep(self) -> bool:
        snaps = self.snapshots()
        return all(s == snaps[0] for s in snaps[1:])

    def bus_json(self) -> str:
        return json.dumps(self.bus, sort_keys=True, indent=1) + "\n"

    # -- persistence (CLI sessions)

    def to_obj(self) -> dict:
        return {
            "nodes": [{"world": n.world.to_json_obj(), "repo": n.repo.to_obj(),
                       "log": [e.to_obj() for e in n.log], "counters": n.counters.to_obj()}
                      for n in self.nodes],
            "bus": self.bus,
            "auto": self._auto,
        }

    @classmethod
    def from_obj(cls, obj: dict, program, config: Optional[SolverConfig] = None,
                 timeout_ms: Optional[int] = None, step_limit: int = DEFAULT_STEP_LIMIT,
                 debug_asserts: bool = False) -> "Network":
        net = cls(WorldState(program), len(obj["nodes"]), config, timeout_ms, step_limit, debug_asserts)
        for node, rec in zip(net.nodes, obj["nodes"]):
            node.world = WorldState.from_json(json.dumps(rec["world"]), program)
            node.repo = TheoremRepo.from_json(json.dumps(rec["repo"]))
            node.log = [BlockEntry.from_obj(e) for e in rec["log"]]
            node.counters = Counters(**rec.get("counters", {}))
        net.bus = list(obj["bus"])
        net._auto = obj.get("auto", 0)
        return net


def _proof_reject(proof: ProofResult) -> tuple[str, str]:
    if proof.status == HYPOTHESIS_FALSE:
        return HYPOTHESIS_FALSE, proof.error
    if proof.status in (REVERTED, STEP_LIMIT_REASON):
        return proof.status, proof.error
    if proof.status == "ModifiesViolation":
        return THEOREM_UNPROVEN, f"ModifiesViolation: {proof.error}"
    bad = proof.failing
    detail = f"{proof.status}" + (f" on {bad.query.name} {bad.query.label}" if bad else "")
    return THEOREM_UNPROVEN, detail
