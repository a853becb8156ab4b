"""Protocol invariants as properties over random transaction sequences."""

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import DEPLOY_HYP, T1
from fuzzing import Fuzzer
from tct.interp.machine import execute
from tct.protocol import Network
from tct.repo import Theorem
from tct.scenario import Session
from tct.tracepath import path_hash

ACCOUNTS = ["demo", "alice", "bob", "attacker2"]


@pytest.fixture(scope="module")
def base():
    s = Session()
    for d in ["account demo", "account alice", "account bob", "account attacker2",
              f'deploy token = MultiVulnToken(1000) from demo hyp "{DEPLOY_HYP}"',
              "deploy attack = ReentrancyAttack(token, attacker2) from attacker2",
              "deploy holder = NotifiedHolder(token) from alice",
              f'prove cert: token.transferProxy(demo, alice, 1, 0) from demo hyp "{T1}"',
              'prove ben: holder.clearTo(bob) from alice hyp "true"']:
        s.directive(d)
        if not d.startswith("account"):
            assert s.last.kind in ("Commit", "Accepted"), d
    return s


def clone(s: Session) -> Session:
    c = Session(s.sources, len(s.net.nodes))
    c.net = Network.from_obj(s.net.to_obj(), c.program, c.config)
    c.names = dict(s.names)
    return c


amounts = st.one_of(st.integers(0, 1200), st.sampled_from([2**255 - 1, 2**255, 2**255 + 1, 2**256 - 1]))
transfer = st.tuples(st.just("transfer"), st.sampled_from(ACCOUNTS + ["holder", "attack"]),
                     st.sampled_from(ACCOUNTS + ["holder", "attack"]), amounts, amounts,
                     st.sampled_from(ACCOUNTS))
clear_to = st.tuples(st.just("clearTo"), st.sampled_from(ACCOUNTS), st.sampled_from(ACCOUNTS))


def call_text(op) -> str:
    if op[0] == "transfer":
        _, frm, to, value, fee, sender = op
        return f"token.transferProxy({frm}, {to}, {value}, {fee}) from {sender}"
    _, to, sender = op
    return f"holder.clearTo({to}) from {sender}"


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.lists(st.one_of(transfer, clear_to), min_size=1, max_size=8))
def test_lockstep_frugality_and_safety_gate(base, ops):
    s = clone(base)
    s.net.reset_counters()
    for op in ops:
        tx, _ = s.parse_call(call_text(op))
        out = s.net.workflow_submit(tx)
        assert out.kind in ("Commit", "Reject", "NeedTheorem")
    # workflow B never consults the solver
    assert s.net.node_counters().solver_calls == 0
    # every node holds the same world, repo and log
    assert s.net.lockstep()
    # every committed block is backed by a stored theorem with the block's path
    for n in s.net.nodes:
        ids = {th.id: th for th in n.repo}
        for entry in n.log:
            assert entry.theorem_id in ids
            assert ids[entry.theorem_id].path_hash == entry.path_hash
    # token conservation holds on every reachable state
    token = s.names["token"]
    w = s.world()
    assert sum(w.read(token, "balances").values()) == w.read(token, "totalSupply")


hyps = st.sampled_from(["true", "false", T1, "_fee == 0", "_value < 10", "totalSupply == 1000",
                        "balances[msg.sender] == 0", "_value / _fee > 1"])


@settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(transfer, hyps)
def test_workflow_c_never_changes_state(base, op, hyp):
    s = clone(base)
    before = [(n.world.to_json(), n.log_json()) for n in s.net.nodes]
    tx, _ = s.parse_call(call_text(op))
    s.net.prove_and_submit_theorem(tx, hyp)
    assert [(n.world.to_json(), n.log_json()) for n in s.net.nodes] == before
    assert s.net.lockstep()


def test_fuzzer_detects_a_forged_theorem(base):
    """The soundness fuzz is only meaningful if it can see a violation."""
    s = clone(base)
    s.directive(f'submit fund: token.transferProxy(demo, attack, 5, 0) from demo hyp "{T1}"')
    assert s.last.kind == "Commit"
    tx, _ = s.parse_call("attack.attack() from attacker2")
    res = execute(s.world(), tx)
    attack = s.world().accounts[s.names["attack"]]
    forged = Theorem(attack.code_hash, "attack", "true", path_hash(res.trace), "ReentrancyAttack")
    stats = Fuzzer(s.world(), [forged], seed=1).run(per_theorem=20, max_attempts=500)
    assert stats[0].matched > 0 and stats[0].failures
    assert any("sum(balances) == totalSupply" in " ".join(f) for _, f in stats[0].failures)
