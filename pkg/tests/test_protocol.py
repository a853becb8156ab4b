import dataclasses
import json

import pytest

from conftest import DEPLOY_HYP, T1
from tct.protocol import (
    HYPOTHESIS_FALSE,
    NO_THEOREM,
    PATH_HASH_MISMATCH,
    REVERTED,
    THEOREM_UNPROVEN,
    Counters,
    Network,
    VCBundle,
    prove_for_tx,
)
from tct.scenario import Session
from tct.solver import COUNTEREXAMPLE, SolverConfig


def certified():
    """Token deployed and transferProxy certified through workflow C."""
    s = Session()
    for d in ["account demo", "account alice", "account x",
              f'deploy token = MultiVulnToken(1000) from demo hyp "{DEPLOY_HYP}"',
              f'prove cert: token.transferProxy(demo, alice, 1, 0) from demo hyp "{T1}"']:
        s.directive(d)
    assert s.last.kind == "Accepted"
    return s


def proxy_theorem(s):
    return next(t for t in s.net.service.repo if t.function == "transferProxy")


@pytest.fixture
def sess():
    return certified()


def test_workflow_b_uses_no_solver(sess):
    sess.net.reset_counters()
    tx, _ = sess.parse_call("token.transferProxy(demo, x, 20, 2) from demo")
    out = sess.net.workflow_submit(tx)
    assert out.kind == "Commit"
    for n in sess.net.nodes:
        assert n.counters.solver_calls == 0
        assert (n.counters.phi_evals, n.counters.executions, n.counters.hash_checks) == (1, 1, 1)
        assert len(n.log) == 2 and n.log[-1].tx.tx_id == out.tx_id
    assert sess.net.lockstep()


def test_attack_needs_theorem(sess):
    tx, _ = sess.parse_call("token.transferProxy(demo, x, 2^255 + 1, 2^255) from demo")
    assert sess.net.workflow_submit(tx).kind == "NeedTheorem"
    out = sess.net.workflow_transact(tx, None)
    assert out.kind == "Reject" and out.reason == NO_THEOREM


def test_prove_for_tx_hypothesis_false_skips_solver(sess):
    tx, _ = sess.parse_call("token.transferProxy(demo, x, 2^255 + 1, 2^255) from demo")
    c = Counters()
    proof = prove_for_tx(sess.world(), tx, T1, SolverConfig(), c)
    assert proof.status == HYPOTHESIS_FALSE and c.solver_calls == 0


def test_prove_for_tx_counterexample(sess):
    tx, _ = sess.parse_call("token.transferProxy(demo, x, 2^255 + 1, 2^255) from demo")
    proof = prove_for_tx(sess.world(), tx, "true", SolverConfig())
    assert proof.status == COUNTEREXAMPLE
    bad = proof.failing
    assert bad.replay_ok
    m = bad.verdict.model
    assert m["_fee"] + m["_value"] >= 2**256
    assert "counterexample" in proof.report()


def test_prove_for_tx_reverted(sess):
    tx, _ = sess.parse_call("token.transferProxy(alice, x, 10, 1) from demo")
    proof = prove_for_tx(sess.world(), tx, T1, SolverConfig())
    assert proof.status == REVERTED and proof.theorem is None


def test_rescue_hypothesis_proves_reentrant_clear():
    s = Session()
    for d in ["account demo", "account attacker2",
              f'deploy token = MultiVulnToken(1000) from demo hyp "{DEPLOY_HYP}"',
              "deploy attack = ReentrancyAttack(token, attacker2) from attacker2"]:
        s.directive(d)
    tx, _ = s.parse_call("token.clear(attacker2) from attack")
    proof = prove_for_tx(s.world(), tx, "balances[msg.sender] == 0", SolverConfig())
    assert proof.proven and all(g.verdict.proven for g in proof.goals)


def test_workflow_c_is_pure(sess):
    before = [(n.world.to_json(), n.log_json()) for n in sess.net.nodes]
    tx, _ = sess.parse_call("token.transferProxy(demo, alice, 10, 1) from demo")
    out = sess.net.prove_and_submit_theorem(tx, "_fee == 1 && " + T1)
    assert out.kind == "Accepted"
    assert [(n.world.to_json(), n.log_json()) for n in sess.net.nodes] == before
    assert all(len(n.repo) == 3 for n in sess.net.nodes)


def test_tampered_path_hash_rejected_everywhere(sess):
    tx, _ = sess.parse_call("token.transferProxy(demo, alice, 10, 1) from demo")
    proof = prove_for_tx(sess.world(), tx, "_fee == 1 && " + T1, SolverConfig())
    bad = dataclasses.replace(proof.theorem, path_hash="0x" + "00" * 32)
    repos = [n.repo.to_json() for n in sess.net.nodes]
    out = sess.net.workflow_submit_theorem(bad, proof.bundle)
    assert out.kind == "Reject" and out.reason == PATH_HASH_MISMATCH
    assert all(r["reason"] == PATH_HASH_MISMATCH for r in out.per_node)
    assert [n.repo.to_json() for n in sess.net.nodes] == repos


def test_bundle_must_satisfy_hypothesis(sess):
    tx, _ = sess.parse_call("token.transferProxy(demo, alice, 10, 1) from demo")
    proof = prove_for_tx(sess.world(), tx, "_fee == 1 && " + T1, SolverConfig())
    wrong_tx, _ = sess.parse_call("token.transferProxy(demo, alice, 10, 2) from demo")
    out = sess.net.workflow_submit_theorem(proof.theorem, VCBundle(wrong_tx))
    assert out.kind == "Reject" and out.reason == HYPOTHESIS_FALSE


def test_divergent_node_rejects_with_hypothesis_false(sess):
    odd = sess.net.nodes[2]
    token = sess.names["token"]
    odd.world.accounts[token].storage["totalSupply"] = 2**255  # phi now false on this node only
    tx, _ = sess.parse_call("token.transferProxy(demo, x, 20, 2) from demo")
    out = sess.net.workflow_submit(tx)
    assert out.kind == "Commit"
    assert out.per_node[2]["reason"] == HYPOTHESIS_FALSE
    assert len(odd.log) == 1  # only the deployment


def test_reverting_tx_is_rejected_without_block(sess):
    tx, _ = sess.parse_call("token.transferProxy(alice, x, 10, 1) from demo")
    before = [n.snapshot() for n in sess.net.nodes]
    out = sess.net.workflow_submit(tx)
    assert out.kind == "Reject" and out.reason == REVERTED
    assert [n.snapshot() for n in sess.net.nodes] == before


def test_check_order_phi_before_execution(sess):
    th = proxy_theorem(sess)
    tx, _ = sess.parse_call("token.transferProxy(alice, x, 2^255, 1) from demo")  # phi false and would revert
    out = sess.net.workflow_submit_with_theorem(tx, th, None)
    assert out.reason == HYPOTHESIS_FALSE


def test_path_hash_check(sess):
    th = proxy_theorem(sess)
    forged = dataclasses.replace(th, path_hash="0x" + "11" * 32)
    for n in sess.net.nodes:
        n.repo.add(forged)
    tx, _ = sess.parse_call("token.transferProxy(demo, x, 20, 2) from demo")
    out = sess.net.workflow_submit_with_theorem(tx, forged, None)
    assert out.reason == PATH_HASH_MISMATCH
    assert all(len(n.log) == 1 for n in sess.net.nodes)


def test_unknown_theorem_without_bundle(sess):
    th = proxy_theorem(sess)
    other = dataclasses.replace(th, hypothesis="_fee == 2 && " + T1)
    tx, _ = sess.parse_call("token.transferProxy(demo, x, 20, 2) from demo")
    out = sess.net.workflow_submit_with_theorem(tx, other, None)
    assert out.reason == NO_THEOREM


def test_workflow_a_end_to_end():
    s = Session()
    for d in ["account demo", "account x", f'deploy token = MultiVulnToken(1000) from demo hyp "{DEPLOY_HYP}"']:
        s.directive(d)
    tx, _ = s.parse_call("token.transferProxy(demo, x, 10, 1) from demo")
    out = s.net.workflow_transact(tx, T1)
    assert out.kind == "Commit" and out.proof.proven
    assert all(len(n.repo) == 2 for n in s.net.nodes)
    assert s.net.lockstep()
    tx2, _ = s.parse_call("token.transferProxy(demo, x, 2^255 + 1, 2^255) from demo")
    out = s.net.workflow_transact(tx2, "true")
    assert out.kind == "Reject" and out.reason == THEOREM_UNPROVEN


def test_network_round_trip(sess):
    obj = json.loads(json.dumps(sess.net.to_obj()))
    net = Network.from_obj(obj, sess.program, sess.config)
    assert net.snapshots() == sess.net.snapshots()
    assert net.bus_json() == sess.net.bus_json()


def test_bus_records_every_message(sess):
    kinds = [m["type"] for m in json.loads(sess.net.bus_json())]
    assert kinds[:2] == ["SubmitTx", "NeedTheorem"]
    assert "SubmitTheoremOnly" in kinds and "Accepted" in kinds
