"""The ten acceptance criteria, one test each.

Run ``pytest tests/test_acceptance.py`` and read the "acceptance criteria"
section at the end of the terminal output for the pass/fail lines.
"""

import random
import re

import pytest

from conftest import DEPLOY_HYP, SWAP_HYP, T1, check_golden
from fuzzing import Fuzzer
from tct import words
from tct.errors import ModifiesViolation
from tct.interp.events import CallEnter
from tct.interp.machine import execute
from tct.protocol import UNKNOWN, Counters, prove_for_tx
from tct.scenario import Session, scenario_path
from tct.solver import COUNTEREXAMPLE, SolverConfig
from tct.solver.emit import _WORD_DEFS
from tct.terms import MapVal, eval_term
from tct.tracepath import extract_straightline
from tct.vcgen import Hypothesis, axioms, build_vc, dump_queries

acceptance = pytest.mark.acceptance


def scenario(name, **kw):
    s = Session(**kw)
    out = s.run_text(open(scenario_path(name)).read())
    assert out.exit_code == 0, out.report()
    return s, out


@acceptance(1, "Attack 1 blocked")
def test_attack1_blocked():
    s, out = scenario("attack1")
    atk = next(r for r in out.results if r.text.startswith("submit atk1:"))
    assert "Reject NoTheorem" in atk.output
    token, attacker = s.names["token"], s.names["attacker1"]
    for n in s.net.nodes:
        assert n.world.read(token, "balances").get(attacker, 0) == 0
    proof = s.last.proof
    assert proof.status == COUNTEREXAMPLE
    m = proof.failing.verdict.model
    assert words.add(m["_fee"], m["_value"]) < m["_value"]


@acceptance(2, "Attack 2 blocked")
def test_attack2_blocked():
    s = Session()
    for d in ["account demo", "account attacker2",
              f'deploy token = MultiVulnToken(1000) from demo hyp "{DEPLOY_HYP}"',
              "deploy attack = ReentrancyAttack(token, attacker2) from attacker2",
              f'submit fund: token.transferProxy(demo, attack, 5, 0) from demo hyp "{T1}"',
              'submit atk2: attack.attack() from attacker2 hyp "true"']:
        s.directive(d)
    out = s.last
    assert out.kind == "Reject" and out.reason == "TheoremUnproven"
    token = s.names["token"]
    enters = [e for e in out.proof.execution.trace
              if isinstance(e, CallEnter) and e.function == "clear" and e.callee == token]
    assert len(enters) == 10
    bad = out.proof.failing
    assert bad.query.label.endswith("sum(balances) == totalSupply")
    assert bad.verdict.model["bal_1"] > 0
    assert s.world().read(token, "balances").get(s.names["attacker2"], 0) == 0


@acceptance(3, "transferProxy proves under the range hypothesis")
def test_transfer_proxy_certification():
    s = Session(n_nodes=1)
    for d in ["account demo", "account x", f'deploy token = MultiVulnToken(1000) from demo hyp "{DEPLOY_HYP}"']:
        s.directive(d)
    tx, _ = s.parse_call("token.transferProxy(demo, x, 10, 1) from demo")
    proof = prove_for_tx(s.world(), tx, T1, SolverConfig())
    labels = [g.query.label for g in proof.goals]
    assert proof.proven and len(labels) == 2
    assert any("sum(balances) == totalSupply" in lab for lab in labels)
    assert any("forall x" in lab for lab in labels)
    assert all(g.verdict.proven for g in proof.goals)


@acceptance(4, "Reuse and frugality")
def test_reuse_is_frugal():
    s, out = scenario("reuse")
    assert out.counters.solver_calls == 0
    for n in s.net.nodes:
        c = n.counters
        assert (c.solver_calls, c.phi_evals, c.executions, c.hash_checks) == (0, 5, 5, 5)
    assert [r.text.split(":")[0] for r in out.results if "Commit" in r.output][-5:] == \
        ["submit u1", "submit u2", "submit u3", "submit u4", "submit u5"]


@acceptance(5, "Determinism")
def test_determinism():
    runs = []
    for _ in range(2):
        s, out = scenario("corpus")
        snaps = s.net.snapshots()
        assert len(snaps) == 3 and all(sn == snaps[0] for sn in snaps)
        assert set(snaps[0]) >= {"world", "repo", "log"}
        runs.append((snaps, s.net.bus_json()))
    assert runs[0] == runs[1]


@acceptance(6, "Deployment induction")
def test_deployment_induction():
    s = Session(n_nodes=1)
    s.directive("account demo")
    tx, _ = s.parse_call("new MultiVulnToken(1000) from demo")
    proof = prove_for_tx(s.world(), tx, DEPLOY_HYP, SolverConfig())
    assert proof.proven
    text = dump_queries([g.query for g in proof.goals])
    assert "(inv) assume" not in text
    check_golden("deploy.vc", text)


@acceptance(7, "Modifies clause and owner rewrite")
def test_modifies_violation():
    s, out = scenario("wallet")
    own = next(r for r in out.results if r.text.startswith("submit own:"))
    assert "TheoremUnproven" in own.output and "ModifiesViolation" in own.output
    ping = next(r for r in out.results if r.text.startswith("submit ping:"))
    assert "Commit" in ping.output
    tx, _ = s.parse_call("wallet.fallback(7, mallory) from mallory")
    ssa = extract_straightline(execute(s.world(), tx).trace, s.world().program)
    with pytest.raises(ModifiesViolation):
        build_vc(ssa, Hypothesis.parse("true"), s.world().program)
    assert s.world().read(s.names["wallet"], "owner") == s.names["founder"]


# -- criterion 8: an SMT-LIB integer evaluator written here, independent of the package


def _tokens(text):
    return re.findall(r"\(|\)|[^\s()]+", text)


def _tree(tokens):
    tok = tokens.pop(0)
    if tok == "(":
        out = []
        while tokens[0] != ")":
            out.append(_tree(tokens))
        tokens.pop(0)
        return out
    return tok


def _smt_eval(e, env):
    if isinstance(e, str):
        return env[e] if e in env else int(e)
    op, *args = e
    if op == "let":
        inner = dict(env)
        for name, val in args[0]:
            inner[name] = _smt_eval(val, env)
        return _smt_eval(args[1], inner)
    if op == "ite":
        return _smt_eval(args[1] if _smt_eval(args[0], env) else args[2], env)
    vals = [_smt_eval(a, env) for a in args]
    if op == "and":
        return all(vals)
    if op == "<=":
        return vals[0] <= vals[1]
    if op == "<":
        return vals[0] < vals[1]
    if op == "+":
        return sum(vals)
    if op == "-":
        return -vals[0] if len(vals) == 1 else vals[0] - vals[1]
    if op == "*":
        return vals[0] * vals[1]
    if op == "mod":  # SMT-LIB mod is Euclidean: result in [0, |b|)
        return vals[0] % abs(vals[1])
    raise ValueError(op)


def _define_fun(text):
    _, name, params, _sort, body = _tree(_tokens(text))
    names = [p[0] for p in params]
    return lambda *xs: _smt_eval(body, dict(zip(names, xs), TwoE256=2**256))


@acceptance(8, "Axiom property suite")
def test_axiom_suite():
    rng = random.Random(8)
    M = 2**256
    oracle = {"add": lambda a, b: (a + b) % M, "sub": lambda a, b: (a - b) % M, "mul": lambda a, b: (a * b) % M}
    masked = {"add": lambda a, b: (a + b) & (M - 1), "sub": lambda a, b: (a - b) & (M - 1),
              "mul": lambda a, b: (a * b) & (M - 1)}
    smt = {fn: _define_fun(_WORD_DEFS[fn]) for fn in oracle}
    ax = axioms()
    bodies = {name: ax.body(name)[1] for name in ax.formulas}
    checks = failures = 0

    def word():
        r = rng.random()
        if r < 0.3:
            return rng.choice([0, 1, 2, M // 2 - 1, M // 2, M // 2 + 1, M - 2, M - 1])
        return rng.getrandbits(rng.choice([8, 64, 128, 255, 256]))

    def any_int():
        return rng.choice([word(), -word(), word() + M, word() * rng.randint(2, 5), -word() * rng.randint(2, 5)])

    for _ in range(2000):
        for fn in oracle:
            a, b = word(), word()
            ok = getattr(words, fn)(a, b) == oracle[fn](a, b) == masked[fn](a, b) == smt[fn](a, b)
            ok = ok and eval_term(bodies[fn], {"a": a, "b": b}) is True
            x, y = any_int(), any_int()  # the case split must equal mod on every integer
            ok = ok and smt[fn](x, y) == oracle[fn](x, y)
            checks += 1
            failures += not ok

    for _ in range(4000):
        entries = {rng.getrandbits(160): word() for _ in range(rng.randint(0, 8))}
        m = MapVal(entries)
        a = rng.choice(list(entries) + [rng.getrandbits(160)])
        v = word()
        updated = dict(entries)
        updated[a] = v
        expected = sum(updated.values())
        ok = m.set(a, v).sum == expected == sum(entries.values()) - entries.get(a, 0) + v
        ok = ok and eval_term(bodies["sum-update"], {"m": m, "a": a, "v": v}) is True
        ok = ok and eval_term(bodies["sum-bound"], {"m": m, "a": a}) is True
        checks += 1
        failures += not ok

    assert checks >= 10_000
    assert failures == 0


@acceptance(9, "Soundness fuzz")
def test_soundness_fuzz():
    s, _ = scenario("corpus", debug_asserts=True)
    theorems = list(s.net.service.repo)
    assert len(theorems) >= 10
    stats = Fuzzer(s.world(), theorems, seed=9).run(per_theorem=1000, max_attempts=40_000)
    for st in stats:
        label = f"{st.theorem.contract}.{st.theorem.function}"
        assert st.matched >= 1000, f"{label}: only {st.matched} matching transactions"
        assert not st.failures, f"{label}: {st.failures[:3]}"
    assert not s.net.service.assert_failures


@acceptance(10, "Constant-product swap")
def test_constant_product_swap():
    s = Session(n_nodes=1)
    for d in ["account lp", "account trader", "deploy pool = ConstantProductPair(1000, 1000) from lp",
              'submit f1: pool.faucet(500, 0) from trader hyp "true"']:
        s.directive(d)
    pool = s.names["pool"]
    tx, _ = s.parse_call("pool.swap(250, 0, 1) from trader")
    res = execute(s.world(), tx)
    x, y, dx = 1000, 1000, 250
    dy = y * dx // (x + dx)  # zero-fee constant-product quote
    assert res.return_value == dy == 200
    after = s.world().copy()
    after.apply(res.delta)
    assert after.read(pool, "x") * after.read(pool, "y") == x * y == 10**6

    c = Counters()
    proof = prove_for_tx(s.world(), tx, SWAP_HYP, SolverConfig(), c)
    post = next(g for g in proof.goals if g.query.origin == "postcondition")
    check_golden("swap-post.smt2", post.script)
    assert proof.status in ("Proven", UNKNOWN)
    if proof.status == UNKNOWN:
        assert proof.theorem is None and "Unknown" in proof.report()
    else:
        assert post.verdict.proven and proof.theorem is not None
