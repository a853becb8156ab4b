import stat

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DEPLOY_HYP, T1
from tct.errors import SolverFailure
from tct.interp.machine import execute
from tct.scenario import Session
from tct.solver import (
    COUNTEREXAMPLE,
    PROVEN,
    UNKNOWN,
    SolverConfig,
    check,
    emit_script,
    load_config,
    replay,
    solver_identity,
)
from tct.solver import sexp
from tct.terms import TRUE, MapVal
from tct.tracepath import extract_straightline
from tct.vcgen import TRUE_HYPOTHESIS, Hypothesis, VCQuery, build_vc


@pytest.fixture(scope="module")
def sess():
    s = Session()
    for d in ["account demo", "account x", "account attacker2",
              f'deploy token = MultiVulnToken(1000) from demo hyp "{DEPLOY_HYP}"',
              "deploy attack = ReentrancyAttack(token, attacker2) from attacker2",
              f'submit fund: token.transferProxy(demo, attack, 5, 0) from demo hyp "{T1}"']:
        s.directive(d)
    return s


def queries(s, call, hyp=TRUE_HYPOTHESIS):
    tx, _ = s.parse_call(call)
    ssa = extract_straightline(execute(s.world(), tx).trace, s.world().program)
    return build_vc(ssa, hyp, s.world().program)


def test_range_hypothesis_scripts_are_unsat(sess):
    for q in queries(sess, "token.transferProxy(demo, x, 10, 1) from demo", Hypothesis.parse(T1)):
        assert check(emit_script(q)).kind == PROVEN


def test_tautology_is_proven():
    q = VCQuery(1, "inline-assert", "true", TRUE, [], [])
    script = emit_script(q)
    assert "goal" in script.names
    assert check(script).kind == PROVEN


def test_overflow_counterexample(sess):
    q = queries(sess, "token.transferProxy(demo, x, 2^255 + 1, 2^255) from demo")[0]
    v = check(emit_script(q))
    assert v.kind == COUNTEREXAMPLE
    fee, value = v.model["_fee"], v.model["_value"]
    assert (fee + value) % 2**256 < value  # add(_fee, _value) wrapped
    assert replay(q, v.model).ok


def test_deployment_is_proven(sess):
    for q in queries(sess, "new MultiVulnToken(1000) from demo", Hypothesis.parse(DEPLOY_HYP)):
        assert check(emit_script(q)).kind == PROVEN


def test_reentrant_sum_goal_refuted(sess):
    q = queries(sess, "attack.attack() from attacker2")[0]
    assert q.label.endswith("sum(balances) == totalSupply")
    v = check(emit_script(q))
    assert v.kind == COUNTEREXAMPLE
    assert v.model["bal_1"] > 0
    assert replay(q, v.model).ok


def test_timeout_zero_is_unknown(sess):
    q = queries(sess, "token.transferProxy(demo, x, 10, 1) from demo")[0]
    v = check(emit_script(q), timeout_ms=0)
    assert v.kind == UNKNOWN and v.reason == "timeout"


def test_script_header(sess):
    q = queries(sess, "token.transferProxy(demo, x, 10, 1) from demo", Hypothesis.parse(T1))[0]
    s = emit_script(q)
    assert s.logic == "AUFLIA" and not s.nonlinear
    assert "(set-option :random-seed 0)" in s.text
    assert "(set-logic AUFLIA)" in s.text
    assert "hyp_0" in s.names and "goal" in s.names
    assert sexp.balanced(s.text)
    assert emit_script(q).text == s.text  # deterministic


def test_nonlinear_logic():
    from tct.terms import Sym, app, eq
    from tct.tracepath import DefineSymbol

    x, y = Sym("x"), Sym("y")
    decls = [DefineSymbol("x", "int", "uint256"), DefineSymbol("y", "int", "uint256")]
    q = VCQuery(1, "inline-assert", "nl", eq(app("*", x, y), app("*", y, x)), [], decls)
    s = emit_script(q)
    assert s.nonlinear and s.logic == "AUFNIA"
    assert check(s).kind == PROVEN


def _fake_solver(tmp_path, body):
    path = tmp_path / "fake-solver"
    path.write_text("#!/bin/sh\n" + body + "\n")
    path.chmod(path.stat().st_mode | stat.S_IEXEC)
    return str(path)


def test_garbage_output_is_solver_failure(tmp_path):
    cfg = SolverConfig(path=_fake_solver(tmp_path, "echo banana; cat > /dev/null"), args=[])
    q = VCQuery(1, "inline-assert", "true", TRUE, [], [])
    with pytest.raises(SolverFailure):
        check(emit_script(q), config=cfg)


def test_early_exit_is_solver_failure(tmp_path):
    cfg = SolverConfig(path=_fake_solver(tmp_path, "exit 1"), args=[])
    with pytest.raises(SolverFailure):
        check(emit_script(VCQuery(1, "inline-assert", "t", TRUE, [], [])), config=cfg)


def test_missing_solver_is_failure():
    with pytest.raises(SolverFailure):
        check(emit_script(VCQuery(1, "inline-assert", "t", TRUE, [], [])),
              config=SolverConfig(path="/nonexistent/solver"))


def test_unknown_answer(tmp_path):
    cfg = SolverConfig(path=_fake_solver(tmp_path, 'read x; echo unknown; echo "(:reason-unknown \\"incomplete\\")"; cat > /dev/null'), args=[])
    v = check(emit_script(VCQuery(1, "inline-assert", "t", TRUE, [], [])), config=cfg)
    assert v.kind == UNKNOWN and v.reason == "incomplete"


def test_load_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"solver": {"path": "mysolver", "linear_timeout_ms": 123}}')
    cfg = load_config(str(p), env={})
    assert cfg.path == "mysolver" and cfg.linear_timeout_ms == 123 and cfg.timeout_ms is None
    cfg = load_config(str(p), env={"TCT_SOLVER": "other", "TCT_TIMEOUT_MS": "9"})
    assert cfg.path == "other" and cfg.timeout_ms == 9


def test_solver_identity():
    assert "Z3" in solver_identity("z3")


# -- s-expressions


def test_sexp_values():
    assert sexp.to_value(sexp.parse("(- 5)")[0]) == -5
    m = sexp.to_value(sexp.parse("(store ((as const (Array Int Int)) 0) 3 7)")[0])
    assert isinstance(m, MapVal) and m.get(3) == 7 and m.get(4) == 0
    lam = sexp.to_value(sexp.parse("(lambda ((x!1 Int)) (ite (= x!1 2) 9 (ite (= x!1 4) 1 0)))")[0])
    assert lam.get(2) == 9 and lam.get(4) == 1 and lam.default == 0
    assert sexp.to_value(sexp.parse("(let ((a!1 3)) (- a!1))")[0]) == -3


def test_sexp_quoted_symbols_and_strings():
    parsed = sexp.parse('(|a b| "x ; y") ; comment\n(c)')
    assert parsed[0][0] == "a b" and len(parsed) == 2
    assert not sexp.balanced("((a)")


@settings(max_examples=200, deadline=None)
@given(st.dictionaries(st.integers(0, 2**160 - 1), st.integers(-2**256, 2**256), max_size=6),
       st.integers(-5, 5))
def test_sexp_map_round_trip(entries, default):
    text = f"((as const (Array Int Int)) {_lit(default)})"
    for k, v in entries.items():
        text = f"(store {text} {k} {_lit(v)})"
    m = sexp.to_value(sexp.parse(text)[0])
    for k, v in entries.items():
        assert m.get(k) == v
    assert m.default == default


def _lit(v):
    return str(v) if v >= 0 else f"(- {-v})"

