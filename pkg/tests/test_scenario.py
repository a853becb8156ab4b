import os

import pytest

from conftest import DEPLOY_HYP, T1
from tct.scenario import (
    ScenarioError,
    Session,
    load_theorem_file,
    run_scenario,
    scenario_path,
    split_args,
    theorem_file_text,
)

BUNDLED = ["attack1", "attack2", "reuse", "wallet", "pair", "corpus"]


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_scenarios_pass(name):
    out = run_scenario(scenario_path(name))
    assert out.exit_code == 0, out.report()
    assert out.lockstep


def test_empty_scenario():
    out = Session().run_text("# nothing here\n\n")
    assert out.exit_code == 0 and out.report() == ""


def test_failed_expectation_stops_the_run():
    text = "\n".join(["account demo",
                      f'deploy token = MultiVulnToken(1000) from demo hyp "{DEPLOY_HYP}"',
                      "expect-reject NoTheorem",
                      "account never"])
    out = Session().run_text(text)
    assert out.exit_code == 1
    assert out.failure.line == 3
    assert "FAILED at line 3" in out.report()
    assert len(out.results) == 3


def test_unknown_directive():
    with pytest.raises(ScenarioError):
        Session().run_text("frobnicate now")


def test_prove_requires_hypothesis():
    s = Session()
    s.directive("account demo")
    with pytest.raises(ScenarioError):
        s.directive("prove p: new MultiVulnToken(1) from demo")


def test_split_args():
    assert split_args("a, f(b, c), m[d, e]") == ["a", "f(b, c)", "m[d, e]"]
    assert split_args("") == []


def test_session_save_and_load(tmp_path):
    s = Session()
    for d in ["account demo", "account x", f'deploy token = MultiVulnToken(1000) from demo hyp "{DEPLOY_HYP}"',
              f'submit t: token.transferProxy(demo, x, 10, 1) from demo hyp "{T1}"']:
        s.directive(d)
    s.save(str(tmp_path))
    again = Session.load(str(tmp_path))
    assert again.names == s.names
    assert again.net.snapshots() == s.net.snapshots()
    again.net.reset_counters()
    again.directive("submit t2: token.transferProxy(demo, x, 3, 0) from demo")
    assert again.last.kind == "Commit"
    assert again.net.node_counters().solver_calls == 0


def test_theorem_file_round_trip(tmp_path):
    s = Session()
    for d in ["account demo", "account x", f'deploy token = MultiVulnToken(1000) from demo hyp "{DEPLOY_HYP}"',
              f'prove p: token.transferProxy(demo, x, 10, 1) from demo hyp "{T1}"']:
        s.directive(d)
    proof = s.last.proof
    path = tmp_path / "t1.json"
    path.write_text(theorem_file_text(proof.theorem, proof.bundle))
    th, bundle = load_theorem_file(str(path))
    assert th == proof.theorem and bundle.to_obj() == proof.bundle.to_obj()

    fresh = Session(base_dir=str(tmp_path))
    fresh.run_text("\n".join(["account demo", "account x",
                              f'deploy token = MultiVulnToken(1000) from demo hyp "{DEPLOY_HYP}"',
                              "import-theorem t1.json", "expect-accept"]))
    assert fresh.outcome.exit_code == 0, fresh.outcome.report()


def test_dump_dir_writes_artifacts(tmp_path):
    s = Session(dump_dir=str(tmp_path))
    for d in ["account demo", "account x", f'deploy token = MultiVulnToken(1000) from demo hyp "{DEPLOY_HYP}"']:
        s.directive(d)
    names = os.listdir(tmp_path / "proofs")
    assert any(n.endswith(".smt2") for n in names)
    assert any(n.endswith(".ssa") for n in names) and any(n.endswith(".trace") for n in names)


def test_timestamps_annotate_output():
    out = Session(timestamps=True).run_text("account demo")
    assert " ms)" in out.report()
