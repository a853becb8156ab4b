import os

import pytest

from tct.lang.resolve import load_program
from tct.scenario import Session, corpus_sources

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")

T1 = ("0 <= totalSupply && totalSupply < 2^255 && 0 <= _value && _value < 2^255 "
      "&& 0 <= _fee && _fee < 2^255")
DEPLOY_HYP = "0 <= initialSupply && initialSupply < 2^255"
SWAP_HYP = ("feeNum == 0 && feeDen == 1 && 0 < x && x < 2^64 && y < 2^64 && dx < 2^64 "
            "&& (x * y) % (x + dx) == 0")


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n, title): one of the ten acceptance criteria")
    config._acceptance = {}


@pytest.fixture(scope="session")
def program():
    return load_program(corpus_sources())


@pytest.fixture
def token_session():
    """A 3-node session with MultiVulnToken(1000) deployed by demo."""
    s = Session()
    s.directive("account demo")
    s.directive("account alice")
    s.directive(f'deploy token = MultiVulnToken(1000) from demo hyp "{DEPLOY_HYP}"')
    assert s.last.kind == "Commit"
    return s


def golden_path(name: str) -> str:
    return os.path.join(GOLDEN, name)


def check_golden(name: str, text: str) -> None:
    """Compare against tests/golden/NAME; TCT_REGEN_GOLDEN=1 rewrites it."""
    path = golden_path(name)
    if os.environ.get("TCT_REGEN_GOLDEN") == "1":
        os.makedirs(GOLDEN, exist_ok=True)
        with open(path, "w") as fh:
            fh.write(text)
    assert os.path.exists(path), f"missing golden file {name}; run with TCT_REGEN_GOLDEN=1"
    with open(path) as fh:
        assert text == fh.read(), f"output differs from golden file {name}"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    n, title = marker.args
    table = item.config._acceptance
    prev = table.get(n, (title, True))
    if rep.when == "call" or rep.failed:
        table[n] = (title, prev[1] and rep.passed)
    elif n not in table:
        table[n] = prev


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    table = getattr(config, "_acceptance", {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(table):
        title, ok = table[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}")
