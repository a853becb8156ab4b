"""Command-line entry point.

Exit codes: 0 success, 1 expectation failure (rejected transaction,
unproven theorem, failed scenario expectation), 2 usage error, 3 solver
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from . import __version__
from .errors import LangError, NameResolutionError, SolverFailure, TCTError, UnknownAccount, UnknownFunction
from .interp.events import dump_trace
from .interp.machine import execute
from .protocol import FAILURE, prove_for_tx
from .scenario import ScenarioError, Session, load_theorem_file, run_scenario, scenario_path, theorem_file_text
from .solver import load_config
from .tracepath import extract_straightline
from .vcgen import Hypothesis, build_vc, dump_queries

EXIT_OK, EXIT_EXPECT, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3
DEFAULT_STATE = ".tct-session"


class NotFound(TCTError):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--nodes", type=int, default=None, help="number of validating nodes (default 3)")
    common.add_argument("--solver", help="SMT solver executable (default z3)")
    common.add_argument("--timeout-ms", type=int, help="per-query solver timeout")
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--dump-dir", help="write traces, SSA, VCs, scripts and snapshots here")
    common.add_argument("--debug-asserts", action="store_true", help="check invariants and posts while executing")
    common.add_argument("--source", action="append", default=[], help="extra MiniSol source file")
    common.add_argument("--state", help=f"session directory (default {DEFAULT_STATE})")
    common.add_argument("--setup", help="run this scenario first instead of loading a session")

    p = argparse.ArgumentParser(prog="tct", description="Theorem-carrying transactions over MiniSol contracts.")
    p.add_argument("--version", action="version", version=f"tct {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)

    r = sub.add_parser("run", parents=[common], help="run a scenario file")
    r.add_argument("scenario", help="scenario path, or the name of a bundled scenario")
    r.add_argument("--timestamps", action="store_true", help="include wall-clock timings in the report")

    d = sub.add_parser("deploy", parents=[common], help='deploy: "NAME = Contract(args) from ACCT"')
    d.add_argument("spec")
    d.add_argument("--hyp", default="true")

    s = sub.add_parser("submit", parents=[common], help='submit: "NAME.fn(args) from ACCT"')
    s.add_argument("call")
    s.add_argument("--hyp", help="hypothesis to prove with if no stored theorem applies")

    pr = sub.add_parser("prove", parents=[common], help='prove a theorem for "NAME.fn(args) from ACCT"')
    pr.add_argument("call")
    pr.add_argument("--hyp", required=True)
    pr.add_argument("--out", help="write the theorem file here")
    pr.add_argument("--submit", action="store_true", help="also submit it to the network (workflow C)")

    i = sub.add_parser("inspect", parents=[common], help="dump trace, ssa, vc, repo, state, log or bus")
    i.add_argument("what", choices=["trace", "ssa", "vc", "repo", "state", "log", "bus"])
    i.add_argument("call", nargs="?")
    i.add_argument("--hyp", default="true")
    i.add_argument("--node", type=int, default=0)

    rp = sub.add_parser("repo", parents=[common], help="theorem repository: list, show ID, export PATH, import FILE")
    rp.add_argument("action", choices=["list", "show", "export", "import"])
    rp.add_argument("arg", nargs="?")
    rp.add_argument("--node", type=int, default=0)
    return p


def _config(args):
    cfg = load_config(args.config)
    nodes = 3
    if args.config:
        with open(args.config) as fh:
            nodes = json.load(fh).get("nodes", 3)
    if args.solver:
        cfg.path = args.solver
    if args.timeout_ms is not None:
        cfg.timeout_ms = args.timeout_ms
    if args.nodes is not None:
        nodes = args.nodes
    return cfg, nodes


def _sources(args) -> Optional[list[str]]:
    if not args.source:
        return None
    from .scenario import corpus_sources

    return corpus_sources() + [open(p).read() for p in args.source]


def _session(args, out) -> tuple[Session, Optional[str]]:
    """(session, directory to save it to or None)."""
    cfg, nodes = _config(args)
    kw = dict(config=cfg, timeout_ms=cfg.timeout_ms, debug_asserts=args.debug_asserts, dump_dir=args.dump_dir)
    if args.setup:
        sess = Session(_sources(args), nodes, **kw)
        with open(args.setup) as fh:
            outcome = sess.run_text(fh.read())
        if outcome.failure is not None:
            out.write(outcome.report())
            raise ScenarioError(f"setup scenario failed at line {outcome.failure.line}")
        sess.base_dir = os.path.dirname(os.path.abspath(args.setup))
        return sess, args.state
    state = args.state or DEFAULT_STATE
    if os.path.exists(os.path.join(state, "session.json")):
        return Session.load(state, **kw), state
    return Session(_sources(args), nodes, **kw), state


def main(argv: Optional[list[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return _dispatch(args, out)
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except NotFound as exc:
        print(f"not found: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScenarioError, LangError, NameResolutionError, UnknownAccount, UnknownFunction, OSError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TCTError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


def _dispatch(args, out) -> int:
    if args.verb == "run":
        cfg, nodes = _config(args)
        path = args.scenario
        if not os.path.exists(path) and os.path.exists(scenario_path(path)):
            path = scenario_path(path)
        if not os.path.exists(path):
            raise NotFound(f"scenario {args.scenario}")
        outcome = run_scenario(path, sources=_sources(args), n_nodes=nodes, config=cfg, timeout_ms=cfg.timeout_ms,
                               debug_asserts=args.debug_asserts, dump_dir=args.dump_dir,
                               timestamps=args.timestamps)
        out.write(outcome.report())
        return outcome.exit_code

    sess, state = _session(args, out)

    if args.verb == "deploy":
        text = sess.do_deploy(f'{args.spec} hyp "{args.hyp}"')
        out.write(text + "\n")
        _save(sess, state, args)
        return EXIT_OK if sess.last.kind == "Commit" else EXIT_EXPECT

    if args.verb == "submit":
        call = args.call + (f' hyp "{args.hyp}"' if args.hyp else "")
        text = sess.do_submit(call)
        out.write(text + "\n")
        _save(sess, state, args)
        return EXIT_OK if sess.last.kind == "Commit" else EXIT_EXPECT

    if args.verb == "prove":
        tx, _ = sess.parse_call(args.call)
        tx = sess.net.tx_id(tx)
        proof = prove_for_tx(sess.world(), tx, args.hyp, sess.config, sess.net.issuer_counters,
                             sess.net.timeout_ms, sess.net.step_limit)
        out.write(proof.report())
        if args.dump_dir:
            from .protocol import Outcome

            sess._dump(Outcome("Prove", tx.tx_id, proof=proof))
        if proof.status == FAILURE:
            return EXIT_SOLVER
        if not proof.proven:
            return EXIT_EXPECT
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(theorem_file_text(proof.theorem, proof.bundle))
            out.write(f"wrote {args.out}\n")
        if args.submit:
            o = sess.net.workflow_submit_theorem(proof.theorem, proof.bundle)
            out.write(o.line() + "\n")
            _save(sess, state, args)
            return EXIT_OK if o.kind == "Accepted" else EXIT_EXPECT
        return EXIT_OK

    if args.verb == "inspect":
        return _inspect(sess, args, out)

    if args.verb == "repo":
        repo = _node(sess, args.node).repo
        if args.action == "list":
            for th in repo:
                out.write(f"{th.id} {th.tuple_text()}\n")
            return EXIT_OK
        if args.action == "show":
            for th in repo:
                if args.arg and th.id.startswith(args.arg):
                    out.write(th.to_json())
                    return EXIT_OK
            raise NotFound(f"theorem {args.arg}")
        if args.action == "export":
            if not args.arg:
                raise ScenarioError("repo export needs a path")
            repo.save(args.arg)
            out.write(f"wrote {args.arg}\n")
            return EXIT_OK
        if args.action == "import":
            if not args.arg:
                raise ScenarioError("repo import needs a theorem file")
            theorem, bundle = load_theorem_file(args.arg)
            o = sess.net.workflow_submit_theorem(theorem, bundle)
            out.write(o.line() + "\n")
            _save(sess, state, args)
            return EXIT_OK if o.kind == "Accepted" else EXIT_EXPECT
    raise ScenarioError(f"unknown verb {args.verb}")


def _node(sess: Session, i: int):
    if not 0 <= i < len(sess.net.nodes):
        raise NotFound(f"node {i}")
    return sess.net.nodes[i]


def _inspect(sess: Session, args, out) -> int:
    node = _node(sess, args.node)
    if args.what == "repo":
        for th in node.repo:
            out.write(f"{th.id} {th.tuple_text()}\n")
        return EXIT_OK
    if args.what == "state":
        out.write(node.world.to_json())
        return EXIT_OK
    if args.what == "log":
        out.write(node.log_json())
        return EXIT_OK
    if args.what == "bus":
        out.write(sess.net.bus_json())
        return EXIT_OK
    if not args.call:
        raise ScenarioError(f"inspect {args.what} needs a call")
    try:
        tx, _ = sess.parse_call(args.call)
    except ScenarioError as exc:
        raise NotFound(str(exc)) from None
    result = execute(node.world, tx, sess.net.step_limit, args.debug_asserts)
    if args.what == "trace":
        out.write(dump_trace(result.trace))
        return EXIT_OK
    ssa = extract_straightline(result.trace, node.world.program)
    if args.what == "ssa":
        out.write(ssa.dump())
        return EXIT_OK
    queries = build_vc(ssa, Hypothesis.parse(args.hyp), node.world.program)
    out.write(dump_queries(queries))
    return EXIT_OK


def _save(sess: Session, state: Optional[str], args) -> None:
    if state and not args.setup:
        sess.save(state)


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
