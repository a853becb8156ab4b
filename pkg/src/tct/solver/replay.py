"""Check a counterexample model against the query with the concrete evaluator."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..terms import MAP, MapVal, Sym, default_domain, eval_term, subst
from ..vcgen import VCQuery
from .emit import GOAL_SKOLEM, _split_goal


@dataclass
class ReplayResult:
    ok: bool
    failures: list[str] = field(default_factory=list)


def model_env(q: VCQuery, model: dict) -> dict:
    """Symbol values with each map carrying the sum the model assigned to it."""
    env = {}
    for name, sort in q.symbols().items():
        if name not in model:
            continue
        v = model[name]
        if sort == MAP:
            s = model.get(f"sum({name})")
            v = v.with_sum(s) if s is not None else v
        env[name] = v
    for name, v in model.items():
        if name.startswith(GOAL_SKOLEM):
            env[name] = v
    return env


def replay(q: VCQuery, model: dict) -> ReplayResult:
    """Ranges and assumptions must all hold and the goal must fail."""
    from ..terms import show

    env = model_env(q, model)
    missing = [n for n in q.symbols() if n not in env and n not in q.defined]
    failures = [f"unbound {n}" for n in missing]
    if failures:
        return ReplayResult(False, failures)
    skolems = [v for k, v in env.items() if k.startswith(GOAL_SKOLEM) and isinstance(v, int)]
    domain = default_domain(env, skolems)
    for t in q.ranges():
        if not eval_term(t, env, domain):
            failures.append(f"range: {show(t)}")
    for a in q.assumptions:
        try:
            ok = eval_term(a.term, env, domain)
        except ZeroDivisionError:
            ok = False
        if not ok:
            failures.append(f"{a.tag}: {show(a.term)}")
    goal, sk = _split_goal(q.goal)
    try:
        holds = eval_term(goal, env, domain)
    except ZeroDivisionError:
        holds = True
    if holds:
        failures.append(f"goal holds: {show(q.goal)}")
    return ReplayResult(not failures, failures)
