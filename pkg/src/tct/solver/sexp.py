"""Minimal s-expression reader for solver output."""

from __future__ import annotations

from typing import Union

from ..errors import SolverFailure
from ..terms import MapVal

SExp = Union[str, list]


def tokenize(text: str) -> list[str]:
    out: list[str] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            out.append(ch)
            i += 1
        elif ch == "|":
            j = text.index("|", i + 1)
            out.append(text[i + 1:j])
            i = j + 1
        elif ch == '"':
            j = i + 1
            while j < n:
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        j += 2
                        continue
                    break
                j += 1
            out.append(text[i:j + 1])
            i = j + 1
        elif ch == ";":
            j = text.find("\n", i)
            i = n if j < 0 else j
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()|\";":
                j += 1
            out.append(text[i:j])
            i = j
    return out


def parse(text: str) -> list[SExp]:
    """All top-level s-expressions in ``text``."""
    tokens = tokenize(text)
    pos = 0

    def read() -> SExp:
        nonlocal pos
        if pos >= len(tokens):
            raise SolverFailure("unexpected end of solver output")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            items = []
            while True:
                if pos >= len(tokens):
                    raise SolverFailure("unbalanced solver output")
                if tokens[pos] == ")":
                    pos += 1
                    return items
                items.append(read())
        if tok == ")":
            raise SolverFailure("unbalanced solver output")
        return tok

    out = []
    while pos < len(tokens):
        out.append(read())
    return out


def balanced(text: str) -> bool:
    depth = 0
    seen = False
    for tok in tokenize(text):
        if tok == "(":
            depth += 1
            seen = True
        elif tok == ")":
            depth -= 1
    return seen and depth == 0


def to_value(e: SExp, env: dict | None = None):
    """Convert a model value (integer, boolean or array) to Python."""
    env = env or {}
    if isinstance(e, str):
        if e in env:
            return env[e]
        if e == "true":
            return True
        if e == "false":
            return False
        try:
            return int(e)
        except ValueError:
            raise SolverFailure(f"cannot read model value {e!r}") from None
    if not e:
        raise SolverFailure("empty model value")
    head = e[0]
    if head == "-" and len(e) == 2:
        return -to_value(e[1], env)
    if head == "let":
        scope = dict(env)
        for name, value in e[1]:
            scope[name] = to_value(value, scope)
        return to_value(e[2], scope)
    if isinstance(head, list) and head[:2] == ["as", "const"]:
        return MapVal({}, to_value(e[1], env))
    if head == "store":
        base = to_value(e[1], env)
        return base.set(to_value(e[2], env), to_value(e[3], env))
    if head == "lambda":
        (var, _sort), = e[1]
        return _lambda_map(var, e[2], env)
    raise SolverFailure(f"unsupported model value: {e!r}")


def _lambda_map(var: str, body: SExp, env: dict) -> MapVal:
    entries: dict[int, int] = {}
    while isinstance(body, list) and body and body[0] == "ite":
        cond, then, rest = body[1], body[2], body[3]
        if not (isinstance(cond, list) and cond[0] == "=" and var in cond[1:]):
            raise SolverFailure(f"unsupported array model condition: {cond!r}")
        key = cond[2] if cond[1] == var else cond[1]
        entries.setdefault(to_value(key, env), to_value(then, env))
        body = rest
    default = to_value(body, env)
    return MapVal(entries, default) if not entries else _with_default(entries, default)


def _with_default(entries: dict, default: int) -> MapVal:
    m = MapVal({}, default)
    for k, v in entries.items():
        m = m.set(k, v)
    return m
