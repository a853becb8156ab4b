"""Run an external SMT solver over standard input/output."""

from __future__ import annotations

import json
import os
import selectors
import shutil
import subprocess
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Union

from ..errors import SolverFailure
from . import sexp
from .emit import SolverScript

DEFAULT_TIMEOUT_MS = 5000
NONLINEAR_TIMEOUT_MS = 30000
GRACE_MS = 2000

PROVEN, COUNTEREXAMPLE, UNKNOWN, FAILURE = "Proven", "Counterexample", "Unknown", "SolverFailure"


@dataclass
class SolverConfig:
    path: str = "z3"
    args: list = field(default_factory=lambda: ["-in", "-smt2", "-t:{timeout_ms}"])
    timeout_ms: Optional[int] = None  # None: pick by logic
    nonlinear_timeout_ms: int = NONLINEAR_TIMEOUT_MS
    linear_timeout_ms: int = DEFAULT_TIMEOUT_MS

    def timeout_for(self, script: SolverScript) -> int:
        if self.timeout_ms is not None:
            return self.timeout_ms
        return self.nonlinear_timeout_ms if script.nonlinear else self.linear_timeout_ms

    def command(self, timeout_ms: int) -> list[str]:
        exe = shutil.which(self.path) or self.path
        return [exe] + [a.replace("{timeout_ms}", str(timeout_ms)) for a in self.args]


def load_config(path: Optional[str] = None, env: Optional[dict] = None) -> SolverConfig:
    """Config file (JSON) first, then TCT_SOLVER / TCT_TIMEOUT_MS overrides."""
    env = os.environ if env is None else env
    cfg = SolverConfig()
    if path:
        with open(path) as fh:
            data = json.load(fh)
        solver = data.get("solver", data)
        for key in ("path", "args", "timeout_ms", "linear_timeout_ms", "nonlinear_timeout_ms"):
            if key in solver:
                setattr(cfg, key, solver[key])
    if env.get("TCT_SOLVER"):
        cfg.path = env["TCT_SOLVER"]
    if env.get("TCT_TIMEOUT_MS"):
        cfg.timeout_ms = int(env["TCT_TIMEOUT_MS"])
    return cfg


@dataclass
class Verdict:
    kind: str
    model: dict = field(default_factory=dict)  # label -> int | bool | MapVal
    reason: str = ""
    query: str = ""
    elapsed_ms: int = 0

    @property
    def proven(self) -> bool:
        return self.kind == PROVEN

    def bindings(self) -> list[str]:
        from ..terms import MapVal

        out = []
        for k in sorted(self.model):
            v = self.model[k]
            if isinstance(v, MapVal):
                entries = ", ".join(f"{hex(i)}: {x}" for i, x in sorted(v.entries.items()))
                v = f"{{{entries}}} default {v.default}"
            out.append(f"{k} = {v}")
        return out


@lru_cache(maxsize=8)
def solver_identity(path: str = "z3") -> str:
    exe = shutil.which(path) or path
    try:
        out = subprocess.run([exe, "--version"], capture_output=True, text=True, timeout=10)
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise SolverFailure(f"cannot run solver {path!r}: {exc}") from None
    text = (out.stdout or out.stderr).strip().splitlines()
    return text[0] if text else path


class _Session:
    """Line-oriented conversation with a solver process under a deadline."""

    def __init__(self, cmd: list[str], deadline: float):
        try:
            self.proc = subprocess.Popen(cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                         stderr=subprocess.PIPE)
        except OSError as exc:
            raise SolverFailure(f"cannot start solver: {exc}") from None
        self.deadline = deadline
        self.buf = b""
        self.sel = selectors.DefaultSelector()
        self.sel.register(self.proc.stdout, selectors.EVENT_READ)

    def send(self, text: str) -> None:
        try:
            self.proc.stdin.write(text.encode())
            self.proc.stdin.flush()
        except BrokenPipeError:
            pass

    def _fill(self) -> bool:
        left = self.deadline - time.monotonic()
        if left <= 0 or not self.sel.select(left):
            return False
        chunk = os.read(self.proc.stdout.fileno(), 65536)
        if not chunk:
            raise EOFError
        self.buf += chunk
        return True

    def read_line(self) -> Optional[str]:
        while b"\n" not in self.buf:
            if not self._fill():
                return None
        line, _, self.buf = self.buf.partition(b"\n")
        return line.decode().strip()

    def read_sexp(self) -> Optional[str]:
        while not sexp.balanced(self.buf.decode()):
            if not self._fill():
                return None
        text, self.buf = self.buf.decode(), b""
        return text

    def close(self) -> str:
        try:
            self.send("(exit)\n")
            self.proc.stdin.close()
        except (BrokenPipeError, ValueError):
            pass
        try:
            self.proc.wait(timeout=1)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()
        err = self.proc.stderr.read().decode()
        self.sel.close()
        return err


def check(script: SolverScript, timeout_ms: Optional[int] = None,
          config: Optional[SolverConfig] = None) -> Verdict:
    """unsat -> Proven, sat -> Counterexample with model, timeout -> Unknown."""
    config = config or SolverConfig()
    if timeout_ms is None:
        timeout_ms = config.timeout_for(script)
    if timeout_ms <= 0:
        return Verdict(UNKNOWN, reason="timeout", query=script.query)
    start = time.monotonic()
    session = _Session(config.command(timeout_ms), start + (timeout_ms + GRACE_MS) / 1000)

    def elapsed() -> int:
        return int((time.monotonic() - start) * 1000)

    try:
        session.send(script.text)
        line = session.read_line()
        while line == "":
            line = session.read_line()
        if line is None:
            session.proc.kill()
            return Verdict(UNKNOWN, reason="timeout", query=script.query, elapsed_ms=elapsed())
        if line == "unsat":
            return Verdict(PROVEN, query=script.query, elapsed_ms=elapsed())
        if line == "unknown" or line == "timeout":
            session.send("(get-info :reason-unknown)\n")
            info = session.read_sexp() or ""
            return Verdict(UNKNOWN, reason=_reason(info), query=script.query, elapsed_ms=elapsed())
        if line == "sat":
            model = read_model(session, script)
            return Verdict(COUNTEREXAMPLE, model=model, query=script.query, elapsed_ms=elapsed())
        rest = session.close()
        raise SolverFailure(f"unexpected solver output: {line} {rest}".strip())
    except EOFError:
        raise SolverFailure(f"solver exited early: {session.close().strip()}") from None
    finally:
        if session.proc.poll() is None:
            session.close()


def _reason(info: str) -> str:
    try:
        parsed = sexp.parse(info)
        return parsed[0][1].strip('"')
    except Exception:
        return info.strip() or "unknown"


def read_model(session: _Session, script: SolverScript) -> dict:
    if not script.value_terms:
        return {}
    terms = " ".join(t for _, t in script.value_terms)
    session.send(f"(get-value ({terms}))\n")
    text = session.read_sexp()
    if text is None:
        raise SolverFailure("solver did not return a model in time")
    parsed = sexp.parse(text)
    if not parsed or not isinstance(parsed[0], list) or (parsed[0] and parsed[0][0] == "error"):
        raise SolverFailure(f"unparsable model: {text.strip()}")
    pairs = parsed[0]
    if len(pairs) != len(script.value_terms):
        raise SolverFailure("model does not bind every requested term")
    return {label: sexp.to_value(pair[1]) for (label, _), pair in zip(script.value_terms, pairs)}
