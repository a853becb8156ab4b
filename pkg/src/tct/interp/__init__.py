"""Deterministic interpreter for MiniSol transactions."""

from .events import dump_trace, trace_complete
from .machine import (
    COMMITTED,
    DEFAULT_STEP_LIMIT,
    REVERTED,
    STEP_LIMIT,
    ConcreteEnv,
    ExecutionResult,
    Transaction,
    deploy,
    eval_concrete,
    eval_hypothesis,
    execute,
)
from .world import Account, StateDelta, WorldState, address_of_name

__all__ = [
    "Account", "COMMITTED", "ConcreteEnv", "DEFAULT_STEP_LIMIT", "ExecutionResult", "REVERTED",
    "STEP_LIMIT", "StateDelta", "Transaction", "WorldState", "address_of_name", "deploy",
    "dump_trace", "eval_concrete", "eval_hypothesis", "execute", "trace_complete",
]
