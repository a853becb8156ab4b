from .driver import (
    COUNTEREXAMPLE,
    FAILURE,
    PROVEN,
    UNKNOWN,
    SolverConfig,
    Verdict,
    check,
    load_config,
    solver_identity,
)
from .emit import SolverScript, emit_script
from .replay import ReplayResult, model_env, replay

__all__ = [
    "COUNTEREXAMPLE", "FAILURE", "PROVEN", "UNKNOWN", "SolverConfig", "Verdict", "check",
    "load_config", "solver_identity", "SolverScript", "emit_script", "ReplayResult",
    "model_env", "replay",
]
