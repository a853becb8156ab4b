"""Exception hierarchy shared by every layer of the package."""

from __future__ import annotations


class TCTError(Exception):
    """Base class for all errors raised by this package."""


# -- language frontend -------------------------------------------------------


class LangError(TCTError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line else ""
        super().__init__(f"{where}{message}")


class MiniSolSyntaxError(LangError):
    def __init__(self, message: str, line: int = 0, col: int = 0, expected: tuple[str, ...] = ()):
        self.expected = tuple(expected)
        if expected:
            message = f"{message} (expected {', '.join(expected)})"
        super().__init__(message, line, col)


class DuplicateName(LangError):
    pass


class UnknownType(LangError):
    pass


class NameResolutionError(LangError):
    """A name that does not refer to any parameter, local or storage slot."""


class TypeMismatch(LangError):
    pass


class CyclicInheritance(LangError):
    pass


class StorageRedeclaration(LangError):
    pass


class OverrideWeakensSpec(LangError):
    pass


class HypothesisNotConcrete(LangError):
    def __init__(self, message: str, offending: str):
        self.offending = offending
        super().__init__(f"{message}: {offending}")


# -- interpreter -------------------------------------------------------------


class InterpError(TCTError):
    pass


class UnknownFunction(InterpError):
    pass


class ArityMismatch(InterpError):
    pass


class UnknownAccount(InterpError):
    pass


class HypothesisEvalError(InterpError):
    """A hypothesis could not be evaluated concretely (e.g. division by zero)."""


# -- trace / ssa -------------------------------------------------------------


class TraceError(TCTError):
    pass


class IncompleteTrace(TraceError):
    pass


class RevertedTrace(TraceError):
    pass


class TraceMismatch(TraceError):
    """The trace does not fit the program it claims to come from."""


# -- vc generation -----------------------------------------------------------


class VCError(TCTError):
    pass


class UnboundSymbol(VCError):
    pass


class SortMismatch(VCError):
    pass


class ModifiesViolation(VCError):
    def __init__(self, contract: str, function: str, slot: str):
        self.contract = contract
        self.function = function
        self.slot = slot
        super().__init__(
            f"{contract}.{function} writes '{slot}' which its modifies clause does not declare"
        )


# -- solver ------------------------------------------------------------------


class SolverError(TCTError):
    pass


class UnsupportedExpr(SolverError):
    pass


class SolverFailure(SolverError):
    pass


# -- theorem repository ------------------------------------------------------


class RepoError(TCTError):
    pass


class IncompleteEvidence(RepoError):
    pass


class PersistenceFailure(RepoError):
    pass
