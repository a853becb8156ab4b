"""Canonical MiniSol pretty-printer.

``parse_source(print_unit(u))`` yields a unit structurally equal to ``u``;
code hashes are computed over this output, so it must stay deterministic.
"""

from __future__ import annotations

from . import ast as A

PREC = {
    "==>": 1, "||": 2, "&&": 3, "==": 4, "!=": 4,
    "<": 5, "<=": 5, ">": 5, ">=": 5,
    "+": 6, "-": 6, "*": 7, "/": 7, "%": 7, "^": 8,
}
RIGHT_ASSOC = {"==>", "^"}
UNARY_PREC = 9
FORALL_PREC = 0
ATOM_PREC = 10


def _prec(e: A.Expr) -> int:
    if isinstance(e, A.BinOp):
        return PREC[e.op]
    if isinstance(e, A.Not):
        return UNARY_PREC
    if isinstance(e, A.Forall):
        return FORALL_PREC
    return ATOM_PREC


def print_expr(e: A.Expr) -> str:
    if isinstance(e, A.IntLit):
        return hex(e.value) if e.hex else str(e.value)
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.Name):
        return e.id
    if isinstance(e, A.MsgSender):
        return "msg.sender"
    if isinstance(e, A.Index):
        return f"{e.map}[{print_expr(e.index)}]"
    if isinstance(e, A.Sum):
        return f"sum({e.map})"
    if isinstance(e, A.Old):
        return f"old({print_expr(e.expr)})"
    if isinstance(e, A.Forall):
        return f"forall {e.var}: address :: {print_expr(e.body)}"
    if isinstance(e, A.Not):
        inner = print_expr(e.operand)
        if _prec(e.operand) < UNARY_PREC:
            inner = f"({inner})"
        return f"!{inner}"
    if isinstance(e, A.BinOp):
        p = PREC[e.op]
        left, right = print_expr(e.left), print_expr(e.right)
        lp, rp = _prec(e.left), _prec(e.right)
        if e.op in RIGHT_ASSOC:
            wrap_left, wrap_right = lp <= p, rp < p
        else:
            wrap_left, wrap_right = lp < p, rp <= p
        if wrap_left:
            left = f"({left})"
        if wrap_right:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an expression: {e!r}")


def _print_block(body: list[A.Stmt], indent: int, out: list[str]) -> None:
    for s in body:
        _print_stmt(s, indent, out)


def _print_stmt(s: A.Stmt, indent: int, out: list[str]) -> None:
    pad = "    " * indent
    if isinstance(s, A.LocalDecl):
        out.append(f"{pad}{s.type} {s.name} = {print_expr(s.value)};")
    elif isinstance(s, A.Assign):
        out.append(f"{pad}{s.target} = {print_expr(s.value)};")
    elif isinstance(s, A.MapAssign):
        out.append(f"{pad}{s.map}[{print_expr(s.index)}] = {print_expr(s.value)};")
    elif isinstance(s, A.Require):
        out.append(f"{pad}require({print_expr(s.cond)});")
    elif isinstance(s, A.Assert):
        out.append(f"{pad}assert({print_expr(s.cond)});")
    elif isinstance(s, A.Return):
        out.append(f"{pad}return;" if s.value is None else f"{pad}return {print_expr(s.value)};")
    elif isinstance(s, A.Call):
        target = print_expr(s.target)
        if _prec(s.target) < ATOM_PREC:
            target = f"({target})"
        args = ", ".join(print_expr(a) for a in s.args)
        out.append(f"{pad}{target}.{s.func}({args});")
    elif isinstance(s, A.If):
        out.append(f"{pad}if ({print_expr(s.cond)}) {{")
        _print_block(s.then, indent + 1, out)
        if s.orelse:
            out.append(f"{pad}}} else {{")
            _print_block(s.orelse, indent + 1, out)
        out.append(f"{pad}}}")
    else:
        raise TypeError(f"not a statement: {s!r}")


def _print_modifies(entries: list[A.ModifiesEntry]) -> str:
    parts = []
    for m in entries:
        parts.append(m.slot if m.index is None else f"{m.slot}[{print_expr(m.index)}]")
    return ("#modifies " + ", ".join(parts)) if parts else "#modifies"


def _print_function(f: A.FunctionDef, out: list[str]) -> None:
    for e in f.pre:
        out.append(f"    #pre {print_expr(e)}")
    for e in f.post:
        out.append(f"    #post {print_expr(e)}")
    if f.modifies is not None:
        out.append("    " + _print_modifies(f.modifies))
    params = ", ".join(f"{p.type} {p.name}" for p in f.params)
    head = f"constructor({params})" if f.is_constructor else f"function {f.name}({params})"
    if f.returns is not None:
        head += f" returns ({f.returns})"
    out.append(f"    {head} {{")
    _print_block(f.body, 2, out)
    out.append("    }")


def print_contract(c: A.ContractDef) -> str:
    out: list[str] = []
    for inv in c.invariants:
        out.append(f"#invariant {print_expr(inv)}")
    head = f"contract {c.name}"
    if c.bases:
        head += " is " + ", ".join(c.bases)
    out.append(head + " {")
    for d in c.storage:
        out.append(f"    {d.type} {d.name};")
    if c.constructor is not None:
        _print_function(c.constructor, out)
    for f in c.functions:
        _print_function(f, out)
    out.append("}")
    return "\n".join(out) + "\n"


def print_unit(u: A.SourceUnit) -> str:
    return "\n".join(print_contract(c) for c in u.contracts)
