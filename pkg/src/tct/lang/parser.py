"""Recursive-descent parser for MiniSol (grammar in docs/grammar.ebnf)."""

from __future__ import annotations

import copy
import hashlib

from ..errors import DuplicateName, MiniSolSyntaxError, UnknownType
from . import ast as A
from .lexer import Token, tokenize

TYPE_KEYWORDS = ("uint256", "address", "bool", "map")


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def next(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def at(self, kind: str, text: str | None = None) -> bool:
        return self.tok.is_(kind, text)

    def at_p(self, *texts: str) -> bool:
        return self.tok.kind == "PUNCT" and self.tok.text in texts

    def accept_p(self, text: str) -> bool:
        if self.at("PUNCT", text):
            self.pos += 1
            return True
        return False

    def expect_p(self, text: str) -> Token:
        if not self.at("PUNCT", text):
            self.fail(f"unexpected {self.describe(self.tok)}", repr(text))
        return self.next()

    def expect_kw(self, text: str) -> Token:
        if not self.at("KW", text):
            self.fail(f"unexpected {self.describe(self.tok)}", repr(text))
        return self.next()

    def expect_ident(self) -> Token:
        if not self.at("IDENT"):
            self.fail(f"unexpected {self.describe(self.tok)}", "identifier")
        return self.next()

    def fail(self, message: str, *expected: str):
        raise MiniSolSyntaxError(message, self.tok.line, self.tok.col, expected)

    @staticmethod
    def describe(t: Token) -> str:
        if t.kind == "EOF":
            return "end of input"
        if t.kind == "EOL":
            return "end of annotation line"
        return repr(t.text)

    def loc(self) -> A.Loc:
        return A.Loc(self.tok.line, self.tok.col)

    # -- top level

    def parse_unit(self) -> list[A.ContractDef]:
        contracts: list[A.ContractDef] = []
        seen: set[str] = set()
        while not self.at("EOF"):
            c = self.parse_contract()
            if c.name in seen:
                raise DuplicateName(f"contract {c.name!r} declared twice", c.loc.line, c.loc.col)
            seen.add(c.name)
            contracts.append(c)
        return contracts

    def parse_annotations(self) -> list[tuple[Token, object]]:
        out = []
        while self.at("ANNOT"):
            head = self.next()
            if head.text == "#modifies":
                entries: list[A.ModifiesEntry] = []
                if not self.at("EOL"):
                    entries.append(self.parse_modifies_entry())
                    while self.accept_p(","):
                        entries.append(self.parse_modifies_entry())
                out.append((head, entries))
            else:
                out.append((head, self.parse_prop()))
            if not self.at("EOL"):
                self.fail(f"unexpected {self.describe(self.tok)}", "end of annotation line")
            self.next()
        return out

    def parse_modifies_entry(self) -> A.ModifiesEntry:
        name = self.expect_ident().text
        index = None
        if self.accept_p("["):
            index = self.parse_expr()
            self.expect_p("]")
        return A.ModifiesEntry(name, index)

    def parse_contract(self) -> A.ContractDef:
        annots = self.parse_annotations()
        invariants = []
        for head, value in annots:
            if head.text != "#invariant":
                raise MiniSolSyntaxError(f"{head.text} is not allowed before a contract", head.line, head.col)
            invariants.append(value)
        loc = self.loc()
        self.expect_kw("contract")
        name = self.expect_ident().text
        bases: list[str] = []
        if self.at("KW", "is"):
            self.next()
            bases.append(self.expect_ident().text)
            while self.accept_p(","):
                bases.append(self.expect_ident().text)
        self.expect_p("{")
        storage: list[A.StorageDecl] = []
        functions: list[A.FunctionDef] = []
        constructor = None
        names: set[str] = set()

        def claim(n: str, where: A.Loc) -> None:
            if n in names:
                raise DuplicateName(f"{n!r} declared twice in contract {name!r}", where.line, where.col)
            names.add(n)

        while not self.at_p("}"):
            if self.at("EOF"):
                self.fail("unexpected end of input", "'}'")
            annots = self.parse_annotations()
            if self.at("KW", "function") or self.at("KW", "constructor"):
                fn = self.parse_function(annots)
                if fn.is_constructor:
                    if constructor is not None:
                        raise DuplicateName(f"second constructor in {name!r}", fn.loc.line, fn.loc.col)
                    constructor = fn
                else:
                    claim(fn.name, fn.loc)
                    functions.append(fn)
                continue
            if annots:
                head = annots[0][0]
                raise MiniSolSyntaxError("annotation must precede a function", head.line, head.col)
            where = self.loc()
            ty = self.parse_type()
            ident = self.expect_ident().text
            self.expect_p(";")
            claim(ident, where)
            storage.append(A.StorageDecl(ty, ident, loc=where))
        self.expect_p("}")
        return A.ContractDef(name, bases, storage, functions, constructor, invariants, loc=loc)

    def parse_type(self) -> A.TypeTag:
        t = self.tok
        if t.kind == "IDENT":
            raise UnknownType(f"unknown type {t.text!r}", t.line, t.col)
        if t.kind != "KW" or t.text not in TYPE_KEYWORDS:
            self.fail(f"unexpected {self.describe(t)}", "type")
        self.next()
        if t.text == "map":
            self.expect_p("(")
            self.expect_kw("address")
            self.expect_p("=>")
            self.expect_kw("uint256")
            self.expect_p(")")
            return A.MAP
        return A.SCALAR_TYPES[t.text]

    def parse_function(self, annots) -> A.FunctionDef:
        loc = self.loc()
        is_ctor = self.at("KW", "constructor")
        self.next()
        name = "constructor" if is_ctor else self.expect_ident().text
        self.expect_p("(")
        params: list[A.Param] = []
        if not self.at_p(")"):
            params.append(self.parse_param())
            while self.accept_p(","):
                params.append(self.parse_param())
        self.expect_p(")")
        seen = set()
        for p in params:
            if p.name in seen:
                raise DuplicateName(f"parameter {p.name!r} declared twice", loc.line, loc.col)
            seen.add(p.name)
        returns = None
        if self.at("KW", "returns"):
            self.next()
            self.expect_p("(")
            returns = self.parse_type()
            if returns.is_map:
                self.fail("functions cannot return maps")
            self.expect_p(")")
        body = self.parse_block()
        pre, post, modifies = [], [], None
        for head, value in annots:
            if head.text == "#pre":
                pre.append(value)
            elif head.text == "#post":
                post.append(value)
            elif head.text == "#modifies":
                modifies = (modifies or []) + value
            else:
                raise MiniSolSyntaxError(f"{head.text} is not allowed before a function", head.line, head.col)
        return A.FunctionDef(name, params, body, returns, pre, post, modifies, is_ctor, loc=loc)

    def parse_param(self) -> A.Param:
        ty = self.parse_type()
        if ty.is_map:
            self.fail("maps are storage-only")
        return A.Param(ty, self.expect_ident().text)

    # -- statements

    def parse_block(self) -> list[A.Stmt]:
        self.expect_p("{")
        body = []
        while not self.at_p("}"):
            if self.at("EOF"):
                self.fail("unexpected end of input", "'}'")
            body.append(self.parse_stmt())
        self.expect_p("}")
        return body

    def parse_stmt(self) -> A.Stmt:
        loc = self.loc()
        t = self.tok
        if t.kind == "KW" and t.text in TYPE_KEYWORDS:
            ty = self.parse_type()
            if ty.is_map:
                raise MiniSolSyntaxError("maps are storage-only", loc.line, loc.col)
            name = self.expect_ident().text
            self.expect_p("=")
            value = self.parse_expr()
            self.expect_p(";")
            return A.LocalDecl(ty, name, value, loc=loc)
        if t.kind == "IDENT" and self.peek().kind == "IDENT":
            raise UnknownType(f"unknown type {t.text!r}", t.line, t.col)
        if t.is_("KW", "require") or t.is_("KW", "assert"):
            self.next()
            self.expect_p("(")
            cond = self.parse_expr()
            self.expect_p(")")
            self.expect_p(";")
            return (A.Require if t.text == "require" else A.Assert)(cond, loc=loc)
        if t.is_("KW", "if"):
            return self.parse_if()
        if t.is_("KW", "return"):
            self.next()
            value = None if self.at_p(";") else self.parse_expr()
            self.expect_p(";")
            return A.Return(value, loc=loc)

        target = self.parse_postfix()
        if self.at_p("."):
            self.next()
            func = self.expect_ident().text
            self.expect_p("(")
            args = []
            if not self.at_p(")"):
                args.append(self.parse_expr())
                while self.accept_p(","):
                    args.append(self.parse_expr())
            self.expect_p(")")
            self.expect_p(";")
            return A.Call(target, func, args, loc=loc)
        if self.at_p("=", "+=", "-="):
            op = self.next().text
            value = self.parse_expr()
            self.expect_p(";")
            if isinstance(target, A.Name):
                if op != "=":
                    value = A.BinOp(op[0], A.Name(target.id, loc=target.loc), value, loc=loc)
                return A.Assign(target.id, value, loc=loc)
            if isinstance(target, A.Index):
                if op != "=":
                    read = A.Index(target.map, copy.deepcopy(target.index), loc=target.loc)
                    value = A.BinOp(op[0], read, value, loc=loc)
                return A.MapAssign(target.map, target.index, value, loc=loc)
            raise MiniSolSyntaxError("invalid assignment target", loc.line, loc.col)
        self.fail(f"unexpected {self.describe(self.tok)}", "'='", "'.'")

    def parse_if(self) -> A.If:
        loc = self.loc()
        self.expect_kw("if")
        self.expect_p("(")
        cond = self.parse_expr()
        self.expect_p(")")
        then = self.parse_block()
        orelse: list[A.Stmt] = []
        if self.at("KW", "else"):
            self.next()
            orelse = [self.parse_if()] if self.at("KW", "if") else self.parse_block()
        return A.If(cond, then, orelse, loc=loc)

    # -- expressions

    def parse_expr(self) -> A.Expr:
        return self.parse_prop()

    def parse_prop(self) -> A.Expr:
        if self.at("KW", "forall"):
            loc = self.loc()
            self.next()
            var = self.expect_ident().text
            self.expect_p(":")
            self.expect_kw("address")
            self.expect_p("::")
            return A.Forall(var, self.parse_prop(), loc=loc)
        return self.parse_implies()

    def parse_implies(self) -> A.Expr:
        left = self.parse_or()
        if self.at_p("==>"):
            loc = self.loc()
            self.next()
            right = self.parse_prop()
            return A.BinOp("==>", left, right, loc=loc)
        return left

    def _left_assoc(self, ops: tuple[str, ...], sub) -> A.Expr:
        left = sub()
        while self.at_p(*ops):
            loc = self.loc()
            op = self.next().text
            left = A.BinOp(op, left, sub(), loc=loc)
        return left

    def parse_or(self):
        return self._left_assoc(("||",), self.parse_and)

    def parse_and(self):
        return self._left_assoc(("&&",), self.parse_eq)

    def parse_eq(self):
        return self._left_assoc(("==", "!="), self.parse_rel)

    def parse_rel(self):
        return self._left_assoc(("<", "<=", ">", ">="), self.parse_add)

    def parse_add(self):
        return self._left_assoc(("+", "-"), self.parse_mul)

    def parse_mul(self):
        return self._left_assoc(("*", "/", "%"), self.parse_pow)

    def parse_pow(self) -> A.Expr:
        base = self.parse_unary()
        if self.at_p("^"):
            loc = self.loc()
            self.next()
            return A.BinOp("^", base, self.parse_pow(), loc=loc)
        return base

    def parse_unary(self) -> A.Expr:
        if self.at_p("!"):
            loc = self.loc()
            self.next()
            return A.Not(self.parse_unary(), loc=loc)
        return self.parse_postfix()

    def parse_postfix(self) -> A.Expr:
        loc = self.loc()
        t = self.tok
        if t.kind == "INT":
            self.next()
            is_hex = t.text.lower().startswith("0x")
            return A.IntLit(int(t.text, 16 if is_hex else 10), is_hex, loc=loc)
        if t.is_("KW", "true") or t.is_("KW", "false"):
            self.next()
            return A.BoolLit(t.text == "true", loc=loc)
        if t.is_("KW", "msg"):
            self.next()
            self.expect_p(".")
            if not self.at("IDENT", "sender"):
                self.fail(f"unexpected {self.describe(self.tok)}", "'sender'")
            self.next()
            return A.MsgSender(loc=loc)
        if t.is_("KW", "sum"):
            self.next()
            self.expect_p("(")
            name = self.expect_ident().text
            self.expect_p(")")
            return A.Sum(name, loc=loc)
        if t.is_("KW", "old"):
            self.next()
            self.expect_p("(")
            inner = self.parse_prop()
            self.expect_p(")")
            return A.Old(inner, loc=loc)
        if t.kind == "IDENT":
            self.next()
            if self.accept_p("["):
                index = self.parse_expr()
                self.expect_p("]")
                return A.Index(t.text, index, loc=loc)
            return A.Name(t.text, loc=loc)
        if t.is_("PUNCT", "("):
            self.next()
            inner = self.parse_prop()
            self.expect_p(")")
            return inner
        self.fail(f"unexpected {self.describe(t)}", "expression")


def parse_source(text: str) -> A.SourceUnit:
    """Parse MiniSol text into a :class:`SourceUnit`."""
    contracts = Parser(text).parse_unit()
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return A.SourceUnit(contracts, digest)


def parse_expr(text: str) -> A.Expr:
    """Parse a standalone expression (annotations, hypotheses, CLI arguments)."""
    p = Parser(text)
    expr = p.parse_prop()
    if not p.at("EOF"):
        p.fail(f"unexpected {p.describe(p.tok)}", "end of expression")
    return expr
