"""Tokenizer for MiniSol source text."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import MiniSolSyntaxError

KEYWORDS = {
    "contract", "is", "function", "constructor", "returns",
    "uint256", "address", "bool", "map",
    "require", "assert", "if", "else", "return",
    "true", "false", "forall", "sum", "old", "msg",
}

ANNOTATIONS = {"#invariant", "#pre", "#post", "#modifies"}

# longest first so that maximal munch works with a simple prefix scan
PUNCT = sorted(
    [
        "==>", "=>", "::", "==", "!=", "<=", ">=", "&&", "||", "+=", "-=",
        "(", ")", "{", "}", "[", "]", ",", ";", ":", ".", "=",
        "+", "-", "*", "/", "%", "^", "<", ">", "!",
    ],
    key=len,
    reverse=True,
)


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, INT, KW, PUNCT, ANNOT, EOL, EOF
    text: str
    line: int
    col: int

    def is_(self, kind: str, text: str | None = None) -> bool:
        return self.kind == kind and (text is None or self.text == text)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    in_annotation = False

    def advance(k: int) -> None:
        nonlocal i, line, col
        for ch in text[i:i + k]:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        i += k

    while i < n:
        ch = text[i]
        if ch == "\n":
            if in_annotation:
                tokens.append(Token("EOL", "\n", line, col))
                in_annotation = False
            advance(1)
            continue
        if ch in " \t\r":
            advance(1)
            continue
        if text.startswith("//", i):
            j = text.find("\n", i)
            advance((n if j < 0 else j) - i)
            continue
        if text.startswith("/*", i):
            j = text.find("*/", i + 2)
            if j < 0:
                raise MiniSolSyntaxError("unterminated comment", line, col)
            advance(j + 2 - i)
            continue
        if ch == "#":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            if word not in ANNOTATIONS:
                raise MiniSolSyntaxError(f"unknown annotation {word!r}", line, col, tuple(sorted(ANNOTATIONS)))
            if in_annotation:
                raise MiniSolSyntaxError("annotation must start on its own line", line, col)
            tokens.append(Token("ANNOT", word, line, col))
            in_annotation = True
            advance(j - i)
            continue
        if ch.isdigit():
            if text.startswith(("0x", "0X"), i):
                j = i + 2
                while j < n and text[j] in "0123456789abcdefABCDEF":
                    j += 1
                if j == i + 2:
                    raise MiniSolSyntaxError("malformed hex literal", line, col)
            else:
                j = i
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and (text[j].isalpha() or text[j] == "_"):
                raise MiniSolSyntaxError("malformed number", line, col)
            tokens.append(Token("INT", text[i:j], line, col))
            advance(j - i)
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            tokens.append(Token("KW" if word in KEYWORDS else "IDENT", word, line, col))
            advance(j - i)
            continue
        for p in PUNCT:
            if text.startswith(p, i):
                tokens.append(Token("PUNCT", p, line, col))
                advance(len(p))
                break
        else:
            raise MiniSolSyntaxError(f"unexpected character {ch!r}", line, col)

    if in_annotation:
        tokens.append(Token("EOL", "\n", line, col))
    tokens.append(Token("EOF", "", line, col))
    return tokens
