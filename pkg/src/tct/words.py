"""Unsigned 256-bit word arithmetic used by the interpreter."""

from __future__ import annotations

TWO_E160 = 2**160
TWO_E255 = 2**255
TWO_E256 = 2**256
WORD_MAX = TWO_E256 - 1
ADDRESS_MAX = TWO_E160 - 1


def wrap(x: int) -> int:
    return x % TWO_E256


def add(a: int, b: int) -> int:
    return (a + b) % TWO_E256


def sub(a: int, b: int) -> int:
    return (a - b) % TWO_E256


def mul(a: int, b: int) -> int:
    return (a * b) % TWO_E256


def ediv(a: int, b: int) -> int:
    """Euclidean division: the remainder is always non-negative.

    Differs from ``//`` only for negative divisors, which can occur when
    evaluating unbounded property arithmetic.
    """
    if b == 0:
        raise ZeroDivisionError("division by zero")
    q = a // b
    if a - q * b < 0:
        q += 1
    return q


def emod(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("modulo by zero")
    return a - ediv(a, b) * b


def is_word(x: int) -> bool:
    return 0 <= x < TWO_E256


def is_address(x: int) -> bool:
    return 0 <= x < TWO_E160


def hex_address(x: int) -> str:
    return f"0x{x:040x}"
