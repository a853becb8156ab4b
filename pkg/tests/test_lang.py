import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tct.errors import (
    CyclicInheritance,
    DuplicateName,
    HypothesisNotConcrete,
    MiniSolSyntaxError,
    NameResolutionError,
    OverrideWeakensSpec,
    StorageRedeclaration,
    TypeMismatch,
    UnknownType,
)
from tct.lang import ast as A
from tct.lang import (
    check_hypothesis_grammar,
    load_program,
    parse_expr,
    parse_source,
    print_expr,
    print_unit,
    resolve_inheritance,
)
from tct.lang.lexer import tokenize
from tct.lang.resolve import code_hash_of

CORPUS = os.path.join(os.path.dirname(__file__), "..", "src", "tct", "corpus")


def corpus(name):
    with open(os.path.join(CORPUS, name)) as fh:
        return fh.read()


# -- lexer


def test_tokens_and_annotation_lines():
    toks = tokenize("#invariant x == 1\ncontract C { }")
    kinds = [t.kind for t in toks]
    assert kinds[:5] == ["ANNOT", "IDENT", "PUNCT", "INT", "EOL"]
    assert toks[-1].kind == "EOF"


def test_maximal_munch():
    texts = [t.text for t in tokenize("a ==> b => c == d <= e")]
    assert "==>" in texts and "=>" in texts and "==" in texts and "<=" in texts


def test_unknown_annotation_is_rejected():
    with pytest.raises(MiniSolSyntaxError):
        tokenize("#assume x\n")


def test_hex_literal_and_malformed_number():
    assert tokenize("0xff")[0].text == "0xff"
    with pytest.raises(MiniSolSyntaxError):
        tokenize("12abc")


# -- parser


def test_multivulntoken_shape():
    unit = parse_source(corpus("multivulntoken.msol"))
    names = [c.name for c in unit.contracts]
    assert names == ["Token", "StandardToken", "MultiVulnToken"]
    mvt = unit.contracts[2]
    tp = next(f for f in mvt.functions if f.name == "transferProxy")
    requires = [s for s in A.walk_body(tp.body) if isinstance(s, A.Require)]
    assert len(requires) == 3


def test_empty_source():
    assert parse_source("").contracts == []


def test_invariant_with_sum_node():
    unit = parse_source("#invariant sum(balances) == totalSupply\n"
                        "contract C { map(address => uint256) balances; uint256 totalSupply; }")
    inv = unit.contracts[0].invariants[0]
    assert isinstance(inv, A.BinOp) and isinstance(inv.left, A.Sum)
    assert inv.left.map == "balances"


def test_syntax_error_reports_position_and_expected():
    with pytest.raises(MiniSolSyntaxError) as exc:
        parse_source("contract C { uint256 x }")
    assert exc.value.line == 1
    assert "';'" in str(exc.value)


def test_duplicate_contract_and_unknown_type():
    with pytest.raises(DuplicateName):
        parse_source("contract C { } contract C { }")
    with pytest.raises(UnknownType):
        parse_source("contract C { string s; }")


def test_precedence():
    e = parse_expr("a + b * c == d && !e || f ==> g")
    assert print_expr(e) == "a + b * c == d && !e || f ==> g"
    assert isinstance(e, A.BinOp) and e.op == "==>"
    assert print_expr(parse_expr("(a + b) * c")) == "(a + b) * c"
    assert print_expr(parse_expr("2 ^ 3 ^ 2")) == "2 ^ 3 ^ 2"
    pow_ = parse_expr("2 ^ 3 ^ 2")
    assert isinstance(pow_.right, A.BinOp) and pow_.right.op == "^"


def test_compound_assignment_desugars():
    unit = parse_source("contract C { uint256 x; function f(uint256 a) { x += a; } }")
    stmt = unit.contracts[0].functions[0].body[0]
    assert isinstance(stmt, A.Assign)
    assert print_expr(stmt.value) == "x + a"


@pytest.mark.parametrize("name", ["multivulntoken.msol", "attacks.msol", "simple_erc20.msol",
                                  "wallet.msol", "pair.msol"])
def test_print_parse_round_trip(name):
    unit = parse_source(corpus(name))
    once = print_unit(unit)
    assert print_unit(parse_source(once)) == once


# -- inheritance


def test_base_invariants_are_inherited():
    prog = load_program([corpus("simple_erc20.msol")])
    rc = prog.contract("SimpleERC20")
    assert [print_expr(i) for i in rc.invariants] == [
        "sum(balances) == totalSupply",
        "forall x: address :: 0 <= balances[x] && balances[x] <= totalSupply",
    ]


def test_no_bases_is_identity():
    src = "#invariant x == x\ncontract C { uint256 x; function f() { x = 1; } }"
    rc = resolve_inheritance(parse_source(src)).contract("C")
    assert rc.lineage == ["C"] and list(rc.storage) == ["x"] and len(rc.invariants) == 1


def test_derived_invariants_follow_base():
    src = ("#invariant x >= 0\n#invariant x <= 10\ncontract B { uint256 x; }\n"
           "#invariant x != 5\ncontract D is B { }")
    rc = resolve_inheritance(parse_source(src)).contract("D")
    assert [print_expr(i) for i in rc.invariants] == ["x >= 0", "x <= 10", "x != 5"]


def test_inheritance_errors():
    with pytest.raises(StorageRedeclaration):
        resolve_inheritance(parse_source("contract B { uint256 x; } contract D is B { uint256 x; }"))
    with pytest.raises((CyclicInheritance, NameResolutionError)):
        resolve_inheritance(parse_source("contract A is B { } contract B is A { }"))
    with pytest.raises(NameResolutionError):
        resolve_inheritance(parse_source("contract D is Missing { }"))
    weak = ("contract B { uint256 x; uint256 y;\n#modifies x\nfunction f() { x = 1; } }\n"
            "contract D is B {\n#modifies y\nfunction f() { y = 1; } }")
    with pytest.raises(OverrideWeakensSpec):
        resolve_inheritance(parse_source(weak))


def test_type_errors():
    with pytest.raises(TypeMismatch):
        resolve_inheritance(parse_source("contract C { uint256 x; function f() { x = true; } }"))
    with pytest.raises((TypeMismatch, NameResolutionError)):
        resolve_inheritance(parse_source("contract C { uint256 x; function f() { x = sum(x); } }"))


def test_code_hash_ignores_layout_but_not_code():
    a = "contract C { uint256 x; function f() { x = 1; } }"
    b = "contract C {\n  uint256 x;\n  // comment\n  function f() {\n    x = 1;\n  }\n}\n"
    c = "contract C { uint256 x; function f() { x = 2; } }"
    h = [code_hash_of(parse_source(t).contracts[0]) for t in (a, b, c)]
    assert h[0] == h[1] != h[2]


# -- hypothesis grammar


def test_hypothesis_grammar_accepts_range_hypothesis(program):
    rc = program.contract("MultiVulnToken")
    e = parse_expr("0 <= _value && _value < 2^255 && 0 <= _fee && _fee < 2^255 && totalSupply < 2^255")
    check_hypothesis_grammar(e, rc, rc.function("transferProxy"))


@pytest.mark.parametrize("text", ["forall x: address :: balances[x] >= 0", "sum(balances) == totalSupply",
                                  "old(totalSupply) == 0"])
def test_hypothesis_grammar_rejects(text):
    with pytest.raises(HypothesisNotConcrete) as exc:
        check_hypothesis_grammar(parse_expr(text))
    assert exc.value.args


def test_hypothesis_names_are_checked(program):
    rc = program.contract("MultiVulnToken")
    fn = rc.function("transferProxy")
    with pytest.raises(HypothesisNotConcrete):
        check_hypothesis_grammar(parse_expr("nosuch > 0"), rc, fn)
    with pytest.raises(HypothesisNotConcrete):
        check_hypothesis_grammar(parse_expr("balances[_value + 1] == 0"), rc, fn)
    check_hypothesis_grammar(parse_expr("balances[_from] >= _value"), rc, fn)


# -- properties

names = st.sampled_from(["a", "b", "x", "totalSupply"])
leaf = st.one_of(st.integers(0, 2**70).map(str), names)


def _expr(children):
    binop = st.tuples(children, st.sampled_from(["+", "-", "*", "/", "%", "^"]), children)
    return binop.map(lambda t: f"({t[0]} {t[1]} {t[2]})")


arith = st.recursive(leaf, _expr, max_leaves=8)
props = st.recursive(
    st.tuples(arith, st.sampled_from(["==", "!=", "<", "<=", ">", ">="]), arith).map(" ".join),
    lambda c: st.one_of(
        st.tuples(c, st.sampled_from(["&&", "||", "==>"]), c).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        c.map(lambda s: f"!({s})"),
    ),
    max_leaves=6,
)


@settings(max_examples=200, deadline=None)
@given(props)
def test_printer_is_a_fixed_point(text):
    e = parse_expr(text)
    printed = print_expr(e)
    again = parse_expr(printed)
    assert print_expr(again) == printed
    assert again == e
