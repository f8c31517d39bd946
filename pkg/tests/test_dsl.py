import random

import pytest

from trustb.dsl import (
    parse_expression,
    parse_file,
    parse_predicate,
    pp_expr,
    pp_pred,
    pretty_print,
)
from trustb.errors import DuplicateLabel, MultipleAssignment, ParseError
from trustb.models import builtin_units
from trustb.syntax import (
    And,
    ContextAST,
    Exists,
    Forall,
    FunApp,
    Ident,
    Image,
    Implies,
    MachineAST,
    Maplet,
    Member,
    Pow,
    SetEnum,
    Union,
)


# --- expression and predicate grammar ------------------------------------------------------


def test_maplet_left_assoc():
    e = parse_expression("a |-> b |-> c")
    assert isinstance(e, Maplet)
    assert isinstance(e.left, Maplet)
    assert e.right == Ident("c")


def test_maplet_right_nested_parens_survive():
    e = parse_expression("a |-> (b |-> c)")
    assert isinstance(e.right, Maplet)
    assert parse_expression(pp_expr(e)) == e


def test_union_difference_left_assoc():
    e = parse_expression("a \\/ b \\ c \\/ d")
    # ((a \/ b) \ c) \/ d
    assert isinstance(e, Union)
    assert e.right == Ident("d")


def test_postfix_image_and_application():
    e = parse_expression("r[{a}]")
    assert isinstance(e, Image)
    assert isinstance(e.arg, SetEnum)
    e2 = parse_expression("f(a)(b)")
    assert isinstance(e2, FunApp)
    assert isinstance(e2.fn, FunApp)


def test_fnspace_non_associative():
    e = parse_expression("a +-> b")
    assert e.kind == "pfun"
    assert parse_expression("a --> b").kind == "tfun"
    assert parse_expression("a <-> b").kind == "rel"
    with pytest.raises(ParseError):
        parse_expression("a +-> b +-> c")


def test_pow_dom_empty():
    assert isinstance(parse_expression("pow(s)"), Pow)
    assert parse_expression("{}") is not None
    assert parse_expression("{a, b |-> c}") == SetEnum(
        (Ident("a"), Maplet(Ident("b"), Ident("c")))
    )


def test_parenthesized_maplet_member():
    p = parse_predicate("(a |-> b) : r")
    assert isinstance(p, Member)
    assert isinstance(p.item, Maplet)


def test_parenthesized_predicate():
    p = parse_predicate("(a = b) & c = d")
    assert isinstance(p, And)


def test_implication_right_assoc():
    p = parse_predicate("a = a => b = b => c = c")
    assert isinstance(p, Implies)
    assert isinstance(p.right, Implies)


def test_conjunction_binds_tighter_than_implication():
    p = parse_predicate("a = a & b = b => c = c")
    assert isinstance(p, Implies)
    assert isinstance(p.left, And)


def test_quantifiers():
    p = parse_predicate("!x, y . x : s & y : s => x = y")
    assert isinstance(p, Forall)
    assert p.vars == ("x", "y")
    q = parse_predicate("#j . j : pow(s) & j /= {}")
    assert isinstance(q, Exists)


def test_exists_inside_parens_after_implies():
    p = parse_predicate("x : s => (#j . j : pow(s) & j /= {})")
    assert isinstance(p, Implies)
    assert isinstance(p.right, Exists)


def test_unicode_aliases():
    assert parse_predicate("x ∈ s") == parse_predicate("x : s")
    assert parse_predicate("x ∉ s") == parse_predicate("x /: s")
    assert parse_expression("a ↦ b") == parse_expression("a |-> b")
    assert parse_expression("a ∪ b") == parse_expression("a \\/ b")
    assert parse_predicate("∀x . x : s => x : s") == parse_predicate(
        "!x . x : s => x : s"
    )


def test_comments_ignored():
    p = parse_predicate("x : s // trailing words : = {")
    assert isinstance(p, Member)


# --- error reporting ------------------------------------------------------


def test_error_position_line_col():
    with pytest.raises(ParseError) as exc:
        parse_file("CONTEXT c\nSETS S T\nCONSTANTS ???\nEND")
    assert exc.value.line == 3
    assert exc.value.col >= 11


def test_error_filename_prefix():
    with pytest.raises(ParseError) as exc:
        parse_file("CONTEXT", filename="bad.ebt")
    assert "bad.ebt:" in str(exc.value)


def test_duplicate_label_rejected():
    text = """MACHINE m
VARIABLES v
INVARIANTS
  @inv1: v : s
  @inv1: v : s
EVENT INITIALISATION THEN @act1: v := {} END
END"""
    with pytest.raises(DuplicateLabel):
        parse_file(text)


def test_multiple_assignment_rejected():
    text = """MACHINE m
VARIABLES v
INVARIANTS
  @inv1: v : s
EVENT INITIALISATION THEN
  @act1: v := {}
  @act2: v := {}
END
END"""
    with pytest.raises(MultipleAssignment):
        parse_file(text)


def test_deep_nesting_is_positioned_error_not_crash():
    with pytest.raises(ParseError):
        parse_expression("(" * 400 + "x" + ")" * 400)
    assert parse_expression("(" * 40 + "x" + ")" * 40) == Ident("x")


def test_empty_input():
    with pytest.raises(ParseError):
        parse_file("")
    with pytest.raises(ParseError):
        parse_expression("")


# --- round trips ------------------------------------------------------


@pytest.mark.parametrize("variant", ["base", "rel", "nopart", "bad_act"])
def test_builtin_round_trip(variant):
    units = builtin_units(variant)
    text = pretty_print(units)
    reparsed = parse_file(text)
    assert reparsed == units
    assert pretty_print(reparsed) == text


def test_positions_do_not_affect_equality():
    a = parse_predicate("x : s & y : s")
    b = parse_predicate("  x :    s &\n y : s")
    assert a == b


PRED_SAMPLES = [
    "x : s",
    "x /: s \\/ t",
    "(a |-> (b |-> c)) : r",
    "f : s +-> t & g : s <-> pow(t)",
    "partition(S, A, B)",
    "!i, j . i : s & j : pow(s) & i : dom(r) => i /: j",
    "#j . j : pow(s) & j /= {} & j |-> t : r & j <: k[{i}]",
    "x = y => (#z . z : s & z /= x) => y /= x",
    "r[{a}] = {b} & f(a) = b",
]


@pytest.mark.parametrize("text", PRED_SAMPLES)
def test_predicate_print_parse_fixpoint(text):
    ast = parse_predicate(text)
    printed = pp_pred(ast)
    assert parse_predicate(printed) == ast
    assert pp_pred(parse_predicate(printed)) == printed


def test_parser_fuzz_only_parse_errors():
    rng = random.Random(1187)
    vocab = (
        list(":=(){}[]@.,&!#|<>+-/\\= \n\t\"'")
        + ["CONTEXT", "MACHINE", "EVENT", "END", "WHERE", "THEN", "ANY", "SETS",
           "AXIOMS", "INVARIANTS", "VARIABLES", "CONSTANTS", "REFINES", "SEES",
           "EXTENDS", "|->", "=>", "<->", "+->", "-->", ":=", "/:", "/=", "<:",
           "pow", "dom", "x", "inv1", "@grd1:", "{}", "0", "9"]
    )
    for _ in range(3000):
        n = rng.randrange(0, 30)
        joiner = " " if rng.random() < 0.6 else ""
        text = joiner.join(rng.choice(vocab) for _ in range(n))
        try:
            parse_file(text)
        except ParseError:
            pass
