import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from freesum.presentation import (
    Bracket, ExprSyntaxError, Gen, InputError, Scaled, Sum, format_lie_expr, load_presentation,
    parse_lie_expr, presentation_from_dict, validate_presentation,
)

from oracle import INSTANCES


def summand(name, basis, weights, brackets=(), **extra):
    return dict(name=name, dim=len(basis), weights=weights, basis=basis, brackets=list(brackets), **extra)


def pres(*summands, frees=(), cap=4):
    return {"field": {"type": "Q"}, "summands": list(summands),
            "free_generators": [{"name": g, "weight": 1} for g in frees], "cap": cap}


def test_parse_nested_brackets():
    e = parse_lie_expr("[[a,b],c] - 2*[a,c]")
    assert e == Sum((Bracket(Bracket(Gen("a"), Gen("b")), Gen("c")), Scaled(Fraction(-2), Bracket(Gen("a"), Gen("c")))))


def test_parse_fraction_coefficient():
    assert parse_lie_expr("3/4*a") == Scaled(Fraction(3, 4), Gen("a"))


@pytest.mark.parametrize("text,offset", [("[a,c", 4), ("[a c]", 3), ("a + ", 4), ("a $ b", 2)])
def test_syntax_errors_carry_offsets(text, offset):
    with pytest.raises(ExprSyntaxError) as info:
        parse_lie_expr(text)
    assert info.value.offset == offset


def test_unknown_name():
    with pytest.raises(InputError, match="unknown generator 'q'"):
        parse_lie_expr("[a,q]", names={"a", "b"})


def test_zero_denominator():
    with pytest.raises(ExprSyntaxError):
        parse_lie_expr("1/0*a")


names = st.sampled_from(["a", "b", "c", "x1"])
exprs = st.recursive(
    names.map(Gen),
    lambda inner: st.one_of(
        st.tuples(inner, inner).map(lambda p: Bracket(*p)),
        st.tuples(st.fractions(min_value=-5, max_value=5, max_denominator=4).filter(lambda c: c not in (0, 1)),
                  inner).map(lambda p: Scaled(*p)),
    ),
    max_leaves=6,
)


def _flat(e):
    return format_lie_expr(e)


@settings(max_examples=100, deadline=None)
@given(exprs)
def test_format_parse_round_trip(e):
    text = format_lie_expr(e)
    assert format_lie_expr(parse_lie_expr(text)) == text


def test_instances_are_valid():
    for path in sorted(INSTANCES.glob("*.json")):
        report = validate_presentation(load_presentation(path))
        assert report.ok, (path.name, report.to_dict())


def test_load_from_string_and_dict():
    raw = pres(summand("A1", ["a"], [1]), summand("A2", ["b"], [1]))
    p1 = load_presentation(raw)
    p2 = load_presentation(json.dumps(raw))
    assert p1.generator_names() == p2.generator_names() == ["a", "b"]


def test_cap_override():
    p = load_presentation(INSTANCES / "p3.json", cap=3)
    assert p.cap == 3


def test_missing_file():
    with pytest.raises(InputError, match="cannot read"):
        load_presentation("/nonexistent/thing.json")


def test_bad_json():
    with pytest.raises(InputError, match="invalid JSON"):
        load_presentation("{not json")


def test_antisymmetry_violation_reported():
    raw = pres(summand("A1", ["x", "y", "z"], [1, 1, 2], [["x", "y", "z", 1], ["y", "x", "z", 1]]))
    report = validate_presentation(presentation_from_dict(raw))
    assert "antisymmetry" in report.kinds()


def test_grading_violation_reported():
    raw = pres(summand("A1", ["x", "y", "z"], [1, 1, 1], [["x", "y", "z", 1]]))
    assert "grading" in validate_presentation(presentation_from_dict(raw)).kinds()


def test_jacobi_violation_reported():
    basis = ["e1", "e2", "e3", "e4", "e5", "e6"]
    br = [["e1", "e2", "e3", 1], ["e1", "e3", "e4", 1], ["e2", "e3", "e5", 1],
          ["e1", "e5", "e6", 1], ["e2", "e4", "e6", 2]]
    raw = pres(summand("A1", basis, [1, 1, 2, 3, 3, 4], br), cap=5)
    report = validate_presentation(presentation_from_dict(raw))
    assert "jacobi" in report.kinds()


def test_heisenberg_passes_jacobi():
    raw = pres(summand("A1", ["x", "y", "z"], [1, 1, 2], [["x", "y", "z", 1]]))
    assert validate_presentation(presentation_from_dict(raw)).ok


def test_one_based_indices_detected():
    raw = pres(summand("A1", ["x", "y", "z"], [1, 1, 2], [[1, 2, 3, 1]]))
    p = presentation_from_dict(raw)
    assert validate_presentation(p).ok
    assert p.summands[0].brackets[(0, 1)] == {2: 1}


def test_explicit_index_base():
    raw = pres(summand("A1", ["x", "y", "z"], [1, 1, 2], [[0, 1, 2, 1]], index_base=0))
    p = presentation_from_dict(raw)
    assert p.summands[0].brackets[(1, 0)] == {2: -1}


def test_duplicate_names_and_cap():
    raw = pres(summand("A1", ["a"], [1]), summand("A2", ["a"], [5]), cap=4)
    kinds = validate_presentation(presentation_from_dict(raw)).kinds()
    assert {"names", "cap"} <= kinds


def test_bad_relator_expression():
    raw = pres(summand("A1", ["a"], [1]), summand("A2", ["b"], [1]))
    raw["relators"] = ["[a,"]
    assert "expression" in validate_presentation(presentation_from_dict(raw)).kinds()


def test_empty_presentation():
    assert not validate_presentation(presentation_from_dict({"summands": []})).ok


def test_prime_field():
    raw = pres(summand("A1", ["a"], [1]), summand("A2", ["b"], [1]))
    raw["field"] = {"type": "GF", "p": 4}
    assert "field" in validate_presentation(presentation_from_dict(raw)).kinds()
