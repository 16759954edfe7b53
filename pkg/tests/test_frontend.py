import json

import pytest
from hypothesis import given, settings, strategies as st

from ucv.core import And, Exists, Not, Structure, ViewAtom, Vocabulary, qrank
from ucv.errors import ParseError
from ucv.evaluation import lambda_map
from ucv.frontend import (dumps, parse_facts, parse_fo_formula, parse_formula, parse_theory, render,
                          render_formula, to_document)

INTRO = """
rel R1/2. rel R2/2. rel R3/1. rel R4/2.
view V1(x) <- R1(x,y).
view V2(x) <- R1(x,y), R2(y,z).
view V3(x) <- R3(x).
view V4(x) <- R4(x,y), R3(x).
query exists x (V2(x) & !V1(x)) & !exists y (V3(y) & !V4(y)).
"""


def test_minimal_theory():
    t = parse_theory("rel E/2. view V(x) <- E(x,y). query exists x V(x).")
    assert t.views.N == 1 and qrank(t.query) == 1


def test_intro_query_round_trip():
    t = parse_theory(INTRO)
    again = parse_theory(render(t))
    assert again.query == t.query and again.views == t.views and again.vocabulary == t.vocabulary
    assert render(again) == render(t)


def test_unsafe_view_error_has_location():
    with pytest.raises(ParseError) as e:
        parse_theory("rel E/2.\nview V(x) <- E(y,z).")
    assert e.value.line == 2 and "unsafe" in str(e.value)


@pytest.mark.parametrize("text, fragment", [
    ("rel E/2. view V(x) <- F(x,y).", "F"),
    ("rel E/2. view V(x) <- E(x).", "arity"),
    ("rel E/2. view V(x) <- E(x,y). query exists x W(x).", "W"),
    ("rel E/2. view V(x) <- E(x,y). query V(x).", "free"),
    ("rel E/2 view", "line 1"),
])
def test_theory_errors(text, fragment):
    with pytest.raises(ParseError) as e:
        parse_theory(text)
    assert fragment in str(e.value)


def test_dialect_detection():
    assert parse_theory("rel E/2. view V(x) <- E(x,y), x != y.").dialect.value == "UCV!="
    assert parse_theory("rel E/2. view V(x) <- E(x,y), !E(y,x).").dialect.value == "UCV-neg"
    assert parse_theory("rel E/2. view V(x) <- E(x,y).").dialect.value == "UCV"


def test_parse_facts_examples():
    E = Vocabulary((("E", 2),))
    s = parse_facts("E(1,2). E(2,3). E(3,4).", E)
    assert s.universe == (1, 2, 3, 4) and s.tuples("E") == {(1, 2), (2, 3), (3, 4)}
    one = parse_facts("universe 1.", E)
    assert one.universe == (1,) and not one.facts()
    with pytest.raises(ParseError):
        parse_facts("E(1).", E)
    with pytest.raises(ParseError):
        parse_facts("F(1,2).", E)


def test_structure_render_sorted_and_lambda_facts():
    E = Vocabulary((("E", 2),))
    s = parse_facts("E(3,4). E(1,2). E(2,3).", E)
    assert render(s) == "E(1,2).\nE(2,3).\nE(3,4).\n"
    t = parse_theory("rel E/2. view V(x) <- E(x,y). view W(x) <- E(x,y), E(y,z).")
    text = render(lambda_map(s, t.views))
    assert text == "universe 1 2 3 4.\nV(1).\nV(2).\nV(3).\nW(1).\nW(2).\n"


def test_structured_export_is_stable():
    t = parse_theory(INTRO)
    a, b = dumps(t), dumps(parse_theory(render(t)))
    assert a == b
    assert json.loads(a)["dialect"] == "UCV"


def test_fo_formula_parse():
    E = Vocabulary((("E", 2),))
    f = parse_fo_formula("forall x forall y (E(x,y) -> E(y,x))", E)
    assert qrank(f) == 2


NAMES = ["V1", "V2", "W"]


def formulas(depth=3):
    atom = st.builds(ViewAtom, st.sampled_from(NAMES), st.sampled_from(["x", "y", "z"]))

    def extend(inner):
        return st.one_of(
            st.builds(Not, inner),
            st.lists(inner, min_size=2, max_size=3).map(lambda ps: And(tuple(ps))),
            st.builds(Exists, st.sampled_from(["x", "y", "z"]), inner),
        )
    return st.recursive(atom, extend, max_leaves=8)


@given(formulas())
@settings(max_examples=300, deadline=None)
def test_formula_round_trip(f):
    text = render_formula(f)
    assert parse_formula(text, NAMES) == f
    assert render_formula(parse_formula(text, NAMES)) == text


elements = st.one_of(st.integers(-3, 20), st.sampled_from(["a", "b'", "node 1", "x_{1,0}", "q#2", "exists"]))


@given(st.sets(st.tuples(elements, elements), max_size=6), st.sets(elements, max_size=3))
@settings(max_examples=200, deadline=None)
def test_structure_round_trip(edges, extra):
    E = Vocabulary((("E", 2),))
    universe = {e for t in edges for e in t} | extra
    if not universe:
        return
    s = Structure(E, {"E": edges}, universe)
    assert parse_facts(render(s), E) == s
    assert to_document(s) == to_document(parse_facts(render(s), E))
