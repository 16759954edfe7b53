import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_eval_formula, brute_eval_view, random_sentence, random_structure, random_view
from ucv.core import Atom, ConjunctiveView, Exists, Not, And, Structure, ViewAtom, ViewSet, Vocabulary
from ucv.errors import InputError
from ucv.evaluation import (class_table, eval_view, find_homomorphism, iter_homomorphisms, lambda_map,
                            model_check, signature)
from ucv.frontend import parse_theory

E = Vocabulary((("E", 2),))
PATH = Structure(E, {"E": {(1, 2), (2, 3), (3, 4)}})


def view(name, *atoms, head="x", neqs=(), negs=()):
    return ConjunctiveView(name, head, tuple(Atom(r, a) for r, a in atoms), tuple(neqs),
                           tuple(Atom(r, a) for r, a in negs))


OUT = view("V", ("E", ("x", "y")))
TWO = view("W", ("E", ("x", "y")), ("E", ("y", "z")))


def test_lambda_example():
    lam = lambda_map(PATH, ViewSet((OUT, TWO)))
    assert lam.tuples("V") == {(1,), (2,), (3,)}
    assert lam.tuples("W") == {(1,), (2,)}
    assert lam.universe == PATH.universe


def test_eval_view_examples():
    assert eval_view(OUT, PATH) == {1, 2, 3}
    assert eval_view(TWO, PATH) == {1, 2}
    loop = view("L", ("E", ("x", "x")))
    assert eval_view(loop, PATH) == frozenset()
    neq = view("N", ("E", ("x", "y")), ("E", ("z", "y")), neqs=[("x", "z")])
    fork = Structure(E, {"E": {(1, 3), (2, 3), (4, 5)}})
    assert eval_view(neq, fork) == {1, 2}
    neg = view("G", ("E", ("x", "y")), negs=[("E", ("y", "x"))])
    back = Structure(E, {"E": {(1, 2), (2, 1), (2, 3)}})
    assert eval_view(neg, back) == {2}


def test_eval_view_vocabulary_mismatch():
    with pytest.raises(InputError):
        eval_view(view("V", ("F", ("x", "y"))), PATH)


def test_class_table_labels():
    t = parse_theory("rel E/2. view V1(x) <- E(x,y). view V2(x) <- E(x,x). view V3(x) <- E(y,x).")
    table = class_table(PATH, t.views)
    assert str(table[1]) == "C_100"
    assert str(table[2]) == "C_101"
    assert str(table[4]) == "C_001"
    assert table.members(signature("101")) == [2, 3]
    assert table.realized == {signature("100"), signature("101"), signature("001")}


def test_model_check_examples():
    t = parse_theory("rel E/2. view V1(x) <- E(x,y). view V2(x) <- E(x,x). view V3(x) <- E(y,x). "
                     "query forall x !V2(x) & exists x (V1(x) & !V3(x)).")
    assert model_check(t.query, PATH, t.views)
    cycle = Structure(E, {"E": {(0, 1), (1, 0)}})
    assert not model_check(t.query, cycle, t.views)
    assert model_check(And((ViewAtom("V1", "x"), Not(ViewAtom("V3", "x")))), PATH, t.views) == {1}
    with pytest.raises(InputError):
        model_check(ViewAtom("Nope", "x"), PATH, t.views)


def test_homomorphism_examples():
    c3 = Structure(E, {"E": {(0, 1), (1, 2), (2, 0)}})
    c2 = Structure(E, {"E": {(0, 1), (1, 0)}})
    c6 = Structure(E, {"E": {(i, (i + 1) % 6) for i in range(6)}})
    assert find_homomorphism(c6, c3) is not None
    assert find_homomorphism(c6, c2) is not None
    assert find_homomorphism(c3, c2) is None
    assert find_homomorphism(PATH, c3, {1: 2})[4] == 2
    assert len(list(iter_homomorphisms(PATH, c3))) == 3
    with pytest.raises(InputError):
        find_homomorphism(PATH, c3, {99: 0})


def test_eval_view_matches_brute_force():
    rng = random.Random(7)
    vocab = Vocabulary((("E", 2), ("P", 1)))
    for _ in range(400):
        v = random_view(rng, vocab, 5)
        s = random_structure(rng, vocab, rng.randint(1, 4))
        assert eval_view(v, s) == brute_eval_view(v, s), (v, s)


def test_impure_views_match_brute_force():
    rng = random.Random(11)
    for _ in range(200):
        base = random_view(rng, E, 4)
        others = [x for x in base.variables if x != "x"]
        neqs = [("x", others[0])] if others and rng.random() < 0.5 else []
        negs = [("E", (base.body[0].args[1], "x"))] if rng.random() < 0.5 else []
        v = view("V", *[(a.relation, a.args) for a in base.body], neqs=neqs, negs=negs)
        s = random_structure(rng, E, rng.randint(1, 4))
        assert eval_view(v, s) == brute_eval_view(v, s)


def test_model_check_matches_lambda_evaluation():
    """A sentence over views evaluates the same on I and on Lambda(I) with atomic views."""
    rng = random.Random(3)
    views = ViewSet((OUT, TWO, view("L", ("E", ("x", "x")))))
    atomic = ViewSet(tuple(ConjunctiveView(v.name, "x", (Atom(v.name, ("x",)),)) for v in views))
    for _ in range(300):
        s = random_structure(rng, E, rng.randint(1, 4))
        f = random_sentence(rng, list(views.names), depth=3)
        lam = lambda_map(s, views)
        assert model_check(f, s, views) == model_check(f, lam, atomic) == brute_eval_formula(
            f, s, {v.name: v for v in views})


@given(st.integers(1, 4).flatmap(lambda n: st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)))
                                 .map(lambda es: Structure(E, {"E": es}, range(n)))))
@settings(max_examples=100, deadline=None)
def test_views_are_preserved_by_homomorphisms(s):
    """Unary conjunctive views are monotone: a view holding at a holds at h(a)."""
    target = Structure(E, {"E": {(0, 1), (1, 0), (1, 1)}})
    h = find_homomorphism(s, target)
    if h is None:
        return
    for v in (OUT, TWO, view("L", ("E", ("x", "x")))):
        image = eval_view(v, target)
        assert all(h[a] in image for a in eval_view(v, s))


def test_existential_formula_monotone_example():
    f = Exists("x", ViewAtom("W", "x"))
    assert model_check(f, PATH, ViewSet((TWO,)))
