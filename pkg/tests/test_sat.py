import itertools
import random
import time

import pytest

from oracles import all_structures, normalization_oracle_run, random_sentence, random_view
from ucv.core import ViewSet, Vocabulary
from ucv.errors import InputError, UnsupportedCertificationError, UnsupportedDialectError
from ucv.evaluation import model_check, realized_masks
from ucv.frontend import parse_theory, render
from ucv.sat import (ClassLit, NoModelUpTo, Sat, SearchBudgetExceeded, abstraction_witness, bounded_model_search,
                     decide, normalize_rank1, pattern_candidates, respects, theoretical_bound)
from ucv.views import containment_lattice

E = Vocabulary((("E", 2),))
BASE = "rel E/2. view V1(x) <- E(x,y). view V2(x) <- E(x,y), E(y,z). view L(x) <- E(x,x). "


def theory(query, base=BASE):
    return parse_theory(base + f"query {query}.")


def test_normalize_simple_cubes():
    t = theory("exists x (V2(x) & !V1(x))")
    form = normalize_rank1(t.query, t.views)
    assert form.literals() == [ClassLit(0b010, 0b001)]
    assert form.evaluate({0b010}) and not form.evaluate({0b011, 0b000})


def test_normalize_rejects_free_variables():
    t = parse_theory(BASE)
    from ucv.core import ViewAtom
    with pytest.raises(InputError):
        normalize_rank1(ViewAtom("V1", "x"), t.views)


def test_normalization_oracle():
    mismatches, outcomes = normalization_oracle_run(1000, seed=5)
    assert not mismatches
    assert min(outcomes.values()) > 100


def test_pattern_candidates_respect_lattice():
    t = theory("exists x V2(x)")
    form = normalize_rank1(t.query, t.views)
    lattice = containment_lattice(t.views)
    cands = list(itertools.islice(pattern_candidates(form, lattice), 200))
    assert cands
    for c in cands:
        assert form.evaluate(c) and all(respects(s, lattice) for s in c)


def test_abstraction_unsat_fast_path():
    t = theory("exists x (V2(x) & !V1(x))")
    start = time.perf_counter()
    v = decide(t.query, t.views)
    assert time.perf_counter() - start < 0.1
    assert v.is_unsat and v.certificate == "abstraction" and v.sizes_searched == ()
    assert isinstance(bounded_model_search(t.query, t.views, 4), NoModelUpTo)


def test_sat_with_size_two_model():
    t = parse_theory("rel E/2. view V1(x) <- E(x,y). view V2(x) <- E(x,x). query forall x (V1(x) & !V2(x)).")
    v = decide(t.query, t.views)
    assert v.is_sat and len(v.model.universe) == 2 and model_check(t.query, v.model, t.views)
    assert render(v.model) == "E(0,1).\nE(1,0).\n"
    assert not any(model_check(t.query, s, t.views) for s in all_structures(E, 1))


def test_counterexample_is_single_edge():
    t = theory("exists x (V1(x) & !V2(x))")
    v = decide(t.query, t.views)
    assert v.is_sat and render(v.model) == "E(0,1).\n"


@pytest.mark.parametrize("engine", ["canonical", "sat"])
def test_bounded_search_matches_exhaustive(engine):
    rng = random.Random(17)
    vocab = Vocabulary((("E", 2), ("P", 1)))
    by_size = {n: list(all_structures(vocab, n)) for n in (1, 2)}
    seen = {1: 0, 2: 0, None: 0}
    for _ in range(300):
        views = ViewSet(tuple(random_view(rng, vocab, 3, f"V{i + 1}") for i in range(rng.randint(1, 3))))
        f = random_sentence(rng, list(views.names), depth=2)
        first = next((n for n in (1, 2) if any(model_check(f, s, views) for s in by_size[n])), None)
        seen[first] += 1
        r = bounded_model_search(f, views, 2, vocabulary=vocab, engine=engine)
        if first is None:
            assert isinstance(r, NoModelUpTo)
        else:
            assert isinstance(r, Sat) and len(r.model.universe) == first and model_check(f, r.model, views)
    assert min(seen.values()) >= 5, seen


def test_engines_return_the_same_model():
    rng = random.Random(23)
    for _ in range(25):
        views = ViewSet(tuple(random_view(rng, E, 4, f"V{i + 1}") for i in range(rng.randint(1, 3))))
        f = random_sentence(rng, list(views.names), depth=2)
        a = bounded_model_search(f, views, 3, engine="canonical")
        b = bounded_model_search(f, views, 3, engine="sat")
        assert type(a) is type(b)
        if isinstance(a, Sat):
            assert a.model == b.model


def test_search_is_seed_independent():
    t = theory("exists x (V2(x) & !L(x)) & forall x V1(x)")
    models = {bounded_model_search(t.query, t.views, 3, seed=s).model for s in range(4)}
    assert len(models) == 1


def test_abstraction_soundness():
    """Abstraction UNSAT implies no small model; a found model's pattern satisfies form and lattice."""
    rng = random.Random(31)
    structures = [s for n in (1, 2, 3) for s in all_structures(E, n)]
    for _ in range(60):
        views = ViewSet(tuple(random_view(rng, E, 4, f"V{i + 1}") for i in range(rng.randint(1, 3))))
        f = random_sentence(rng, list(views.names), depth=2)
        form = normalize_rank1(f, views)
        lattice = containment_lattice(views)
        witness = abstraction_witness(form, lattice)
        models = [s for s in structures[:300] if model_check(f, s, views)]
        if witness is None:
            assert not models
        else:
            assert form.evaluate(witness)
        for s in models[:3]:
            pattern = realized_masks(s, views)
            assert form.evaluate(pattern) and all(respects(m, lattice) for m in pattern)


def test_unknown_below_bound_and_budget():
    t = theory("forall x V1(x) & !exists x V2(x)")
    v = decide(t.query, t.views, max_size=2)
    assert v.status == "UNKNOWN" and v.bound == theoretical_bound(1, 4)
    r = bounded_model_search(t.query, t.views, 3, time_limit=0.0)
    assert isinstance(r, SearchBudgetExceeded)


def test_certified_on_impure_dialect():
    t = parse_theory("rel E/2. view N(x) <- E(x,y), x != y. query exists x N(x).")
    with pytest.raises(UnsupportedCertificationError) as e:
        decide(t.query, t.views, certified=True)
    assert e.value.verdict.is_sat
    assert decide(t.query, t.views).is_sat


def test_recursive_views_refused():
    t = parse_theory("rel E/2. view R(x) <- E(x,y). view R(x) <- E(x,y), R(y). query exists x R(x).")
    with pytest.raises(UnsupportedDialectError):
        decide(t.query, t.views)


def test_bound_base_case():
    assert theoretical_bound(1, 1, 1) == 4


def test_bound_at_p1_m2():
    n = 2 * 2 ** 2
    delta = 2 ** n * (n * 2) ** 2
    assert delta == 2 ** 16
    assert theoretical_bound(1, 2) == delta ** 2 * 2 ** n * (n * 2) ** 3


def test_bound_monotone_over_grid():
    grid = {(p, m): theoretical_bound(p, m) for p in (1, 2, 3) for m in (1, 2, 3)}
    for (p, m), b in grid.items():
        if p < 3:
            assert grid[(p + 1, m)] >= b
        if m < 3:
            assert grid[(p, m + 1)] > b
    assert theoretical_bound(1, 1, 2) >= theoretical_bound(1, 1, 1)
    with pytest.raises(InputError):
        theoretical_bound(0, 1)
