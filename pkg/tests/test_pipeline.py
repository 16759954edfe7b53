import math
from dataclasses import replace
from pathlib import Path

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from ucv.core import ALL_VIEWS, ViewSet
from ucv.errors import InputError, PreconditionError, ResourceError
from ucv.evaluation import model_check
from ucv.frontend import parse_facts, parse_theory
from ucv.pipeline import (JustificationForest, admissible_sizes, check_class_preservation,
                          check_invariant_js, check_rename2, copy_forest, displayed_bound, generate_regular_girth,
                          girth, make_jf, moore_bound, rename1, rename2, run_pipeline, verify_regular_graph)

DATA = Path(__file__).resolve().parent.parent / "demos" / "data"
THREE = parse_theory("rel E/2. view V1(x) <- E(x,y). view V2(x) <- E(x,x). view V3(x) <- E(y,x).")
U = ViewSet(THREE.views.views, ALL_VIEWS, 2)
PATH = parse_facts("E(0,1). E(1,2). E(2,3). E(3,4).", THREE.vocabulary)


def labels(forest):
    return {loc: str(node) for loc, node in forest.nodes()}


@pytest.fixture(scope="module")
def forest():
    return make_jf(PATH, U, 2)


def test_make_jf_roots(forest):
    roots = [str(t) for t in forest.trees]
    assert roots == ["S_0 x C_100 = {E(0,1)}", "S_1 x C_101 = {E(0,1), E(1,2)}", "S_4 x C_001 = {E(3,4)}"]
    assert forest.height() == 2


def test_make_jf_requires_complete_views():
    with pytest.raises(InputError):
        make_jf(PATH, THREE.views, 1)


def test_rename1_primes(forest):
    f2 = rename1(forest)
    assert labels(f2)[(1, 0)] == "S_0' x C_100 = {E(0',1')}"
    doms = [{e for _, n in t.walk() for e in n.adom()} for t in f2.trees]
    assert not doms[0] & doms[1] and not doms[1] & doms[2] and not doms[0] & doms[2]


def test_rename2_worked_nodes(forest):
    f3 = rename2(rename1(forest))
    lab = labels(f3)
    assert lab[(0, 0)] == "S_1 x C_101 = {E(1,2_{1,0}), E(0_{1,0},1)}"
    assert lab[(0, 0, 0)] == "S_0_{1,0} x C_100 = {E(0_{1,0},1_{2,0})}"
    assert check_rename2(f3) == []
    assert check_rename2(rename1(forest))


def test_stage_checks_on_path(forest):
    for f in (forest, rename1(forest), rename2(rename1(forest))):
        s = f.structure()
        assert check_invariant_js(f, s).ok
        assert check_class_preservation(PATH, s, U, after_elements=f.anchors()).ok
    fam = copy_forest(rename2(rename1(forest)), 3)
    assert check_invariant_js(fam, fam.structure(), U).ok
    assert len(fam.structure().universe) == 3 * len(rename2(rename1(forest)).structure().universe)


def test_js_fault_injection(forest):
    root = forest.trees[1]
    child = root.children[0]
    broken_child = replace(child, facts=frozenset())
    broken = replace(root, children=(broken_child,) + root.children[1:])
    bad = JustificationForest((forest.trees[0], broken, forest.trees[2]), forest.views, forest.vocabulary, 2)
    report = check_invariant_js(bad, forest.structure())
    assert not report.ok
    assert [loc for loc, _ in report.violations] == [(1, 0)]
    empty = JustificationForest((), forest.views, forest.vocabulary, 0)
    assert check_invariant_js(empty, PATH).ok


def test_class_preservation_detects_loss():
    other = parse_facts("E(0,1).", THREE.vocabulary)
    r = check_class_preservation(PATH, other, U)
    assert not r.ok and r.missing == ("101",)


@pytest.mark.parametrize("degree, g, expected", [(2, 5, 5), (3, 4, 6), (3, 5, 10)])
def test_generator_at_minimal_size(degree, g, expected):
    size = moore_bound(degree, g) + (degree * moore_bound(degree, g)) % 2
    assert size == expected
    graph = generate_regular_girth(degree, g, size, seed=0)
    G = nx.Graph(list(graph.edges))
    assert all(d == degree for _, d in G.degree) and G.number_of_nodes() == size
    assert girth(graph) >= g
    verify_regular_graph(graph)


def test_generator_preconditions():
    with pytest.raises(InputError):
        generate_regular_girth(3, 4, 7)
    with pytest.raises(InputError):
        generate_regular_girth(3, 5, 8)
    with pytest.raises(InputError):
        generate_regular_girth(3, 3, 3)


def test_girth_and_bounds():
    assert girth(nx.petersen_graph()) == 5
    assert girth(nx.complete_graph(4)) == 3
    assert girth([(0, 1), (1, 2)]) == math.inf
    assert moore_bound(3, 5) == 10 and moore_bound(3, 4) == 6 and moore_bound(2, 7) == 7
    assert displayed_bound(3, 4) == 7 and displayed_bound(3, 5) == 15 and displayed_bound(2, 5) == 4


@given(st.integers(2, 4), st.integers(3, 6), st.integers(0, 50))
@settings(max_examples=20, deadline=None)
def test_generated_graphs_verify(degree, g, seed):
    size = next(admissible_sizes(degree, g))
    if size > 40:
        return
    try:
        graph = generate_regular_girth(degree, g, size, seed=seed, max_retries=5)
    except ResourceError:
        return
    assert girth(graph) >= g
    assert all(len(ns) == degree for ns in graph.adjacency().values())


def _assert_pipeline(res, sentence, views):
    assert res.ok, res.diagnostics
    assert [s.stage for s in res.stages] == ["makeJF", "rename1", "rename2", "copy", "prune"]
    for st_ in res.stages:
        assert st_.js.ok and st_.classes.ok
    assert model_check(sentence, res.model, views)
    assert len(res.model.universe) <= res.size_bound


def test_pipeline_running_example_on_path():
    t = parse_theory((DATA / "path.ucv").read_text())
    model = parse_facts((DATA / "path.facts").read_text(), t.vocabulary)
    res = run_pipeline(model, t.query, t.views)
    _assert_pipeline(res, t.query, t.views)
    assert res.parameters["h"] == 2 and res.parameters["N"] == 3


def test_pipeline_cycle():
    t = parse_theory((DATA / "no_loops.ucv").read_text())
    model = parse_facts((DATA / "cycle5.facts").read_text(), t.vocabulary)
    _assert_pipeline(run_pipeline(model, t.query, t.views), t.query, t.views)


def test_pipeline_adds_universe_relation():
    t = parse_theory("rel E/2. rel P/1. view A(x) <- P(x). view B(x) <- E(x,y). "
                     "query exists x (A(x) & !B(x)) & exists x !A(x).")
    model = parse_facts("universe 0 1 2. E(0,1). P(1).", t.vocabulary)
    res = run_pipeline(model, t.query, t.views)
    _assert_pipeline(res, t.query, t.views)
    assert res.parameters["universe_relation"] == "U"
    assert res.model.vocabulary == t.vocabulary


def test_pipeline_copy_override_diagnostic():
    t = parse_theory((DATA / "no_loops.ucv").read_text())
    model = parse_facts((DATA / "cycle5.facts").read_text(), t.vocabulary)
    res = run_pipeline(model, t.query, t.views, copies=1)
    assert not res.ok and res.model is None
    assert res.diagnostics[0].startswith("subproperty 5")


def test_pipeline_rejects_non_model():
    t = parse_theory((DATA / "no_loops.ucv").read_text())
    with pytest.raises(PreconditionError):
        run_pipeline(parse_facts("E(0,0).", t.vocabulary), t.query, t.views)
