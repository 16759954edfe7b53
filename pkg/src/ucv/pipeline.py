"""The bounded-model construction as an executable, checked pipeline.

Stages: make_jf -> rename1 -> rename2 -> copy_forest -> prune, with the justification
invariant and class preservation checked after each one.
"""
from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field

import networkx as nx

from .core import (ALL_VIEWS, Fact, FORMULA_VIEWS, Structure, ViewSet, element_key, fact_key,
                   sort_elements)
from .errors import ConstructionError, InputError, PreconditionError, ResourceError, UnsupportedDialectError
from .evaluation import ClassSignature, class_table, find_homomorphism, model_check, view_csp
from .views import enumerate_views, prioritize

RESERVED = set("'{}#")


# forests

@dataclass(frozen=True)
class JustificationNode:
    anchor: object
    facts: frozenset
    signature: ClassSignature
    level: int
    children: tuple = ()

    def adom(self):
        return frozenset(e for f in self.facts for e in f.args)

    def walk(self, path=()):
        yield path, self
        for i, ch in enumerate(self.children):
            yield from ch.walk(path + (i,))

    def rename(self, mapping):
        return JustificationNode(mapping.get(self.anchor, self.anchor), _rename_facts(self.facts, mapping),
                                 self.signature, self.level,
                                 tuple(ch.rename(mapping) for ch in self.children))

    def __str__(self):
        body = ", ".join(_fact_text(f) for f in sorted(self.facts, key=fact_key))
        return f"S_{self.anchor} x {self.signature} = {{{body}}}"


def _fact_text(f):
    return f"{f.relation}({','.join(str(e) for e in f.args)})"


def _rename_facts(facts, mapping):
    return frozenset(Fact(f.relation, tuple(mapping.get(e, e) for e in f.args)) for f in facts)


@dataclass(frozen=True)
class JustificationForest:
    trees: tuple
    views: ViewSet
    vocabulary: object
    depth: int

    def nodes(self):
        for t, root in enumerate(self.trees):
            for path, node in root.walk():
                yield (t,) + path, node

    def facts(self):
        out = set()
        for _, node in self.nodes():
            out |= node.facts
        return out

    def anchors(self):
        return frozenset(node.anchor for _, node in self.nodes())

    def structure(self):
        return Structure.from_facts(self.vocabulary, self.facts())

    def level_nodes(self, level):
        return [(loc, n) for loc, n in self.nodes() if n.level == level]

    def height(self):
        return max((n.level for _, n in self.nodes()), default=-1)


@dataclass(frozen=True)
class ForestFamily:
    copies: tuple

    @property
    def views(self):
        return self.copies[0].views

    @property
    def depth(self):
        return self.copies[0].depth

    def nodes(self):
        for k, forest in enumerate(self.copies):
            for loc, node in forest.nodes():
                yield (k,) + loc, node

    def facts(self):
        out = set()
        for forest in self.copies:
            out |= forest.facts()
        return out

    def anchors(self):
        return frozenset().union(*(f.anchors() for f in self.copies))

    def structure(self):
        return Structure.from_facts(self.copies[0].vocabulary, self.facts())


# make_jf

def _view_holds(view, a, facts, vocabulary):
    if not facts:
        return False
    s = Structure.from_facts(vocabulary, facts)
    if a not in set(s.universe):
        return False
    csp = view_csp(view, s)
    return next(csp.solutions({view.head: a}), None) is not None


def _minimize(facts, checks, vocabulary):
    """Greedy inclusion-minimal subset (canonical removal order) keeping every check true."""
    current = set(facts)
    for f in sorted(facts, key=fact_key):
        trial = current - {f}
        if all(_view_holds(v, a, trial, vocabulary) for v, a in checks):
            current = trial
    return frozenset(current)


def justification_set(model, views, a, signature):
    """Inclusion-minimal fact set witnessing every positive view of a's class."""
    vocab = model.vocabulary
    union = set()
    checks = []
    for j in signature.positive():
        v = views[j]
        h = find_homomorphism(v.canonical_database(vocab), model, {v.head: a})
        if h is None:
            raise ConstructionError(f"view {v.name} claimed true at {a} but has no witness")
        image = {Fact(at.relation, tuple(h[x] for x in at.args)) for at in v.body}
        union |= _minimize(image, [(v, a)], vocab)
        checks.append((v, a))
    return _minimize(union, checks, vocab)


def _check_elements(model):
    for e in model.universe:
        if isinstance(e, str) and RESERVED & set(e):
            raise InputError(f"element {e!r} uses a character reserved for construction names ('{{}}#)")


def make_jf(model, views, depth):
    """One justification tree per realized class, expanded to the given depth."""
    if depth < 0:
        raise InputError("depth must be non-negative")
    if views.role != ALL_VIEWS:
        raise InputError("incomplete view set: make_jf needs the complete set of views of length <= m")
    _check_elements(model)
    table = class_table(model, views)
    if any(s.mask == 0 for s in table.realized):
        raise InputError("some element satisfies no view; add a universe relation first")
    cache = {}

    def label(a):
        if a not in cache:
            cache[a] = justification_set(model, views, a, table[a])
        return cache[a]

    def build(a, level):
        facts = label(a)
        kids = ()
        if level < depth:
            others = sort_elements({e for f in facts for e in f.args} - {a})
            kids = tuple(build(c, level + 1) for c in others)
        return JustificationNode(a, facts, table[a], level, kids)

    roots = []
    for sig in sorted(table.realized, key=lambda s: element_key(table.members(s)[0])):
        roots.append(build(table.members(sig)[0], 0))
    return JustificationForest(tuple(roots), views, model.vocabulary, depth)


# renaming stages

def _prime(e, k):
    return f"{e}'" if k == 1 else f"{e}'{k}"


def rename1(forest):
    """Make tree domains pairwise disjoint; tree 0 keeps its names."""
    trees = []
    for k, root in enumerate(forest.trees):
        if k == 0:
            trees.append(root)
            continue
        dom = {e for _, n in root.walk() for f in n.facts for e in f.args}
        trees.append(root.rename({e: _prime(e, k) for e in dom}))
    return JustificationForest(tuple(trees), forest.views, forest.vocabulary, forest.depth)


def level_name(e, j, l):
    return f"{e}_{{{j},{l}}}"


def rename2(forest):
    """Rename so each constant lives in at most two consecutive levels and one label per level."""
    return JustificationForest(tuple(_rename2_tree(t) for t in forest.trees),
                               forest.views, forest.vocabulary, forest.depth)


def _rename2_tree(root):
    # BFS numbering; each entry is [anchor, facts, signature, level, child ids]
    nodes, levels, order = [], {}, [(root, None)]
    i = 0
    while i < len(order):
        node, parent = order[i]
        nodes.append([node.anchor, set(node.facts), node.signature, node.level, []])
        levels.setdefault(node.level, []).append(i)
        if parent is not None:
            nodes[parent][4].append(i)
        order.extend((ch, i) for ch in node.children)
        i += 1
    for j in sorted(levels):
        if j == 0:
            continue
        for l, nid in enumerate(levels[j]):
            anchor, facts = nodes[nid][0], nodes[nid][1]
            others = {e for f in facts for e in f.args} - {anchor}
            ren = {e: level_name(e, j, l) for e in others}
            nodes[nid][1] = set(_rename_facts(facts, ren))
            for cid in nodes[nid][4]:
                c_anchor = nodes[cid][0]
                if c_anchor in ren:
                    nodes[cid][1] = set(_rename_facts(nodes[cid][1], {c_anchor: ren[c_anchor]}))
                    nodes[cid][0] = ren[c_anchor]

    def rebuild(nid):
        a, facts, sig, level, kids = nodes[nid]
        return JustificationNode(a, frozenset(facts), sig, level, tuple(rebuild(c) for c in kids))
    return rebuild(0)


def check_rename2(forest):
    """Violations of: each constant occurs at most at two consecutive levels, in one label per level."""
    problems = []
    for t, root in enumerate(forest.trees):
        where = {}
        for path, node in root.walk():
            for e in node.adom():
                where.setdefault(e, []).append((node.level, path))
        for e, occ in where.items():
            lvls = sorted({lv for lv, _ in occ})
            if len(lvls) > 2 or (len(lvls) == 2 and lvls[1] != lvls[0] + 1):
                problems.append(f"tree {t}: constant {e} occurs at levels {lvls}")
            for lv in lvls:
                count = sum(1 for x, _ in occ if x == lv)
                if count > 1:
                    problems.append(f"tree {t}: constant {e} occurs in {count} labels at level {lv}")
    return problems


def copy_forest(forest, copies):
    """Disjoint isomorphic copies; copy 0 keeps the original names."""
    if copies < 1:
        raise InputError("number of copies must be at least 1")
    out = [forest]
    dom = {e for _, n in forest.nodes() for f in n.facts for e in f.args}
    for k in range(1, copies):
        ren = {e: f"{e}#{k}" for e in dom}
        out.append(JustificationForest(tuple(t.rename(ren) for t in forest.trees),
                                       forest.views, forest.vocabulary, forest.depth))
    return ForestFamily(tuple(out))


# regular graphs with large girth

@dataclass(frozen=True)
class RegularGraph:
    size: int
    edges: tuple
    degree: int
    girth_target: int

    def adjacency(self):
        adj = {v: [] for v in range(self.size)}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return {v: sorted(n) for v, n in adj.items()}


def girth(graph):
    """Length of a shortest cycle (BFS from every vertex); math.inf for forests."""
    if isinstance(graph, RegularGraph):
        adj = graph.adjacency()
    elif isinstance(graph, nx.Graph):
        adj = {v: list(graph.neighbors(v)) for v in graph.nodes}
    else:
        adj = {}
        for u, v in graph:
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
    best = math.inf
    for root in adj:
        dist = {root: 0}
        parent = {root: None}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    parent[w] = u
                    queue.append(w)
                elif parent[u] != w:
                    best = min(best, dist[u] + dist[w] + 1)
    return best


def moore_bound(degree, g):
    """Fewest vertices of a degree-regular graph with girth >= g."""
    if g <= 3 or degree <= 1:
        return degree + 1
    r = (g - 1) // 2
    if g % 2:
        return 1 + degree * sum((degree - 1) ** i for i in range(r))
    return 2 * sum((degree - 1) ** i for i in range(g // 2))


def displayed_bound(degree, g):
    """The extremal-graph size condition quoted for the construction (the limit g-1 at degree 2)."""
    if degree > 2:
        return -(-((degree - 1) ** (g - 1) - 1) // (degree - 2))
    return g - 1 if degree == 2 else 1


def _short_cycle_edges(G, g):
    bad = []
    for u, v in G.edges:
        G.remove_edge(u, v)
        try:
            d = nx.shortest_path_length(G, u, v)
        except nx.NetworkXNoPath:
            d = math.inf
        G.add_edge(u, v)
        if d + 1 < g:
            bad.append((u, v))
    return bad


def generate_regular_girth(degree, g, size, seed=0, max_retries=100, swaps=2000):
    """Random degree-regular graph on `size` vertices with girth >= g, repaired by edge swaps."""
    if degree < 0 or (degree * size) % 2:
        raise InputError(f"degree*size must be even (degree={degree}, size={size})")
    if size <= degree:
        raise InputError(f"size {size} must exceed the degree {degree}")
    if size < moore_bound(degree, g):
        raise InputError(f"no {degree}-regular graph of girth >= {g} has {size} vertices "
                         f"(needs at least {moore_bound(degree, g)})")
    rng = random.Random(seed)
    for attempt in range(max_retries):
        G = nx.random_regular_graph(degree, size, seed=rng.randrange(2 ** 32))
        bad = _short_cycle_edges(G, g)
        for _ in range(swaps):
            if not bad:
                break
            u, v = rng.choice(bad)
            if rng.random() < 0.5:
                u, v = v, u
            x, y = rng.choice(list(G.edges))
            if rng.random() < 0.5:
                x, y = y, x
            if len({u, v, x, y}) < 4 or G.has_edge(u, x) or G.has_edge(v, y):
                continue
            G.remove_edges_from([(u, v), (x, y)])
            G.add_edges_from([(u, x), (v, y)])
            new_bad = _short_cycle_edges(G, g)
            if len(new_bad) <= len(bad) or rng.random() < 0.05:
                bad = new_bad
            else:
                G.remove_edges_from([(u, x), (v, y)])
                G.add_edges_from([(u, v), (x, y)])
        if not bad:
            edges = tuple(sorted(tuple(sorted(e)) for e in G.edges))
            graph = RegularGraph(size, edges, degree, g)
            verify_regular_graph(graph)
            return graph
    raise ResourceError(f"no {degree}-regular girth >= {g} graph on {size} vertices after "
                        f"{max_retries} retries; try another seed")


def verify_regular_graph(graph):
    adj = graph.adjacency()
    for v, ns in adj.items():
        if len(ns) != graph.degree or len(set(ns)) != len(ns) or v in ns:
            raise ConstructionError(f"vertex {v} breaks {graph.degree}-regularity")
    if girth(graph) < graph.girth_target:
        raise ConstructionError(f"girth {girth(graph)} below {graph.girth_target}")


# prune

def prune(family, linkgraph, views, h=None):
    """Cut every copy at level h and re-justify each leaf by a root of the copy its arc points to."""
    h = family.depth - 1 if h is None else h
    adj = linkgraph.adjacency() if linkgraph is not None else {}
    if len(family.copies) != max(len(adj), 1):
        raise InputError(f"family has {len(family.copies)} copies but the link graph has {len(adj)} vertices")
    routes = []
    new_copies = []
    for k, forest in enumerate(family.copies):
        leaves = [loc for loc, n in forest.nodes() if n.level == h]
        arcs = adj.get(k, [])
        if len(leaves) > len(arcs):
            raise InputError(f"bijection infeasible: copy {k} has {len(leaves)} leaves at level {h} "
                             f"but {len(arcs)} outgoing arcs")
        target = {loc: arcs[i] for i, loc in enumerate(leaves)}
        trees = []
        for t, root in enumerate(forest.trees):
            trees.append(_prune_node(root, (t,), h, target, family, routes, k))
        new_copies.append(JustificationForest(tuple(trees), forest.views, forest.vocabulary, h))
    pruned = ForestFamily(tuple(new_copies))
    return pruned.structure(), pruned, routes


def _prune_node(node, loc, h, target, family, routes, k):
    if node.level < h:
        kids = tuple(_prune_node(ch, loc + (i,), h, target, family, routes, k)
                     for i, ch in enumerate(node.children))
        return JustificationNode(node.anchor, node.facts, node.signature, node.level, kids)
    k2 = target[loc]
    roots = [r for r in family.copies[k2].trees if r.signature == node.signature]
    if not roots:
        raise ConstructionError(f"class {node.signature} has no root in copy {k2}")
    root = roots[0]
    facts = _rename_facts(root.facts, {root.anchor: node.anchor})
    routes.append((k, loc, k2, root.anchor))
    return JustificationNode(node.anchor, facts, node.signature, node.level, ())


# checkers

@dataclass(frozen=True)
class JsReport:
    ok: bool
    violations: tuple = ()
    nodes_checked: int = 0


def check_invariant_js(forest, structure, views=None):
    """Every node's anchor has the node's class and its label witnesses the positive views."""
    views = views if views is not None else forest.views
    table = class_table(structure, views)
    vocab = structure.vocabulary
    violations = []
    count = 0
    for loc, node in forest.nodes():
        count += 1
        if node.anchor not in table.signatures:
            violations.append((loc, f"anchor {node.anchor} missing from the structure"))
            continue
        if table[node.anchor] != node.signature:
            violations.append((loc, f"anchor {node.anchor} has {table[node.anchor]}, label says {node.signature}"))
        for j in node.signature.positive():
            if not _view_holds(views[j], node.anchor, node.facts, vocab):
                violations.append((loc, f"label of {node.anchor} does not witness {views[j].name}"))
    return JsReport(not violations, tuple(violations), count)


@dataclass(frozen=True)
class ClassPreservation:
    ok: bool
    missing: tuple = ()
    extra: tuple = ()


def check_class_preservation(before, after, views, before_elements=None, after_elements=None):
    """Equal realized signature sets (optionally restricted to given elements)."""
    tb = class_table(before, views)
    ta = class_table(after, views)
    rb = {tb[e] for e in (before_elements if before_elements is not None else before.universe)}
    ra = {ta[e] for e in (after_elements if after_elements is not None else after.universe)}
    missing = tuple(sorted((s.label for s in rb - ra)))
    extra = tuple(sorted((s.label for s in ra - rb)))
    return ClassPreservation(not missing and not extra, missing, extra)


# driver

@dataclass(frozen=True)
class StageReport:
    stage: str
    subproperty: int
    size: int
    js: JsReport | None
    classes: ClassPreservation | None
    notes: tuple = ()

    @property
    def ok(self):
        return (self.js is None or self.js.ok) and (self.classes is None or self.classes.ok) and not any(
            n.startswith("FAIL") for n in self.notes)


@dataclass(frozen=True)
class PipelineResult:
    model: Structure | None
    stages: tuple
    parameters: dict
    size_bound: int | None
    diagnostics: tuple = ()

    @property
    def ok(self):
        return self.model is not None and all(s.ok for s in self.stages) and not self.diagnostics


def admissible_sizes(degree, g):
    """Candidate copy counts in increasing order, starting at the smallest admissible one."""
    size = max(degree + 1, displayed_bound(degree, g), moore_bound(degree, g))
    while True:
        if (degree * size) % 2 == 0:
            yield size
        size += 1


def run_pipeline(model, sentence, views, c=1, copies=None, depth=None, seed=0, max_graph_sizes=20):
    """Shrink-and-rebuild a model of the sentence through the five stages, checking each."""
    if not all(v.is_pure for v in views):
        raise UnsupportedDialectError("the construction is defined for pure views only")
    if not model_check(sentence, model, views):
        raise PreconditionError("input model does not satisfy the sentence")
    used = [v for v in views]
    m = max(v.length for v in used)
    h = g = c * m
    vocab = model.vocabulary
    complete = enumerate_views(vocab, m)
    base = model
    universe_rel = None
    if any(s.mask == 0 for s in class_table(model, complete).realized):
        universe_rel = vocab.fresh_name("U")
        vocab = vocab.extend(universe_rel, 1)
        base = model.with_vocabulary(vocab, {universe_rel: {(e,) for e in model.universe}})
        complete = enumerate_views(vocab, m)
    complete = prioritize(complete, used)
    n_views = complete.N
    depth = h + 1 if depth is None else depth
    params = {"c": c, "m": m, "h": h, "g": g, "N": n_views, "depth": depth,
              "universe_relation": universe_rel}
    stages = []

    def stage(name, sub, forest_like, structure, notes=()):
        js = check_invariant_js(forest_like, structure, complete)
        cls = check_class_preservation(base, structure, complete, after_elements=forest_like.anchors())
        rep = StageReport(name, sub, structure.size, js, cls, tuple(notes))
        stages.append(rep)
        return rep

    f1 = make_jf(base, complete, depth)
    i1 = f1.structure()
    stage("makeJF", 1, f1, i1)
    f2 = rename1(f1)
    stage("rename1", 2, f2, f2.structure())
    f3 = rename2(f2)
    problems = check_rename2(f3)
    stage("rename2", 3, f3, f3.structure(), ["FAIL " + p for p in problems])

    leaves = len(f3.level_nodes(h))
    params["delta"] = leaves
    diagnostics = []
    graph = None
    if leaves == 0:
        n_copies = 1 if copies is None else copies
    elif copies is not None:
        n_copies = copies
        try:
            graph = generate_regular_girth(leaves, g, n_copies, seed)
        except (InputError, ResourceError) as e:
            diagnostics.append(f"subproperty 5 (prune): cannot link {n_copies} copies: {e}")
    else:
        n_copies = None
        for k, size in enumerate(admissible_sizes(leaves, g)):
            if k >= max_graph_sizes:
                break
            try:
                graph = generate_regular_girth(leaves, g, size, seed)
                n_copies = size
                break
            except ResourceError:
                continue
        if graph is None:
            raise ResourceError("no link graph found for the admissible copy counts tried")
    params["copies"] = n_copies
    paper_copies = leaves ** g if leaves else 1
    params["paper_copies"] = paper_copies
    family = copy_forest(f3, n_copies)
    notes = []
    if n_copies != paper_copies:
        notes.append(f"copies = {n_copies} instead of delta^g = {paper_copies}")
    stage("copy", 4, family, family.structure(), notes)
    size_bound = n_copies * 2 ** n_views * (n_views * m) ** (h + 1)
    params["size_bound"] = size_bound

    if diagnostics:
        return PipelineResult(None, tuple(stages), params, size_bound, tuple(diagnostics))
    if leaves:
        try:
            i5, f5, routes = prune(family, graph, complete, h)
        except InputError as e:
            diagnostics.append(f"subproperty 5 (prune): {e}")
            return PipelineResult(None, tuple(stages), params, size_bound, tuple(diagnostics))
    else:
        f5, i5 = family, family.structure()
    js = check_invariant_js(f5, i5, complete)
    cls = check_class_preservation(base, i5, complete)
    notes = []
    if i5.size > size_bound:
        notes.append(f"FAIL size {i5.size} exceeds bound {size_bound}")
    rels = {n: ts for n, ts in i5.relations.items() if n != universe_rel}
    result = Structure(model.vocabulary, rels, i5.universe)
    if not model_check(sentence, result, views):
        notes.append("FAIL final structure does not satisfy the sentence")
    rep = StageReport("prune", 5, i5.size, js, cls, tuple(notes))
    stages.append(rep)
    if not rep.ok:
        what = []
        if not js.ok:
            what.append(f"justification invariant broken at {len(js.violations)} nodes")
        if not cls.ok:
            what.append(f"classes missing {cls.missing}, extra {cls.extra}")
        what += [n for n in notes if n.startswith("FAIL")]
        diagnostics.append("subproperty 5 (prune): " + "; ".join(what))
        return PipelineResult(None, tuple(stages), params, size_bound, tuple(diagnostics))
    return PipelineResult(result, tuple(stages), params, size_bound, ())
