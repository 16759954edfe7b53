"""Value types: vocabularies, structures, views, formulas and basic metrics."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple

from .errors import InputError, UnsafeViewError


def element_key(e):
    """Total order on elements: integers first (numerically), then strings."""
    if isinstance(e, bool) or not isinstance(e, (int, str)):
        raise InputError(f"elements must be int or str, got {e!r}")
    return (0, e, "") if isinstance(e, int) else (1, 0, e)


def sort_elements(elements):
    return tuple(sorted(set(elements), key=element_key))


def is_identifier(name):
    return bool(name) and (name[0].isalpha() or name[0] == "_") and all(
        ch.isalnum() or ch in "_'" for ch in name)


@dataclass(frozen=True)
class Vocabulary:
    symbols: tuple = ()

    def __post_init__(self):
        symbols = tuple((str(n), int(a)) for n, a in self.symbols)
        names = [n for n, _ in symbols]
        if len(set(names)) != len(names):
            raise InputError(f"duplicate relation symbol in {names}")
        for n, a in symbols:
            if not is_identifier(n):
                raise InputError(f"bad relation name {n!r}")
            if a < 1:
                raise InputError(f"relation {n} has arity {a}; constants and nullary symbols are not allowed")
        object.__setattr__(self, "symbols", symbols)

    @property
    def p(self):
        return len(self.symbols)

    @property
    def names(self):
        return tuple(n for n, _ in self.symbols)

    def arity(self, name):
        for n, a in self.symbols:
            if n == name:
                return a
        raise InputError(f"unknown relation {name}")

    def __contains__(self, name):
        return any(n == name for n, _ in self.symbols)

    def __len__(self):
        return len(self.symbols)

    def extend(self, name, arity):
        return Vocabulary(self.symbols + ((name, arity),))

    def union(self, other):
        out = list(self.symbols)
        for n, a in other.symbols:
            if n in self:
                if self.arity(n) != a:
                    raise InputError(f"arity clash for {n}")
            else:
                out.append((n, a))
        return Vocabulary(tuple(out))

    def fresh_name(self, base):
        name, k = base, 0
        while name in self:
            k += 1
            name = f"{base}{k}"
        return name

    def __str__(self):
        return "{" + ", ".join(f"{n}/{a}" for n, a in self.symbols) + "}"


class Fact(NamedTuple):
    relation: str
    args: tuple

    def __str__(self):
        return f"{self.relation}({','.join(map(str, self.args))})"


def fact_key(f):
    return (f.relation, tuple(element_key(e) for e in f.args))


class Structure:
    """Finite relational structure; immutable after construction."""

    __slots__ = ("vocabulary", "universe", "relations", "_hash")

    def __init__(self, vocabulary, relations=None, universe=None):
        rels = {}
        relations = relations or {}
        for name in relations:
            if name not in vocabulary:
                raise InputError(f"unknown relation {name}")
        for name, arity in vocabulary.symbols:
            tuples = set()
            for t in relations.get(name, ()):
                t = tuple(t)
                if len(t) != arity:
                    raise InputError(f"arity mismatch: {name}{t} but {name}/{arity}")
                for e in t:
                    element_key(e)
                tuples.add(t)
            rels[name] = frozenset(tuples)
        active = {e for ts in rels.values() for t in ts for e in t}
        if universe is None:
            universe = active
        universe = sort_elements(universe)
        missing = active - set(universe)
        if missing:
            raise InputError(f"tuple elements outside the universe: {sorted(map(str, missing))}")
        if not universe:
            raise InputError("universe must be nonempty")
        object.__setattr__(self, "vocabulary", vocabulary)
        object.__setattr__(self, "universe", universe)
        object.__setattr__(self, "relations", MappingProxyType(rels))
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, key, value):
        raise AttributeError("Structure is immutable")

    @classmethod
    def from_facts(cls, vocabulary, facts, universe=None):
        rels = {}
        for f in facts:
            rels.setdefault(f[0], set()).add(tuple(f[1]))
        return cls(vocabulary, rels, universe)

    def tuples(self, name):
        return self.relations.get(name, frozenset())

    def facts(self):
        return sorted((Fact(n, t) for n, ts in self.relations.items() for t in ts), key=fact_key)

    def adom(self):
        return frozenset(e for ts in self.relations.values() for t in ts for e in t)

    def __len__(self):
        return len(self.universe)

    @property
    def size(self):
        return len(self.universe)

    def rename(self, mapping):
        """Apply an injective element renaming (missing keys map to themselves)."""
        m = lambda e: mapping.get(e, e)
        rels = {n: {tuple(m(e) for e in t) for t in ts} for n, ts in self.relations.items()}
        return Structure(self.vocabulary, rels, [m(e) for e in self.universe])

    def with_vocabulary(self, vocabulary, extra=None):
        rels = dict(self.relations)
        rels.update(extra or {})
        return Structure(vocabulary, rels, self.universe)

    def _key(self):
        return (self.vocabulary, self.universe,
                tuple(sorted((n, frozenset(ts)) for n, ts in self.relations.items())))

    def __eq__(self, other):
        if not isinstance(other, Structure):
            return NotImplemented
        return (self.vocabulary == other.vocabulary and self.universe == other.universe
                and dict(self.relations) == dict(other.relations))

    def __hash__(self):
        if self._hash is None:
            object.__setattr__(self, "_hash", hash((self.vocabulary, self.universe,
                                                   frozenset(self.relations.items()))))
        return self._hash

    def __repr__(self):
        body = ", ".join(str(f) for f in self.facts())
        return f"Structure(universe={list(self.universe)}, facts=[{body}])"


def adom(structure):
    return structure.adom()


class Dialect(str, Enum):
    UCV = "UCV"
    UCV_NEQ = "UCV!="
    UCV_NEG = "UCV-neg"
    UCV_REC = "UCV-rec"

    @property
    def rank(self):
        return list(Dialect).index(self)

    @property
    def is_pure(self):
        return self is Dialect.UCV


def max_dialect(dialects):
    out = Dialect.UCV
    for d in dialects:
        if d.rank > out.rank:
            out = d
    return out


@dataclass(frozen=True)
class Atom:
    relation: str
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))

    @property
    def arity(self):
        return len(self.args)

    def __str__(self):
        return f"{self.relation}({','.join(self.args)})"


@dataclass(frozen=True)
class ConjunctiveView:
    """Unary view `name(head) <- body`, optionally with x != y and negated atoms."""
    name: str
    head: str
    body: tuple
    inequalities: tuple = ()
    negated: tuple = ()
    recursive: bool = False

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        object.__setattr__(self, "inequalities", tuple(tuple(p) for p in self.inequalities))
        object.__setattr__(self, "negated", tuple(self.negated))
        positive = {v for a in self.body for v in a.args}
        if self.head not in positive:
            raise UnsafeViewError(f"unsafe view {self.name}: head variable {self.head} "
                                  "does not occur in a positive body atom")
        for x, y in self.inequalities:
            if x not in positive or y not in positive:
                raise UnsafeViewError(f"unsafe view {self.name}: inequality {x} != {y} "
                                      "uses a variable absent from the positive body")
        for a in self.negated:
            if not set(a.args) <= positive:
                raise UnsafeViewError(f"unsafe view {self.name}: negated atom {a} "
                                      "uses a variable absent from the positive body")

    @property
    def length(self):
        return sum(a.arity for a in self.body)

    @property
    def variables(self):
        seen = []
        for a in self.body:
            for v in a.args:
                if v not in seen:
                    seen.append(v)
        return tuple(seen)

    @property
    def relations(self):
        return frozenset(a.relation for a in self.body + self.negated)

    @property
    def dialect(self):
        if self.recursive:
            return Dialect.UCV_REC
        if self.negated:
            return Dialect.UCV_NEG
        if self.inequalities:
            return Dialect.UCV_NEQ
        return Dialect.UCV

    @property
    def is_pure(self):
        return self.dialect is Dialect.UCV

    def vocabulary(self):
        arities = {}
        for a in self.body + self.negated:
            arities.setdefault(a.relation, a.arity)
        return Vocabulary(tuple(sorted(arities.items())))

    def canonical_database(self, vocabulary=None):
        """Body as a structure whose elements are the variable names."""
        vocab = vocabulary if vocabulary is not None else self.vocabulary()
        return Structure.from_facts(vocab, [(a.relation, a.args) for a in self.body])

    def renamed(self, name):
        return ConjunctiveView(name, self.head, self.body, self.inequalities, self.negated, self.recursive)

    def __str__(self):
        parts = [str(a) for a in self.body]
        parts += [f"{x} != {y}" for x, y in self.inequalities]
        parts += [f"!{a}" for a in self.negated]
        return f"{self.name}({self.head}) <- {', '.join(parts)}"


def view_length(view):
    return view.length


# formulas

@dataclass(frozen=True)
class ViewAtom:
    view: str
    var: str


@dataclass(frozen=True)
class RelAtom:
    relation: str
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class Not:
    body: object


@dataclass(frozen=True)
class And:
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if len(self.parts) < 2:
            raise ValueError("And needs at least two parts")


@dataclass(frozen=True)
class Exists:
    var: str
    body: object


def conj(*parts):
    parts = [p for p in parts]
    return parts[0] if len(parts) == 1 else And(tuple(parts))


def disj(*parts):
    parts = list(parts)
    return parts[0] if len(parts) == 1 else Not(And(tuple(Not(p) for p in parts)))


def implies(a, b):
    return disj(Not(a), b)


def iff(a, b):
    return And((implies(a, b), implies(b, a)))


def forall(var, body):
    return Not(Exists(var, Not(body)))


def free_vars(f):
    if isinstance(f, ViewAtom):
        return frozenset([f.var])
    if isinstance(f, RelAtom):
        return frozenset(f.args)
    if isinstance(f, Not):
        return free_vars(f.body)
    if isinstance(f, And):
        return frozenset().union(*(free_vars(p) for p in f.parts))
    if isinstance(f, Exists):
        return free_vars(f.body) - {f.var}
    raise TypeError(f"not a formula: {f!r}")


def is_sentence(f):
    return not free_vars(f)


def qrank(f):
    if isinstance(f, (ViewAtom, RelAtom)):
        return 0
    if isinstance(f, Not):
        return qrank(f.body)
    if isinstance(f, And):
        return max(qrank(p) for p in f.parts)
    if isinstance(f, Exists):
        return 1 + qrank(f.body)
    raise TypeError(f"not a formula: {f!r}")


def view_names(f):
    if isinstance(f, ViewAtom):
        return frozenset([f.view])
    if isinstance(f, RelAtom):
        return frozenset()
    if isinstance(f, Not):
        return view_names(f.body)
    if isinstance(f, And):
        return frozenset().union(*(view_names(p) for p in f.parts))
    if isinstance(f, Exists):
        return view_names(f.body)
    raise TypeError(f"not a formula: {f!r}")


def substitute(f, old, new):
    """Replace free occurrences of variable `old` by `new` (new must not be captured)."""
    if isinstance(f, ViewAtom):
        return ViewAtom(f.view, new) if f.var == old else f
    if isinstance(f, RelAtom):
        return RelAtom(f.relation, tuple(new if v == old else v for v in f.args))
    if isinstance(f, Not):
        return Not(substitute(f.body, old, new))
    if isinstance(f, And):
        return And(tuple(substitute(p, old, new) for p in f.parts))
    if isinstance(f, Exists):
        if f.var == old:
            return f
        if f.var == new:
            raise InputError(f"substituting {old}->{new} would be captured")
        return Exists(f.var, substitute(f.body, old, new))
    raise TypeError(f"not a formula: {f!r}")


def bound_vars(f):
    if isinstance(f, (ViewAtom, RelAtom)):
        return frozenset()
    if isinstance(f, Not):
        return bound_vars(f.body)
    if isinstance(f, And):
        return frozenset().union(*(bound_vars(p) for p in f.parts))
    return bound_vars(f.body) | {f.var}


# view sets

FORMULA_VIEWS = "V"
ALL_VIEWS = "U"


@dataclass(frozen=True)
class ViewSet:
    views: tuple
    role: str = FORMULA_VIEWS
    m: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "views", tuple(self.views))
        if self.role not in (FORMULA_VIEWS, ALL_VIEWS):
            raise InputError(f"unknown view-set role {self.role}")
        names = [v.name for v in self.views]
        if len(set(names)) != len(names) and not any(v.recursive for v in self.views):
            raise InputError(f"duplicate view names in {names}")
        if self.m is None:
            object.__setattr__(self, "m", max((v.length for v in self.views), default=0))

    @property
    def N(self):
        return len(self.views)

    def __len__(self):
        return len(self.views)

    def __iter__(self):
        return iter(self.views)

    def __getitem__(self, i):
        return self.views[i]

    @property
    def names(self):
        return tuple(v.name for v in self.views)

    def index(self, name):
        for i, v in enumerate(self.views):
            if v.name == name:
                return i
        raise InputError(f"undefined view {name}")

    def get(self, name):
        return self.views[self.index(name)]

    @property
    def dialect(self):
        return max_dialect(v.dialect for v in self.views)

    def relations(self):
        return frozenset().union(*(v.relations for v in self.views)) if self.views else frozenset()

    def restrict(self, names):
        keep = [v for v in self.views if v.name in set(names)]
        return ViewSet(tuple(keep), FORMULA_VIEWS)


# Gaifman graph

@dataclass(frozen=True)
class GaifmanEdge:
    u: object
    v: object
    label: Fact
    weight: int


@dataclass(frozen=True)
class GaifmanGraph:
    vertices: tuple
    edges: tuple = field(default=())

    @classmethod
    def of(cls, structure):
        edges = []
        for f in structure.facts():
            elems = sort_elements(f.args)
            w = len(f.args)
            for i, u in enumerate(elems):
                for v in elems[i + 1:]:
                    edges.append(GaifmanEdge(u, v, f, w))
        return cls(structure.universe, tuple(edges))

    def adjacency(self):
        adj = {v: {} for v in self.vertices}
        for e in self.edges:
            for a, b in ((e.u, e.v), (e.v, e.u)):
                if b not in adj[a] or e.weight < adj[a][b]:
                    adj[a][b] = e.weight
        return adj

    def distances_from(self, sources):
        adj = self.adjacency()
        dist = {s: 0 for s in sources}
        heap = [(0, element_key(s), s) for s in sources]
        heapq.heapify(heap)
        while heap:
            d, _, u = heapq.heappop(heap)
            if d > dist.get(u, math.inf):
                continue
            for v, w in adj[u].items():
                nd = d + w
                if nd < dist.get(v, math.inf):
                    dist[v] = nd
                    heapq.heappush(heap, (nd, element_key(v), v))
        return dist


def _as_elements(structure, x):
    if isinstance(x, Fact):
        items = list(x.args)
    elif isinstance(x, (int, str)) and not isinstance(x, bool):
        items = [x]
    else:
        items = []
        for y in x:
            items.extend(y.args if isinstance(y, Fact) else [y])
    universe = set(structure.universe)
    for e in items:
        if e not in universe:
            raise InputError(f"unknown element {e!r}")
    return items


def gaifman_distance(structure, a, b):
    """Weighted shortest-path distance; sets of elements or facts use the minimum over pairs."""
    src = _as_elements(structure, a)
    dst = _as_elements(structure, b)
    if not src or not dst:
        return math.inf
    dist = GaifmanGraph.of(structure).distances_from(src)
    return min(dist.get(e, math.inf) for e in dst)
