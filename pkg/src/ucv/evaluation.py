"""Semantics: homomorphism search, view evaluation, the view image map, class tables, model checking."""
from __future__ import annotations

from dataclasses import dataclass

from .core import (And, Exists, Not, RelAtom, Structure, ViewAtom, ViewSet, Vocabulary,
                   element_key, free_vars)
from .errors import InputError, UnsupportedDialectError


class _Csp:
    """Conjunctive constraint problem: map variables into a target structure.

    Variables are assigned in order of descending degree (ties by first occurrence);
    after each assignment the domains of co-occurring variables are filtered
    against the target tuples (forward checking).
    """

    def __init__(self, variables, atoms, target, neqs=(), negs=()):
        self.vars = list(dict.fromkeys(variables))
        self.atoms = [(r, tuple(args)) for r, args in atoms]
        self.neqs = list(neqs)
        self.negs = [(r, tuple(args)) for r, args in negs]
        self.target = target
        self.rel = {}
        for r, _ in self.atoms + self.negs:
            if r not in self.rel:
                self.rel[r] = target.tuples(r) if r in target.vocabulary else frozenset()
        self.index = {}
        self.occ = {v: [] for v in self.vars}
        for i, (_, args) in enumerate(self.atoms):
            for v in set(args):
                self.occ[v].append(i)
        self.neq_of = {v: [] for v in self.vars}
        for x, y in self.neqs:
            self.neq_of[x].append((x, y))
            self.neq_of[y].append((x, y))
        self.neg_of = {v: [] for v in self.vars}
        for a in self.negs:
            for v in set(a[1]):
                self.neg_of[v].append(a)
        first = {v: i for i, v in enumerate(self.vars)}
        self.order = sorted(self.vars, key=lambda v: (-len(self.occ[v]), first[v]))

    def _candidates(self, r, args, assign, pos_hint=None):
        tuples = self.rel[r]
        best = None
        for i, v in enumerate(args):
            if v in assign:
                key = (r, i, assign[v])
                lst = self.index.get(key)
                if lst is None:
                    self._build_index(r)
                    lst = self.index.get(key, ())
                if best is None or len(lst) < len(best):
                    best = lst
        return tuples if best is None else best

    def _build_index(self, r):
        if (r, "built") in self.index:
            return
        for t in self.rel[r]:
            for i, e in enumerate(t):
                self.index.setdefault((r, i, e), []).append(t)
        self.index[(r, "built")] = True

    def _supports(self, r, args, assign):
        """Tuples of r consistent with the current partial assignment."""
        out = []
        for t in self._candidates(r, args, assign):
            local = {}
            ok = True
            for v, e in zip(args, t):
                if v in assign:
                    if assign[v] != e:
                        ok = False
                        break
                elif local.setdefault(v, e) != e:
                    ok = False
                    break
            if ok:
                out.append(local)
        return out

    def initial_domains(self, universe):
        doms = {v: set(universe) for v in self.vars}
        for r, args in self.atoms:
            sup = self._supports(r, args, {})
            for v in set(args):
                doms[v] &= {loc[v] for loc in sup}
        return doms

    def solutions(self, pins=None, domains=None):
        pins = dict(pins or {})
        doms = domains if domains is not None else self.initial_domains(self.target.universe)
        doms = {v: set(d) for v, d in doms.items()}
        for v, e in pins.items():
            if e not in doms[v]:
                return
            doms[v] = {e}
        order = [v for v in self.order if v in pins] + [v for v in self.order if v not in pins]
        yield from self._search(order, 0, {}, doms)

    def _search(self, order, k, assign, doms):
        if k == len(order):
            yield dict(assign)
            return
        v = order[k]
        for e in sorted(doms[v], key=element_key):
            assign[v] = e
            new = self._propagate(v, assign, doms)
            if new is not None:
                yield from self._search(order, k + 1, assign, new)
            del assign[v]

    def _propagate(self, v, assign, doms):
        for x, y in self.neq_of[v]:
            if x in assign and y in assign and assign[x] == assign[y]:
                return None
        for r, args in self.neg_of[v]:
            if all(a in assign for a in args) and tuple(assign[a] for a in args) in self.rel[r]:
                return None
        new = None
        for i in self.occ[v]:
            r, args = self.atoms[i]
            free = [a for a in set(args) if a not in assign]
            if not free:
                if tuple(assign[a] for a in args) not in self.rel[r]:
                    return None
                continue
            sup = self._supports(r, args, assign)
            if not sup:
                return None
            if new is None:
                new = dict(doms)
            for a in free:
                d = new[a] & {loc[a] for loc in sup}
                if not d:
                    return None
                new[a] = d
        return new if new is not None else doms


def iter_homomorphisms(src, dst, pins=None):
    atoms = [(f.relation, f.args) for f in src.facts()]
    csp = _Csp(src.universe, atoms, dst)
    for v in pins or {}:
        if v not in set(src.universe):
            raise InputError(f"pin source {v!r} not in the source universe")
    for v, e in (pins or {}).items():
        if e not in set(dst.universe):
            raise InputError(f"pin target {e!r} not in the target universe")
    yield from csp.solutions(pins)


def find_homomorphism(src, dst, pins=None):
    """A homomorphism src -> dst extending `pins`, or None."""
    return next(iter_homomorphisms(src, dst, pins), None)


def _check_vocabulary(view, structure):
    if view.recursive:
        raise UnsupportedDialectError(f"view {view.name} is recursive; recursive views are recognized only")
    for a in view.body + view.negated:
        if a.relation not in structure.vocabulary:
            raise InputError(f"vocabulary mismatch: view {view.name} uses {a.relation}, "
                             f"structure has {structure.vocabulary}")
        if structure.vocabulary.arity(a.relation) != a.arity:
            raise InputError(f"vocabulary mismatch: arity of {a.relation}")


def view_csp(view, structure):
    _check_vocabulary(view, structure)
    return _Csp(view.variables, [(a.relation, a.args) for a in view.body], structure,
                view.inequalities, [(a.relation, a.args) for a in view.negated])


def eval_view(view, structure):
    csp = view_csp(view, structure)
    doms = csp.initial_domains(structure.universe)
    out = set()
    for a in sorted(doms[view.head], key=element_key):
        if next(csp.solutions({view.head: a}, doms), None) is not None:
            out.add(a)
    return frozenset(out)


def lambda_map(structure, views):
    """Unary structure over the view names, same universe."""
    vocab = Vocabulary(tuple((v.name, 1) for v in views))
    rels = {v.name: {(a,) for a in eval_view(v, structure)} for v in views}
    return Structure(vocab, rels, structure.universe)


@dataclass(frozen=True)
class ClassSignature:
    mask: int
    width: int

    def bit(self, j):
        return bool(self.mask >> j & 1)

    @property
    def label(self):
        return "".join("1" if self.mask >> j & 1 else "0" for j in range(self.width))

    def positive(self):
        return [j for j in range(self.width) if self.mask >> j & 1]

    def __str__(self):
        return "C_" + self.label


def signature(label):
    """ClassSignature from a label such as '101' (first character is the first view)."""
    return ClassSignature(sum(1 << j for j, ch in enumerate(label) if ch == "1"), len(label))


@dataclass(frozen=True)
class ClassTable:
    views: tuple
    signatures: dict

    @property
    def realized(self):
        return frozenset(self.signatures.values())

    def members(self, sig):
        return sorted((e for e, s in self.signatures.items() if s == sig), key=element_key)

    def __getitem__(self, element):
        return self.signatures[element]


def class_table(structure, views):
    ext = [eval_view(v, structure) for v in views]
    width = len(ext)
    sigs = {}
    for e in structure.universe:
        mask = 0
        for j, s in enumerate(ext):
            if e in s:
                mask |= 1 << j
        sigs[e] = ClassSignature(mask, width)
    return ClassTable(tuple(v.name for v in views), sigs)


def realized_masks(structure, views):
    return frozenset(s.mask for s in class_table(structure, views).realized)


def view_extensions(structure, views):
    return {v.name: eval_view(v, structure) for v in views}


def model_check(formula, structure, views=None, extensions=None):
    """Truth value of a sentence, or the satisfying set for a formula with one free variable.

    `extensions` may hold precomputed view images (see view_extensions) to share across calls.
    """
    fv = free_vars(formula)
    if len(fv) > 1:
        raise InputError(f"formula has {len(fv)} free variables; at most one is supported")
    cache = dict(extensions or {})
    by_name = {v.name: v for v in views} if views is not None else {}

    def ext(name):
        if name not in cache:
            if name not in by_name:
                raise InputError(f"undefined view {name}")
            cache[name] = eval_view(by_name[name], structure)
        return cache[name]

    universe = structure.universe

    def ev(f, env):
        if isinstance(f, ViewAtom):
            return env[f.var] in ext(f.view)
        if isinstance(f, RelAtom):
            return tuple(env[v] for v in f.args) in structure.tuples(f.relation)
        if isinstance(f, Not):
            return not ev(f.body, env)
        if isinstance(f, And):
            return all(ev(p, env) for p in f.parts)
        if isinstance(f, Exists):
            saved = env.get(f.var, _MISSING)
            try:
                for a in universe:
                    env[f.var] = a
                    if ev(f.body, env):
                        return True
                return False
            finally:
                if saved is _MISSING:
                    env.pop(f.var, None)
                else:
                    env[f.var] = saved
        raise TypeError(f"not a formula: {f!r}")

    if not fv:
        return ev(formula, {})
    (x,) = fv
    return frozenset(a for a in universe if ev(formula, {x: a}))


_MISSING = object()
