"""Satisfiability: rank-1 normalization, the signature abstraction, bounded model search, verdicts."""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .cnf import Cnf, solve
from .core import (And, Dialect, Exists, Not, RelAtom, Structure, ViewAtom, ViewSet, Vocabulary,
                   free_vars, view_names)
from .errors import (InputError, ResourceError, UnsupportedCertificationError,
                     UnsupportedDialectError)
from .evaluation import model_check
from .views import containment_lattice


# rank-1 forms

@dataclass(frozen=True)
class ClassLit:
    """`exists x` over the signature cube (pos bits set, neg bits clear); negated when not positive.

    A cube stands for the disjunction of the class literals of all its completions.
    """
    pos: int
    neg: int
    positive: bool = True

    def holds(self, realized):
        hit = any(s & self.pos == self.pos and s & self.neg == 0 for s in realized)
        return hit if self.positive else not hit

    def negate(self):
        return ClassLit(self.pos, self.neg, not self.positive)


@dataclass(frozen=True)
class R1And:
    parts: tuple


@dataclass(frozen=True)
class R1Or:
    parts: tuple


@dataclass(frozen=True)
class R1Const:
    value: bool


TRUE = R1Const(True)
FALSE = R1Const(False)


def _masks(realized):
    return frozenset(getattr(s, "mask", s) for s in realized)


def r1_eval(node, realized):
    if isinstance(node, ClassLit):
        return node.holds(realized)
    if isinstance(node, R1And):
        return all(r1_eval(p, realized) for p in node.parts)
    if isinstance(node, R1Or):
        return any(r1_eval(p, realized) for p in node.parts)
    return node.value


def r1_literals(node):
    if isinstance(node, ClassLit):
        return {ClassLit(node.pos, node.neg)}
    if isinstance(node, (R1And, R1Or)):
        return set().union(*(r1_literals(p) for p in node.parts)) if node.parts else set()
    return set()


@dataclass(frozen=True)
class Rank1Form:
    root: object
    views: tuple

    @property
    def width(self):
        return len(self.views)

    def evaluate(self, realized):
        return r1_eval(self.root, _masks(realized))

    def literals(self):
        return sorted(r1_literals(self.root), key=lambda c: (c.pos, c.neg))

    def expanded(self):
        """Same form with each cube replaced by the disjunction of its full signatures."""
        full = (1 << self.width) - 1

        def exp(node):
            if isinstance(node, ClassLit):
                sigs = [s for s in range(full + 1) if s & node.pos == node.pos and s & node.neg == 0]
                lits = [ClassLit(s, full & ~s) for s in sigs]
                inner = _mk_or(lits)
                return inner if node.positive else _negate(inner)
            if isinstance(node, R1And):
                return _mk_and([exp(p) for p in node.parts])
            if isinstance(node, R1Or):
                return _mk_or([exp(p) for p in node.parts])
            return node
        return Rank1Form(exp(self.root), self.views)


def _negate(node):
    if isinstance(node, ClassLit):
        return node.negate()
    if isinstance(node, R1And):
        return _mk_or([_negate(p) for p in node.parts])
    if isinstance(node, R1Or):
        return _mk_and([_negate(p) for p in node.parts])
    return R1Const(not node.value)


def _mk_and(parts):
    out = []
    for p in parts:
        if p == TRUE:
            continue
        if p == FALSE:
            return FALSE
        for q in (p.parts if isinstance(p, R1And) else (p,)):
            if q not in out:
                out.append(q)
    lits = {q for q in out if isinstance(q, ClassLit)}
    if any(q.negate() in lits for q in lits):
        return FALSE
    if not out:
        return TRUE
    return out[0] if len(out) == 1 else R1And(tuple(out))


def _mk_or(parts):
    out = []
    for p in parts:
        if p == FALSE:
            continue
        if p == TRUE:
            return TRUE
        for q in (p.parts if isinstance(p, R1Or) else (p,)):
            if q not in out:
                out.append(q)
    lits = {q for q in out if isinstance(q, ClassLit)}
    if any(q.negate() in lits for q in lits):
        return TRUE
    if not out:
        return FALSE
    return out[0] if len(out) == 1 else R1Or(tuple(out))


# propositional intermediate form: ("lit", atom, sign) | ("and", [...]) | ("or", [...]) | ("const", b)
# atoms are ("v", var, j) for view j applied to a variable, or ("e", pos, neg) for a class cube

def _p_neg(p):
    tag = p[0]
    if tag == "lit":
        return ("lit", p[1], not p[2])
    if tag == "and":
        return ("or", [_p_neg(q) for q in p[1]])
    if tag == "or":
        return ("and", [_p_neg(q) for q in p[1]])
    return ("const", not p[1])


def _dnf(p):
    tag = p[0]
    if tag == "lit":
        return [frozenset([(p[1], p[2])])]
    if tag == "const":
        return [frozenset()] if p[1] else []
    if tag == "or":
        terms = [t for q in p[1] for t in _dnf(q)]
    else:
        terms = [frozenset()]
        for q in p[1]:
            sub = _dnf(q)
            terms = [a | b for a in terms for b in sub]
            terms = [t for t in terms if not any((atom, not s) in t for atom, s in t)]
            terms = _subsume(terms)
    return _subsume([t for t in terms if not any((atom, not s) in t for atom, s in t)])


def _subsume(terms):
    uniq = sorted(set(terms), key=len)
    out = []
    for t in uniq:
        if not any(o <= t for o in out):
            out.append(t)
    return out


def _exists_elim(var, p):
    disjuncts = []
    for term in _dnf(p):
        pos = neg = 0
        rest = []
        for atom, sign in term:
            if atom[0] == "v" and atom[1] == var:
                if sign:
                    pos |= 1 << atom[2]
                else:
                    neg |= 1 << atom[2]
            else:
                rest.append(("lit", atom, sign))
        if pos or neg:
            rest.append(("lit", ("e", pos, neg), True))
        disjuncts.append(("and", rest) if rest else ("const", True))
    return ("or", disjuncts)


def _normalize(f, index):
    if isinstance(f, ViewAtom):
        return ("lit", ("v", f.var, index[f.view]), True)
    if isinstance(f, Not):
        return _p_neg(_normalize(f.body, index))
    if isinstance(f, And):
        return ("and", [_normalize(q, index) for q in f.parts])
    if isinstance(f, Exists):
        return _exists_elim(f.var, _normalize(f.body, index))
    raise InputError(f"rank-1 normalization expects view formulas, got {f!r}")


def _to_r1(p):
    tag = p[0]
    if tag == "lit":
        atom = p[1]
        if atom[0] != "e":
            raise InputError("formula is not closed")
        return ClassLit(atom[1], atom[2], p[2])
    if tag == "and":
        return _mk_and([_to_r1(q) for q in p[1]])
    if tag == "or":
        return _mk_or([_to_r1(q) for q in p[1]])
    return R1Const(p[1])


def normalize_rank1(sentence, views):
    """Boolean combination of class-cube literals equivalent to the sentence on every structure."""
    if free_vars(sentence):
        raise InputError(f"sentence has free variables {sorted(free_vars(sentence))}")
    index = {v.name: j for j, v in enumerate(views)}
    return Rank1Form(_to_r1(_normalize(sentence, index)), tuple(v.name for v in views))


# abstraction over realized-signature sets

def respects(mask, lattice):
    return all(not (mask >> a & 1) or (mask >> b & 1) for a, b in lattice)


def pattern_candidates(form, lattice=()):
    """Lazily yield every nonempty signature set satisfying the form and the lattice."""
    valid = [s for s in range(1 << form.width) if respects(s, lattice)]
    for k in range(1, len(valid) + 1):
        for combo in itertools.combinations(valid, k):
            if r1_eval(form.root, combo):
                yield frozenset(combo)


def abstraction_witness(form, lattice=()):
    """Some signature set satisfying the form and lattice, or None when none exists."""
    if form.root == FALSE:
        return None
    cnf = Cnf()
    cubes = form.literals()
    evar = {c: cnf.var() for c in cubes}
    width = form.width
    witness = {c: [cnf.var() for _ in range(width)] for c in cubes}
    default = [cnf.var() for _ in range(width)]

    for c in cubes:
        for j in range(width):
            if c.pos >> j & 1:
                cnf.add([-evar[c], witness[c][j]])
            if c.neg >> j & 1:
                cnf.add([-evar[c], -witness[c][j]])
    actives = [(evar[c], witness[c]) for c in cubes] + [(None, default)]
    for act, w in actives:
        guard = [] if act is None else [-act]
        for a, b in lattice:
            cnf.add(guard + [-w[a], w[b]])
        for d in cubes:
            inside = [-w[j] for j in range(width) if d.pos >> j & 1]
            inside += [w[j] for j in range(width) if d.neg >> j & 1]
            cnf.add(guard + inside + [evar[d]])

    def enc(node):
        if isinstance(node, ClassLit):
            v = evar[ClassLit(node.pos, node.neg)]
            return v if node.positive else -v
        if isinstance(node, R1And):
            return cnf.and_([enc(p) for p in node.parts])
        if isinstance(node, R1Or):
            return cnf.or_([enc(p) for p in node.parts])
        return node.value

    cnf.add([enc(form.root)])
    ok, model, s = solve(cnf)
    s.delete()
    if not ok:
        return None
    val = set(x for x in model if x > 0)
    read = lambda w: sum(1 << j for j in range(width) if w[j] in val)
    pattern = {read(default)} | {read(witness[c]) for c in cubes if evar[c] in val}
    return frozenset(pattern)


# bounded model search

@dataclass(frozen=True)
class Sat:
    model: Structure
    sizes_searched: tuple


@dataclass(frozen=True)
class NoModelUpTo:
    size: int
    sizes_searched: tuple


@dataclass(frozen=True)
class SearchBudgetExceeded:
    completed_up_to: int
    sizes_searched: tuple


CANONICAL_BIT_LIMIT = 20


def search_vocabulary(sentence, views, vocabulary=None):
    """Relations the sentence can observe, in vocabulary order (or sorted by name)."""
    arities = {}
    used = view_names(sentence)
    for v in views:
        if v.name in used:
            for a in v.body + v.negated:
                arities[a.relation] = a.arity
    for rel in _rel_atoms(sentence):
        arities[rel.relation] = len(rel.args)
    order = list(vocabulary.names) if vocabulary is not None else sorted(arities)
    return Vocabulary(tuple((n, arities[n]) for n in order if n in arities))


def _rel_atoms(f):
    if isinstance(f, RelAtom):
        return [f]
    if isinstance(f, Not):
        return _rel_atoms(f.body)
    if isinstance(f, And):
        return [a for p in f.parts for a in _rel_atoms(p)]
    if isinstance(f, Exists):
        return _rel_atoms(f.body)
    return []


def fact_slots(vocab, n):
    """Canonical bit order, most significant first.

    This is vocabulary order then lexicographic tuple order, reversed, so the least
    code prefers facts over small elements (a single edge comes out as E(0,1)).
    """
    slots = [(name, t) for name, arity in vocab.symbols for t in itertools.product(range(n), repeat=arity)]
    return slots[::-1]


def decode(vocab, n, slots, bits):
    rels = {}
    for (name, t), b in zip(slots, bits):
        if b:
            rels.setdefault(name, set()).add(t)
    return Structure(vocab, rels, range(n))


def canonical_codes(vocab, n, chunk=1 << 15):
    """Yield, in increasing order, the codes that are minimal in their isomorphism orbit."""
    slots = fact_slots(vocab, n)
    width = len(slots)
    pos = {s: i for i, s in enumerate(slots)}
    weights = np.array([1 << (width - 1 - i) for i in range(width)], dtype=np.int64)
    perm_weights = []
    for perm in itertools.permutations(range(n)):
        if perm == tuple(range(n)):
            continue
        w = np.empty(width, dtype=np.int64)
        for i, (name, t) in enumerate(slots):
            w[i] = weights[pos[(name, tuple(perm[e] for e in t))]]
        perm_weights.append(w)
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    for start in range(0, 1 << width, chunk):
        codes = np.arange(start, min(start + chunk, 1 << width), dtype=np.int64)
        bits = (codes[:, None] >> shifts) & 1
        keep = np.ones(len(codes), dtype=bool)
        for w in perm_weights:
            keep &= bits @ w >= codes
        for c, row in zip(codes[keep], bits[keep]):
            yield int(c), row


def _canonical_search(sentence, views, vocab, n, deadline):
    slots = fact_slots(vocab, n)
    for _, row in canonical_codes(vocab, n):
        if deadline is not None and time.monotonic() > deadline:
            return "timeout"
        s = decode(vocab, n, slots, row)
        if model_check(sentence, s, views):
            return s
    return None


def _view_literal(cnf, view, a, n, fact):
    """Literal equivalent to `view(a)` via a join plan with early projection."""
    head = view.head
    steps = [("pos", at) for at in view.body]
    negs = [("neg", at) for at in view.negated]
    order, bound = [], {head}
    remaining = list(steps)
    while remaining:
        remaining.sort(key=lambda s: (-len(set(s[1].args) & bound), len(set(s[1].args) - bound)))
        nxt = remaining.pop(0)
        order.append(nxt)
        bound |= set(nxt[1].args)
        ready = [g for g in negs if set(g[1].args) <= bound]
        for g in ready:
            order.append(g)
            negs.remove(g)
    neqs = view.inequalities
    frontier = [head]
    states = {(a,): True}
    for k, (kind, at) in enumerate(order):
        new_vars = [v for v in dict.fromkeys(at.args) if v not in frontier]
        later = {v for _, b in order[k + 1:] for v in b.args} | {head}
        full = frontier + new_vars
        later |= {v for p in neqs if not set(p) <= set(full) for v in p}
        keep = [v for v in full if v in later]
        grouped = {}
        for assignment, lit in states.items():
            env = dict(zip(frontier, assignment))
            for vals in itertools.product(range(n), repeat=len(new_vars)):
                env.update(zip(new_vars, vals))
                if any(env[x] == env[y] for x, y in neqs if x in env and y in env):
                    continue
                fl = fact[(at.relation, tuple(env[v] for v in at.args))]
                c = cnf.and_([lit, fl if kind == "pos" else -fl])
                if c is False:
                    continue
                grouped.setdefault(tuple(env[v] for v in keep), []).append(c)
            for v in new_vars:
                env.pop(v, None)
        states = {}
        for key, lits in grouped.items():
            o = cnf.or_(lits)
            if o is not False:
                states[key] = o
        frontier = keep
    return states.get((a,), False)


def _sat_search(sentence, views, vocab, n, deadline):
    cnf = Cnf()
    slots = fact_slots(vocab, n)
    fact = {s: cnf.var() for s in slots}
    by_name = {v.name: v for v in views}
    cache = {}

    def view_lit(name, a):
        if (name, a) not in cache:
            cache[(name, a)] = _view_literal(cnf, by_name[name], a, n, fact)
        return cache[(name, a)]

    def ground(f, env):
        if isinstance(f, ViewAtom):
            return view_lit(f.view, env[f.var])
        if isinstance(f, RelAtom):
            return fact[(f.relation, tuple(env[v] for v in f.args))]
        if isinstance(f, Not):
            return cnf.neg(ground(f.body, env))
        if isinstance(f, And):
            return cnf.and_([ground(p, env) for p in f.parts])
        if isinstance(f, Exists):
            return cnf.or_([ground(f.body, {**env, f.var: a}) for a in range(n)])
        raise TypeError(f)

    cnf.add([ground(sentence, {})])
    remaining = lambda: None if deadline is None else max(0.0, deadline - time.monotonic())
    ok, model, solver = solve(cnf, time_limit=remaining())
    try:
        if ok is None:
            return "timeout"
        if not ok:
            return None
        # lexicographically least model = first model in canonical order
        val = set(x for x in model if x > 0)
        assumptions = []
        for s in slots:
            v = fact[s]
            if v not in val:
                assumptions.append(-v)
                continue
            ok2, m2, _ = solve(cnf, assumptions + [-v], remaining(), solver)
            if ok2 is None:
                return "timeout"
            if ok2:
                val = set(x for x in m2 if x > 0)
                assumptions.append(-v)
            else:
                assumptions.append(v)
        return decode(vocab, n, slots, [fact[s] in val for s in slots])
    finally:
        solver.delete()


def _pick_engine(vocab, n, engine):
    if engine != "auto":
        return engine
    width = sum(n ** a for _, a in vocab.symbols)
    return "canonical" if width <= CANONICAL_BIT_LIMIT else "sat"


def bounded_model_search(sentence, views, max_size, seed=0, time_limit=None, vocabulary=None,
                         engine="auto", min_size=1):
    """Search structures of size min_size..max_size for a model; complete within the bound.

    Both engines return the least model in the canonical bit order, so the answer does
    not depend on the engine; `seed` is accepted for interface uniformity and has no effect.
    """
    if max_size < 1:
        raise InputError("max_size must be at least 1")
    if free_vars(sentence):
        raise InputError("bounded search needs a sentence")
    views = views if views is not None else ViewSet(())
    for v in views:
        if v.recursive and v.name in view_names(sentence):
            raise UnsupportedDialectError("recursive views are recognized only")
    vocab = search_vocabulary(sentence, views, vocabulary)
    deadline = None if time_limit is None else time.monotonic() + time_limit
    searched = []
    for n in range(min_size, max_size + 1):
        eng = _pick_engine(vocab, n, engine)
        runner = _canonical_search if eng == "canonical" else _sat_search
        result = runner(sentence, views, vocab, n, deadline)
        if isinstance(result, str):
            return SearchBudgetExceeded(n - 1, tuple(searched))
        searched.append(n)
        if result is not None:
            return Sat(result, tuple(searched))
    return NoModelUpTo(max_size, tuple(searched))


# bound

def theoretical_bound(p, m, c=1):
    """Size bound from the construction, computed exactly."""
    if p < 1 or m < 1 or c < 1:
        raise InputError("p, m, c must be at least 1")
    n_views = m * (m * p) ** m
    h = g = c * m
    delta = 2 ** n_views * (n_views * m) ** h
    big = delta ** g
    if delta > 2:
        num = (delta - 1) ** (g - 1) - 1
        big = max(big, -(-num // (delta - 2)))
    return big * 2 ** n_views * (n_views * m) ** (h + 1)


# verdicts

@dataclass(frozen=True)
class Verdict:
    status: str                      # SAT, UNSAT, UNKNOWN
    model: Structure | None = None
    certificate: str | None = None   # abstraction | bound-exhausted
    bound: int | None = None
    sizes_searched: tuple = ()
    reason: str = ""
    pattern: frozenset | None = None

    @property
    def is_sat(self):
        return self.status == "SAT"

    @property
    def is_unsat(self):
        return self.status == "UNSAT"


@lru_cache(maxsize=256)
def _cached_lattice(views):
    return containment_lattice(views)


def decide(sentence, views, max_size=4, time_limit=10.0, seed=0, certified=False,
           use_abstraction=True, vocabulary=None, engine="auto"):
    if free_vars(sentence):
        raise InputError("decide needs a sentence")
    used = view_names(sentence)
    vs = ViewSet(tuple(v for v in views if v.name in used))
    dialect = vs.dialect
    if dialect is Dialect.UCV_REC:
        raise UnsupportedDialectError("recursive views are recognized only; satisfiability is undecidable")
    if certified and not dialect.is_pure:
        verdict = decide(sentence, views, max_size, time_limit, seed, False, use_abstraction,
                         vocabulary, engine)
        raise UnsupportedCertificationError(
            f"certified answers need pure views; theory dialect is {dialect.value}", verdict)
    start = time.monotonic()
    pattern = None
    if use_abstraction:
        form = normalize_rank1(sentence, vs)
        lattice = _cached_lattice(vs)
        pattern = abstraction_witness(form, lattice)
        if pattern is None:
            return Verdict("UNSAT", certificate="abstraction",
                           reason="no signature set satisfies the rank-1 form under the containment lattice")
    remaining = None if time_limit is None else max(0.0, time_limit - (time.monotonic() - start))
    result = bounded_model_search(sentence, vs, max_size, seed, remaining, vocabulary, engine)
    if isinstance(result, Sat):
        if not model_check(sentence, result.model, vs):
            raise AssertionError("search returned a structure that fails model checking")
        return Verdict("SAT", model=result.model, sizes_searched=result.sizes_searched, pattern=pattern)
    if isinstance(result, SearchBudgetExceeded):
        return Verdict("UNKNOWN", sizes_searched=result.sizes_searched, pattern=pattern,
                       reason=f"time budget reached after size {result.completed_up_to}")
    if dialect.is_pure and vs.N:
        p = len(vs.relations())
        bound = theoretical_bound(p, vs.m)
        if max_size >= bound:
            return Verdict("UNSAT", certificate="bound-exhausted", bound=bound,
                           sizes_searched=result.sizes_searched,
                           reason=f"no model up to {max_size} >= theoretical bound {bound}")
        return Verdict("UNKNOWN", bound=bound, sizes_searched=result.sizes_searched, pattern=pattern,
                       reason=f"no model up to size {max_size}; theoretical bound is {bound}")
    return Verdict("UNKNOWN", sizes_searched=result.sizes_searched, pattern=pattern,
                   reason=f"no model up to size {max_size}; no size bound for dialect {dialect.value}")
