"""Independent brute-force oracles. None of these call into the search or homomorphism code under test."""
from __future__ import annotations

import itertools
import random

import numpy as np

from ucv.core import And, Atom, ConjunctiveView, Exists, Not, Structure, ViewAtom, Vocabulary


def brute_eval_view(view, structure):
    """All valuations of the view's variables, checked atom by atom."""
    vs = list(view.variables)
    out = set()
    for vals in itertools.product(structure.universe, repeat=len(vs)):
        env = dict(zip(vs, vals))
        if all(tuple(env[x] for x in a.args) in structure.tuples(a.relation) for a in view.body) and \
                all(env[x] != env[y] for x, y in view.inequalities) and \
                all(tuple(env[x] for x in a.args) not in structure.tuples(a.relation) for a in view.negated):
            out.add(env[view.head])
    return frozenset(out)


def all_structures(vocab, n):
    """Every structure on {0..n-1}, no symmetry breaking."""
    slots = [(name, t) for name, ar in vocab.symbols for t in itertools.product(range(n), repeat=ar)]
    for bits in itertools.product((0, 1), repeat=len(slots)):
        rels = {}
        for (name, t), b in zip(slots, bits):
            if b:
                rels.setdefault(name, set()).add(t)
        yield Structure(vocab, rels, range(n))


def brute_eval_formula(f, structure, views, env=None):
    env = env or {}
    if isinstance(f, ViewAtom):
        return env[f.var] in brute_eval_view(views[f.view], structure)
    if isinstance(f, Not):
        return not brute_eval_formula(f.body, structure, views, env)
    if isinstance(f, And):
        return all(brute_eval_formula(p, structure, views, env) for p in f.parts)
    if isinstance(f, Exists):
        return any(brute_eval_formula(f.body, structure, views, {**env, f.var: a}) for a in structure.universe)
    raise TypeError(f)


class BinaryBatch:
    """All structures of size <= n over binary symbols, as boolean arrays indexed [structure, i, j]."""

    def __init__(self, names, n):
        self.names = names
        self.n = n
        self.arrays = {}
        for size in range(1, n + 1):
            bits = size * size * len(names)
            codes = np.arange(1 << bits, dtype=np.int64)
            flat = ((codes[:, None] >> np.arange(bits)) & 1).astype(bool)
            for k, name in enumerate(names):
                block = flat[:, k * size * size:(k + 1) * size * size].reshape(-1, size, size)
                self.arrays.setdefault(size, {})[name] = block

    def view_truth(self, view, size):
        """Boolean array [structure, head value]: does the view hold there."""
        arrs = self.arrays[size]
        count = next(iter(arrs.values())).shape[0]
        others = [v for v in view.variables if v != view.head]
        out = np.zeros((count, size), dtype=bool)
        for a in range(size):
            acc = np.zeros(count, dtype=bool)
            for vals in itertools.product(range(size), repeat=len(others)):
                env = dict(zip(others, vals))
                env[view.head] = a
                cur = np.ones(count, dtype=bool)
                for atom in view.body:
                    i, j = (env[x] for x in atom.args)
                    cur &= arrs[atom.relation][:, i, j]
                acc |= cur
            out[:, a] = acc
        return out

    def contained(self, va, vb):
        """va is contained in vb on every structure of size <= n."""
        for size in range(1, self.n + 1):
            ta, tb = self.view_truth(va, size), self.view_truth(vb, size)
            if np.any(ta & ~tb):
                return False
        return True


def random_view(rng, vocab, max_length, name="V", max_vars=4):
    """Random safe pure view with total arity <= max_length."""
    while True:
        atoms, length = [], 0
        symbols = list(vocab.symbols)
        while True:
            rel, ar = rng.choice(symbols)
            if length + ar > max_length:
                break
            atoms.append((rel, ar))
            length += ar
            if rng.random() < 0.4:
                break
        if not atoms:
            continue
        pool = ["x", "y", "z", "w"][:max_vars]
        body = [Atom(rel, tuple(rng.choice(pool) for _ in range(ar))) for rel, ar in atoms]
        if any("x" in a.args for a in body):
            return ConjunctiveView(name, "x", tuple(body))


def random_structure(rng, vocab, n, density=0.35):
    rels = {}
    for name, ar in vocab.symbols:
        rels[name] = {t for t in itertools.product(range(n), repeat=ar) if rng.random() < density}
    return Structure(vocab, rels, range(n))


def random_sentence(rng, view_names, depth=3, free=()):
    """Random sentence over unary view atoms; qrank <= depth."""
    def gen(d, bound):
        choices = ["atom", "not", "and"] + (["exists"] * 2 if d > 0 else [])
        if not bound:
            choices = ["exists"]
        kind = rng.choice(choices)
        if kind == "atom" or (kind != "exists" and d == 0 and rng.random() < 0.5):
            return ViewAtom(rng.choice(view_names), rng.choice(bound))
        if kind == "not":
            return Not(gen(d, bound))
        if kind == "and":
            return And((gen(d, bound), gen(d, bound)))
        var = ["x", "y", "z"][len(bound) % 3]
        return Exists(var, gen(d - 1, bound + [var]))
    return gen(depth, list(free))


def containment_oracle_run(pairs, seed=0, max_length=4, n=3):
    """Compare cq_contains against BinaryBatch on random E/2 view pairs; returns (mismatches, outcomes)."""
    from ucv.views import cq_contains
    vocab = Vocabulary((("E", 2),))
    batch = BinaryBatch(["E"], n)
    rng = random.Random(seed)
    mismatches, outcomes = [], {True: 0, False: 0}
    for _ in range(pairs):
        va, vb = random_view(rng, vocab, max_length, "A"), random_view(rng, vocab, max_length, "B")
        expected = batch.contained(va, vb)
        got = cq_contains(va, vb)
        outcomes[expected] += 1
        if got != expected:
            mismatches.append((va, vb, got, expected))
    return mismatches, outcomes


def normalization_oracle_run(pairs, seed=0):
    """Rank-1 evaluation (cube and expanded forms) against model_check; returns (mismatches, truth counts)."""
    from ucv.core import ViewSet
    from ucv.evaluation import model_check, realized_masks
    from ucv.sat import normalize_rank1
    vocab = Vocabulary((("E", 2), ("P", 1)))
    rng = random.Random(seed)
    mismatches, outcomes = [], {True: 0, False: 0}
    for _ in range(pairs):
        k = rng.randint(1, 3)
        views = ViewSet(tuple(random_view(rng, vocab, 4, f"V{i + 1}") for i in range(k)))
        sentence = random_sentence(rng, list(views.names), depth=rng.randint(1, 3))
        structure = random_structure(rng, vocab, rng.randint(1, 3))
        form = normalize_rank1(sentence, views)
        masks = realized_masks(structure, views)
        truth = model_check(sentence, structure, views)
        outcomes[truth] += 1
        if form.evaluate(masks) != truth or form.expanded().evaluate(masks) != truth:
            mismatches.append((sentence, views, structure))
    return mismatches, outcomes


def single_tuple_corruptions(structure):
    """Every structure obtained by deleting one fact or changing one argument of one fact."""
    facts = structure.facts()
    universe = list(structure.universe)
    for f in sorted(facts, key=repr):
        rest = set(facts) - {f}
        yield f"delete {f}", rest
        for i, old in enumerate(f.args):
            for new in universe:
                if new == old:
                    continue
                g = type(f)(f.relation, f.args[:i] + (new,) + f.args[i + 1:])
                if g not in facts:
                    yield f"change {f} to {g}", rest | {g}


def corrupted_structure(structure, facts):
    rels = {}
    for f in facts:
        rels.setdefault(f.relation, set()).add(f.args)
    return Structure(structure.vocabulary, rels, structure.universe)
