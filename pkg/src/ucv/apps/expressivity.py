"""Expressivity tools: rank-1 agreement, homomorphism agreement, inexpressibility witness search."""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

from ..core import Structure, Vocabulary
from ..errors import InputError, ResourceError
from ..evaluation import class_table, find_homomorphism, model_check
from ..sat import CANONICAL_BIT_LIMIT, canonical_codes, decode, fact_slots
from ..views import enumerate_views


def _same_vocabulary(a, b):
    if dict(a.vocabulary.symbols) != dict(b.vocabulary.symbols):
        raise InputError(f"vocabulary mismatch: {a.vocabulary} vs {b.vocabulary}")


def _retracts(src, dst, x):
    """Elements y of dst with homomorphisms src->dst (x to y) and dst->src (y to x)."""
    for y in dst.universe:
        if find_homomorphism(src, dst, {x: y}) is not None and find_homomorphism(dst, src, {y: x}) is not None:
            yield y


def hom_agreement_check(a, b):
    """Every element of either structure maps across and back onto itself by homomorphisms."""
    _same_vocabulary(a, b)
    for src, dst in ((a, b), (b, a)):
        for x in src.universe:
            if next(_retracts(src, dst, x), None) is None:
                return False
    return True


def hom_agreement_certificate(a, b):
    """For each element, an intermediate image witnessing the round trip (None entries mean failure)."""
    _same_vocabulary(a, b)
    return {("A", x): next(_retracts(a, b, x), None) for x in a.universe} | \
           {("B", y): next(_retracts(b, a, y), None) for y in b.universe}


def ef_rank1_agree(ua, ub):
    """Duplicator wins the one-round game on unary structures iff the realized signature sets match."""
    for s in (ua, ub):
        if any(ar != 1 for _, ar in s.vocabulary.symbols):
            raise InputError("rank-1 agreement is defined for unary vocabularies")
    _same_vocabulary(ua, ub)
    names = sorted(ua.vocabulary.names)

    def realized(s):
        return {tuple((e,) in s.tuples(n) for n in names) for e in s.universe}
    return realized(ua) == realized(ub)


@dataclass(frozen=True)
class InexpressibilityWitness:
    a: Structure
    b: Structure
    value_a: bool
    value_b: bool
    mode: str
    pairs_checked: int


def _structures(vocab, max_size, min_size=1):
    for n in range(min_size, max_size + 1):
        slots = fact_slots(vocab, n)
        if len(slots) > CANONICAL_BIT_LIMIT:
            raise ResourceError(f"size {n} needs {len(slots)} fact bits; the exhaustive limit is "
                                f"{CANONICAL_BIT_LIMIT}")
        for _, row in canonical_codes(vocab, n):
            yield decode(vocab, n, slots, row)


def _fingerprint(s, views):
    return frozenset(class_table(s, views).realized)


def search_inexpressibility_witness(query, vocabulary, max_size=4, mode="generic", size_a=3,
                                    fingerprint_m=2, time_limit=None):
    """Structures agreeing on every UCV sentence (by homomorphisms) but not on the query.

    generic: all canonical structures up to max_size, prefiltered by realized view signatures.
    fold: A of size size_a, B = two copies of A plus cross tuples that project back onto A
    (the map i -> i mod size_a is then a homomorphism B -> A).
    """
    if not isinstance(vocabulary, Vocabulary):
        raise InputError("vocabulary required")
    deadline = None if time_limit is None else time.monotonic() + time_limit
    if mode == "generic":
        return _generic(query, vocabulary, max_size, fingerprint_m, deadline)
    if mode == "fold":
        return _fold(query, vocabulary, size_a, deadline)
    raise InputError(f"unknown search mode {mode!r}")


def _check_deadline(deadline):
    if deadline is not None and time.monotonic() > deadline:
        raise ResourceError("time budget exhausted during witness search")


def _generic(query, vocab, max_size, fingerprint_m, deadline):
    views = enumerate_views(vocab, fingerprint_m)
    seen = []
    checked = 0
    for s in _structures(vocab, max_size):
        _check_deadline(deadline)
        value = model_check(query, s)
        fp = _fingerprint(s, views)
        for t, tv, tfp in seen:
            if tv != value and tfp == fp:
                checked += 1
                if hom_agreement_check(t, s):
                    return InexpressibilityWitness(t, s, tv, value, "generic", checked)
        seen.append((s, value, fp))
    return None


def _fold(query, vocab, n, deadline):
    checked = 0
    for a in _structures(vocab, n, n):
        value_a = model_check(query, a)
        facts = a.facts()
        copies = {(f.relation, tuple(e + n * k for e in f.args)) for f in facts for k in (0, 1)}
        cross = []
        for f in facts:
            for shift in itertools.product((0, 1), repeat=len(f.args)):
                if len(set(shift)) > 1:
                    cross.append((f.relation, tuple(e + n * k for e, k in zip(f.args, shift))))
        for r in range(len(cross) + 1):
            for extra in itertools.combinations(cross, r):
                _check_deadline(deadline)
                b = Structure.from_facts(vocab, copies | set(extra), range(2 * n))
                value_b = model_check(query, b)
                if value_b == value_a:
                    continue
                checked += 1
                if hom_agreement_check(a, b):
                    return InexpressibilityWitness(a, b, value_a, value_b, "fold", checked)
    return None
