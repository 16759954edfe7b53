"""Conjunctive-view containment, cores and enumeration of all views up to a length."""
from __future__ import annotations

import itertools

from .core import ALL_VIEWS, Atom, ConjunctiveView, ViewSet
from .errors import InputError, ResourceError, UnsupportedDialectError
from .evaluation import find_homomorphism

DEFAULT_ENUMERATION_CAP = 500_000
_NAMES = ["y", "z", "w", "u", "v", "s", "t"]


def _require_pure(*views):
    for v in views:
        if not v.is_pure:
            raise UnsupportedDialectError(
                f"view {v.name} is in dialect {v.dialect.value}; containment is decided for pure views only")


def cq_contains(va, vb):
    """True iff va is contained in vb on every structure."""
    _require_pure(va, vb)
    vocab = va.vocabulary().union(vb.vocabulary())
    src = vb.canonical_database(vocab)
    dst = va.canonical_database(vocab)
    return find_homomorphism(src, dst, {vb.head: va.head}) is not None


def cq_equivalent(va, vb):
    return cq_contains(va, vb) and cq_contains(vb, va)


def core(view):
    """Minimal equivalent subview obtained by repeated retraction."""
    _require_pure(view)
    body = sorted(set(view.body), key=str)
    vocab = view.vocabulary()
    changed = True
    while changed:
        changed = False
        for a in body:
            rest = [b for b in body if b != a]
            if not rest or view.head not in {v for b in rest for v in b.args}:
                continue
            cur = ConjunctiveView(view.name, view.head, tuple(body))
            sub = ConjunctiveView(view.name, view.head, tuple(rest))
            h = find_homomorphism(cur.canonical_database(vocab), sub.canonical_database(vocab),
                                  {view.head: view.head})
            if h is not None:
                body = sorted({Atom(b.relation, tuple(h[v] for v in b.args)) for b in body}, key=str)
                changed = True
                break
    return ConjunctiveView(view.name, view.head, tuple(body))


def _var_name(i):
    return _NAMES[i] if i < len(_NAMES) else f"y{i}"


def canonical_text(view):
    """Least rendering of the body over all renamings of non-head variables (head becomes x)."""
    others = [v for v in view.variables if v != view.head]
    best = None
    for perm in itertools.permutations(range(len(others))):
        ren = {view.head: "x"}
        ren.update({v: _var_name(perm[i]) for i, v in enumerate(others)})
        text = ", ".join(sorted({f"{a.relation}({','.join(ren[x] for x in a.args)})" for a in view.body}))
        if best is None or text < best[0]:
            best = (text, ren)
    return best


def canonical_form(view, name=None):
    """Equivalent view in canonical shape: core, head x, least rendering."""
    c = core(view)
    text, ren = canonical_text(c)
    body = sorted({Atom(a.relation, tuple(ren[x] for x in a.args)) for a in c.body}, key=str)
    return ConjunctiveView(name or view.name, "x", tuple(body)), text


def _set_partitions(n):
    """Restricted growth strings of length n."""
    if n == 0:
        yield ()
        return

    def rec(prefix, k):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for b in range(k + 1):
            yield from rec(prefix + [b], max(k, b + 1))

    yield from rec([], 0)


def raw_views(vocabulary, m):
    """All safe views of length <= m, up to atom order and variable naming (not equivalence)."""
    symbols = list(vocabulary.symbols)
    for count in range(1, m + 1):
        for combo in itertools.combinations_with_replacement(symbols, count):
            arity = sum(a for _, a in combo)
            if arity > m:
                continue
            for rgs in _set_partitions(arity):
                blocks = max(rgs) + 1
                for head_block in range(blocks):
                    names = {b: ("x" if b == head_block else f"v{b}") for b in range(blocks)}
                    atoms, pos = [], 0
                    for rel, a in combo:
                        atoms.append(Atom(rel, tuple(names[b] for b in rgs[pos:pos + a])))
                        pos += a
                    yield ConjunctiveView("V", "x", tuple(atoms))


def enumerate_views(vocabulary, m, cap=DEFAULT_ENUMERATION_CAP):
    """All pairwise non-equivalent safe unary views of length <= m, canonically ordered."""
    if m < 1:
        raise InputError("m must be at least 1")
    found = {}
    for k, raw in enumerate(raw_views(vocabulary, m)):
        if k >= cap:
            raise ResourceError(f"view enumeration exceeded the cap of {cap} raw bodies "
                                f"(vocabulary {vocabulary}, m={m})")
        view, text = canonical_form(raw)
        found.setdefault(text, view)
    ordered = sorted(found.items(), key=lambda kv: (kv[1].length, len(kv[1].body), kv[0]))
    views = tuple(v.renamed(f"V{i + 1}") for i, (_, v) in enumerate(ordered))
    return ViewSet(views, ALL_VIEWS, m)


def count_bound(p, m):
    return m * (m * p) ** m


def containment_lattice(views):
    """Pairs (i, j) with views[i] contained in views[j], i != j; impure views are skipped."""
    pairs = []
    for i, va in enumerate(views):
        for j, vb in enumerate(views):
            if i != j and va.is_pure and vb.is_pure and cq_contains(va, vb):
                pairs.append((i, j))
    return tuple(pairs)


def prioritize(universe_views, first):
    """Reorder a complete view set so views equivalent to `first` come first, keeping their names."""
    rest = list(universe_views)
    out = []
    for v in first:
        for u in rest:
            if cq_equivalent(u, v):
                out.append(v)
                rest.remove(u)
                break
        else:
            if any(cq_equivalent(o, v) for o in out):
                continue
            raise InputError(f"view {v.name} has no equivalent in the complete view set")
    taken = {v.name for v in out}
    for u in rest:
        name = u.name
        k = 0
        while name in taken:
            k += 1
            name = f"{u.name}_{k}"
        taken.add(name)
        out.append(u.renamed(name))
    return ViewSet(tuple(out), ALL_VIEWS, universe_views.m)
