"""Two-counter machines: simulation, compilation to a view theory with inequalities, trace encoding."""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..core import (And, Atom, ConjunctiveView, Exists, Not, Structure, ViewAtom, ViewSet, Vocabulary,
                    conj, disj, forall, iff, implies)
from ..errors import InputError, ParseError, SimulationBudgetError
from ..evaluation import model_check, view_extensions
from ..frontend import Theory

TESTS = ("=", ">")
OPS = ("pop", "push")


@dataclass(frozen=True)
class TwoCounterMachine:
    halt: int
    transitions: tuple     # ((state, test1, test2), (state', op1, op2)) in insertion order

    def __post_init__(self):
        if self.halt < 1:
            raise InputError("the halting state must be at least 1")
        seen = set()
        for (s, t1, t2), (s2, o1, o2) in self.transitions:
            if (s, t1, t2) in seen:
                raise InputError(f"nondeterministic: two rules for d({s},{t1},{t2})")
            seen.add((s, t1, t2))
            if not (0 <= s <= self.halt and 0 <= s2 <= self.halt):
                raise InputError(f"state out of range 0..{self.halt}")
            if s == self.halt:
                raise InputError("the halting state has no outgoing transitions")
            if t1 not in TESTS or t2 not in TESTS or o1 not in OPS or o2 not in OPS:
                raise InputError("tests are = or >, operations are pop or push")
            if (t1 == "=" and o1 == "pop") or (t2 == "=" and o2 == "pop"):
                raise InputError(f"d({s},{t1},{t2}) pops an empty counter")

    @property
    def table(self):
        return dict(self.transitions)

    def render(self):
        lines = [f"state {self.halt} halts."]
        lines += [f"d({s},{t1},{t2}) = ({s2},{o1},{o2})." for (s, t1, t2), (s2, o1, o2) in self.transitions]
        return "\n".join(lines) + "\n"


_HALT = re.compile(r"state\s+(\d+)\s+halts$")
_RULE = re.compile(r"d\(\s*(\d+)\s*,\s*([=>])\s*,\s*([=>])\s*\)\s*=\s*"
                   r"\(\s*(\d+)\s*,\s*(pop|push)\s*,\s*(pop|push)\s*\)$")


def parse_machine(text):
    """Statements end with '.', '#' starts a comment."""
    halt = None
    rules = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        for stmt in filter(None, (s.strip() for s in line.split("."))):
            if m := _HALT.match(stmt):
                if halt is not None:
                    raise ParseError("halting state declared twice", lineno, 1)
                halt = int(m.group(1))
            elif m := _RULE.match(stmt):
                g = m.groups()
                rules.append(((int(g[0]), g[1], g[2]), (int(g[3]), g[4], g[5])))
            else:
                raise ParseError(f"cannot read machine statement {stmt!r}", lineno, raw.find(stmt) + 1)
    if halt is None:
        raise ParseError("missing 'state h halts.'", 1, 1)
    return TwoCounterMachine(halt, tuple(rules))


def simulate(machine, max_steps):
    """Configurations (state, c1, c2) from the start up to halting."""
    table = machine.table
    state, c1, c2 = 0, 0, 0
    run = [(state, c1, c2)]
    for _ in range(max_steps):
        if state == machine.halt:
            return run
        key = (state, "=" if c1 == 0 else ">", "=" if c2 == 0 else ">")
        if key not in table:
            raise InputError(f"machine is stuck in state {state} with counters ({c1},{c2})")
        state, o1, o2 = table[key]
        c1 += 1 if o1 == "push" else -1
        c2 += 1 if o2 == "push" else -1
        run.append((state, c1, c2))
    if state == machine.halt:
        return run
    raise SimulationBudgetError(f"machine does not halt within {max_steps} steps")


# compilation

def _a(rel, *args):
    return Atom(rel, args)


def _v(name, head, *body, neq=()):
    return ConjunctiveView(name, head, body, inequalities=neq)


def machine_vocabulary(machine):
    symbols = [("config", 4), ("succ", 2), ("zero", 1), ("last", 1)]
    symbols += [(f"S{i}", 1) for i in range(machine.halt + 1)]
    return Vocabulary(tuple(symbols))


@dataclass(frozen=True)
class CompiledMachine:
    machine: TwoCounterMachine
    theory: Theory
    conjuncts: tuple       # (name, sentence)

    @property
    def sentence(self):
        return self.theory.query

    @property
    def views(self):
        return self.theory.views


def _test_atoms(counter, test):
    # '>' means the counter value has a predecessor
    return [_a("zero", counter)] if test == "=" else [_a("succ", f"p{counter}", counter)]


def _counter_step(old, new, op):
    return _a("succ", old, new) if op == "push" else _a("succ", new, old)


def compile_2cm(machine):
    h = machine.halt
    views = []
    named = []

    def add(*vs):
        views.extend(vs)

    def V(name, x):
        return ViewAtom(name, x)

    add(_v("dCol1", "x", _a("succ", "x", "y")),
        _v("dCol2", "x", _a("succ", "y", "x")),
        _v("dP", "x", _a("succ", "z", "x")),
        _v("dT", "t", _a("config", "t", "s", "c1", "c2")),
        _v("isZero", "x", _a("zero", "x")),
        _v("isLast", "x", _a("last", "x")))
    add(*[_v(f"isS{i}", "x", _a(f"S{i}", "x")) for i in range(h + 1)])

    def dsucc(x):
        return disj(V("dCol1", x), V("dCol2", x))

    # bad rules: one view per rule, head drawn from the body
    bad = [
        _v("bad_succ_functional", "x", _a("succ", "x", "y"), _a("succ", "x", "z"), neq=[("y", "z")]),
        _v("bad_succ_injective", "x", _a("succ", "y", "x"), _a("succ", "z", "x"), neq=[("y", "z")]),
        _v("bad_succ_loop", "x", _a("succ", "x", "x")),
        _v("bad_last_has_succ", "x", _a("last", "x"), _a("succ", "x", "y")),
        _v("bad_zero_has_pred", "x", _a("zero", "x"), _a("succ", "y", "x")),
        _v("bad_zero_unique", "x", _a("zero", "x"), _a("zero", "y"), neq=[("x", "y")]),
        _v("bad_last_unique", "x", _a("last", "x"), _a("last", "y"), neq=[("x", "y")]),
        _v("bad_zero_last", "x", _a("zero", "x"), _a("last", "x")),
    ]
    for i in range(h + 1):
        bad.append(_v(f"bad_S{i}_unique", "x", _a(f"S{i}", "x"), _a(f"S{i}", "y"), neq=[("x", "y")]))
        bad.append(_v(f"bad_zero_S{i}", "x", _a("zero", "x"), _a(f"S{i}", "x")))
        bad.append(_v(f"bad_last_S{i}", "x", _a("last", "x"), _a(f"S{i}", "x")))
        for j in range(i + 1, h + 1):
            bad.append(_v(f"bad_S{i}_S{j}", "x", _a(f"S{i}", "x"), _a(f"S{j}", "x")))
    key_body = (_a("config", "t", "s", "c1", "c2"), _a("config", "t", "s2", "d1", "d2"))
    bad += [_v("bad_key_state", "t", *key_body, neq=[("s", "s2")]),
            _v("bad_key_c1", "t", *key_body, neq=[("c1", "d1")]),
            _v("bad_key_c2", "t", *key_body, neq=[("c2", "d2")])]
    add(*bad)
    for b in bad:
        named.append((f"not {b.name}", Not(Exists("x", V(b.name, "x")))))

    named.append(("hasPred", forall("x", implies(dsucc("x"), disj(V("isZero", "x"), V("dP", "x"))))))
    named.append(("sameDom", And((forall("x", implies(dsucc("x"), V("dT", "x"))),
                                  forall("y", implies(V("dT", "y"), dsucc("y")))))))
    named.append(("goodzero", forall("x", implies(V("isZero", "x"), dsucc("x")))))
    # every unary base relation is nonempty too, not only the succ domain
    nonempty = [Exists("x", dsucc("x")), Exists("x", V("isZero", "x")), Exists("x", V("isLast", "x"))]
    nonempty += [Exists("x", V(f"isS{i}", "x")) for i in range(h + 1)]
    named.append(("nempty", And(tuple(nonempty))))
    named.append(("hassuccnext", forall("y", implies(V("dCol2", "y"), disj(V("isLast", "y"), V("dCol1", "y"))))))
    named.append(("eligiblezero", forall("y", implies(V("dCol1", "y"), disj(V("dCol2", "y"), V("isZero", "y"))))))
    named.append(("eligiblelast", forall("y", implies(V("dCol2", "y"), disj(V("dCol1", "y"), V("isLast", "y"))))))

    add(_v("Vzs", "s", _a("zero", "t"), _a("config", "t", "s", "a", "b")),
        _v("Vzc1", "c", _a("zero", "t"), _a("config", "t", "a", "c", "b")),
        _v("Vzc2", "c", _a("zero", "t"), _a("config", "t", "a", "b", "c")),
        _v("Vys", "t", _a("zero", "s"), _a("config", "t", "s", "a", "b")),
        _v("Vyc1", "c", _a("zero", "s"), _a("config", "t", "s", "c", "a")),
        _v("Vyc2", "c", _a("zero", "s"), _a("config", "t", "s", "a", "c")))
    named.append(("goodconfigzero", forall("x", And((
        implies(V("Vzs", "x"), V("isS0", "x")),
        implies(disj(*[V(n, "x") for n in ("Vzc1", "Vzc2", "Vys", "Vyc1", "Vyc2")]), V("isZero", "x")))))))

    add(_v("Vhalted", "t", _a("config", "t", "s", "c1", "c2"), _a(f"S{h}", "s")),
        _v("Vnext", "t", _a("succ", "t", "t2"), _a("config", "t2", "s", "c1", "c2")))
    named.append(("hasconfignext", forall("t", implies(And((V("dT", "t"), Not(V("Vhalted", "t")))),
                                                       V("Vnext", "t")))))

    for k, ((j, t1, t2), (j2, o1, o2)) in enumerate(machine.transitions, 1):
        guard = [_a("config", "t", "s", "c1", "c2"), _a("succ", "t", "u"), _a(f"S{j}", "s")]
        guard += _test_atoms("c1", t1) + _test_atoms("c2", t2)
        nxt = _a("config", "u", "s_", "n1", "n2")
        add(_v(f"Vd{k}_s", "s_", *guard, nxt))
        named.append((f"goodstate_d{k}", forall("x", iff(V(f"Vd{k}_s", "x"), V(f"isS{j2}", "x")))))
        for c, op, new in (("c1", o1, "n1"), ("c2", o2, "n2")):
            add(_v(f"Q1d{k}_{c}", "u", *guard, _counter_step(c, new, op), nxt),
                _v(f"Q2d{k}_{c}", "u", *guard))
            named.append((f"goodtrans_d{k}_{c}", forall("t", iff(V(f"Q1d{k}_{c}", "t"), V(f"Q2d{k}_{c}", "t")))))

    named.append(("halt", Exists("x", V("Vhalted", "x"))))
    vs = ViewSet(tuple(views))
    sentence = conj(*[f for _, f in named])
    theory = Theory(machine_vocabulary(machine), vs, sentence)
    return CompiledMachine(machine, theory, tuple(named))


def encode_trace(machine, max_steps):
    """The run as a database: time stamps double as counter values, states are s0..sh."""
    run = simulate(machine, max_steps)
    k = len(run) - 1
    if k == 0:
        raise InputError("the start state halts immediately; zero and last would coincide")
    rels = {
        "config": {(t, f"s{s}", c1, c2) for t, (s, c1, c2) in enumerate(run)},
        "succ": {(t, t + 1) for t in range(k)},
        "zero": {(0,)},
        "last": {(k,)},
    }
    for i in range(machine.halt + 1):
        rels[f"S{i}"] = {(f"s{i}",)}
    return Structure(machine_vocabulary(machine), rels)


def failing_conjuncts(compiled, structure):
    """Names of the conjuncts that are false on the structure."""
    ext = view_extensions(structure, compiled.views)
    return [name for name, f in compiled.conjuncts if not model_check(f, structure, compiled.views, ext)]
