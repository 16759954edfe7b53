"""Query containment under constraints and implication of view-containment dependencies."""
from __future__ import annotations

from dataclasses import dataclass

from ..core import And, Exists, Not, bound_vars, conj, element_key, forall, free_vars, implies, substitute
from ..errors import InputError
from ..evaluation import model_check
from ..sat import decide

CONTAINED = "CONTAINED"
IMPLIED = "IMPLIED"
COUNTEREXAMPLE = "COUNTEREXAMPLE"
UNKNOWN = "UNKNOWN"


def _unary(q, what):
    fv = free_vars(q)
    if len(fv) != 1:
        raise InputError(f"{what} must have exactly one free variable, found {len(fv)}")
    return next(iter(fv))


def _align(queries):
    """Rename the free variable of every query to one shared variable not bound in any of them."""
    taken = set()
    for q in queries:
        taken |= bound_vars(q)
    var, k = "x", 0
    while var in taken:
        k += 1
        var = f"x{k}"
    out = []
    for q in queries:
        old = _unary(q, "query")
        out.append(q if old == var else substitute(q, old, var))
    return var, out


@dataclass(frozen=True)
class ContainmentResult:
    status: str
    model: object = None
    element: object = None
    verdict: object = None


def containment_sentence(q1, q2, constraints=()):
    var, (a, b) = _align([q1, q2])
    return conj(Exists(var, And((a, Not(b)))), *constraints)


def check_containment(q1, q2, views, constraints=(), max_size=4, time_limit=10.0, seed=0, certified=False):
    """Is q1 contained in q2 on every model of the constraints?"""
    sentence = containment_sentence(q1, q2, constraints)
    verdict = decide(sentence, views, max_size=max_size, time_limit=time_limit, seed=seed,
                     certified=certified)
    if verdict.is_unsat:
        return ContainmentResult(CONTAINED, verdict=verdict)
    if verdict.is_sat:
        var, (a, b) = _align([q1, q2])
        witnesses = model_check(And((a, Not(b))), verdict.model, views)
        return ContainmentResult(COUNTEREXAMPLE, verdict.model, min(witnesses, key=element_key), verdict)
    return ContainmentResult(UNKNOWN, verdict=verdict)


@dataclass(frozen=True)
class Dependency:
    lhs: object
    rhs: object
    op: str = "subset"          # subset or proper

    def __post_init__(self):
        if self.op not in ("subset", "proper"):
            raise InputError(f"dependency operator must be subset or proper, got {self.op!r}")
        _unary(self.lhs, "dependency side")
        _unary(self.rhs, "dependency side")

    def sentence(self):
        var, (a, b) = _align([self.lhs, self.rhs])
        s = forall(var, implies(a, b))
        if self.op == "proper":
            s = And((s, Exists(var, And((b, Not(a))))))
        return s


@dataclass(frozen=True)
class ImplicationResult:
    status: str
    model: object = None
    verdict: object = None


def imply_dependencies(given, target, views, max_size=4, time_limit=10.0, seed=0, certified=False):
    """Does the set of given dependencies imply the target one?"""
    sentence = conj(*[d.sentence() for d in given], Not(target.sentence()))
    verdict = decide(sentence, views, max_size=max_size, time_limit=time_limit, seed=seed,
                     certified=certified)
    if verdict.is_unsat:
        return ImplicationResult(IMPLIED, verdict=verdict)
    if verdict.is_sat:
        return ImplicationResult(COUNTEREXAMPLE, verdict.model, verdict)
    return ImplicationResult(UNKNOWN, verdict=verdict)
