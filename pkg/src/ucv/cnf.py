"""Small Tseitin builder over python-sat solvers. Literals are ints; True/False are constants."""
from __future__ import annotations

import threading

from pysat.solvers import Solver

SOLVER_NAME = "glucose4"


class Cnf:
    def __init__(self):
        self.nvars = 0
        self.clauses = []
        self._and_cache = {}

    def var(self):
        self.nvars += 1
        return self.nvars

    @staticmethod
    def neg(lit):
        if lit is True:
            return False
        if lit is False:
            return True
        return -lit

    def add(self, lits):
        out = []
        for lit in lits:
            if lit is True:
                return
            if lit is False:
                continue
            out.append(lit)
        self.clauses.append(out)

    def and_(self, lits):
        seen = set()
        for lit in lits:
            if lit is False:
                return False
            if lit is True:
                continue
            if -lit in seen:
                return False
            seen.add(lit)
        if not seen:
            return True
        if len(seen) == 1:
            return next(iter(seen))
        key = frozenset(seen)
        y = self._and_cache.get(key)
        if y is None:
            y = self.var()
            for lit in seen:
                self.clauses.append([-y, lit])
            self.clauses.append([y] + [-lit for lit in seen])
            self._and_cache[key] = y
        return y

    def or_(self, lits):
        return self.neg(self.and_([self.neg(lit) for lit in lits]))


def solve(cnf, assumptions=(), time_limit=None, solver=None):
    """Returns (status, model, solver). status is True/False, or None on interrupt."""
    s = solver or Solver(name=SOLVER_NAME, bootstrap_with=cnf.clauses)
    if time_limit is None:
        ok = s.solve(assumptions=list(assumptions))
    else:
        timer = threading.Timer(max(time_limit, 0.0), s.interrupt)
        timer.start()
        try:
            ok = s.solve_limited(assumptions=list(assumptions), expect_interrupt=True)
        finally:
            timer.cancel()
            s.clear_interrupt()
    return ok, (s.get_model() if ok else None), s
