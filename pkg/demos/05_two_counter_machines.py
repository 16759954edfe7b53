"""Compile two-counter machines to sentences over views with inequalities."""
from pathlib import Path

from ucv.apps.twocm import compile_2cm, encode_trace, failing_conjuncts, parse_machine, simulate
from ucv.core import Structure
from ucv.frontend import render
from ucv.sat import bounded_model_search

DATA = Path(__file__).parent / "data"

halting = parse_machine((DATA / "halting.2cm").read_text())
print("run:", simulate(halting, 10))
compiled = compile_2cm(halting)
print(f"{len(compiled.views)} views, {len(compiled.conjuncts)} named conjuncts, dialect {compiled.theory.dialect.value}")

trace = encode_trace(halting, 10)
print(render(trace), end="")
print("failing conjuncts on the trace:", failing_conjuncts(compiled, trace))

# Deleting the final configuration breaks the encoding.
facts = {f for f in trace.facts() if not (f.relation == "config" and f.args[0] == 2)}
rels = {}
for f in facts:
    rels.setdefault(f.relation, set()).add(f.args)
broken = Structure(trace.vocabulary, rels, trace.universe)
print("failing conjuncts after deleting config(2,...):", failing_conjuncts(compiled, broken))

looping = compile_2cm(parse_machine((DATA / "looping.2cm").read_text()))
print("looping machine, bounded search up to 4:", bounded_model_search(looping.sentence, looping.views, 4))
