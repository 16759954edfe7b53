"""Decide three sentences: one refuted without search, one with a smallest model, one rich vocabulary."""
from pathlib import Path

from ucv.frontend import parse_theory, render
from ucv.sat import decide, normalize_rank1

DATA = Path(__file__).parent / "data"

for name in ("unrealizable.ucv", "no_loops.ucv", "intro.ucv"):
    theory = parse_theory((DATA / name).read_text())
    print(f"== {name}")
    print("query:", render(theory.query))
    form = normalize_rank1(theory.query, theory.views)
    print("class literals in the rank-1 form:", len(form.literals()))
    verdict = decide(theory.query, theory.views, max_size=4)
    print("verdict:", verdict.status, f"({verdict.certificate or verdict.reason or 'model found'})")
    if verdict.model is not None:
        print(render(verdict.model), end="")
    print()
