"""Query containment and dependency implication reduce to satisfiability."""
from ucv.apps.containment import Dependency, check_containment, imply_dependencies
from ucv.frontend import parse_formula, parse_theory, render

theory = parse_theory("rel E/2. view Out(x) <- E(x,y). view Two(x) <- E(x,y), E(y,z). view Loop(x) <- E(x,x).")
q = lambda text: parse_formula(text, theory.views.names)

for left, right in (("Two(x)", "Out(x)"), ("Out(x)", "Two(x)")):
    r = check_containment(q(left), q(right), theory.views)
    print(f"{left} within {right}: {r.status}")
    if r.model is not None:
        print(f"  counterexample, witness {r.element}:", render(r.model).strip().replace("\n", " "))

every_out_loops = q("forall y (Out(y) -> Loop(y))")
r = check_containment(q("Out(x)"), q("Two(x)"), theory.views, [every_out_loops])
print("Out(x) within Two(x) when every element with an edge has a loop:", r.status)

given = [Dependency(q("Loop(x)"), q("Two(x)")), Dependency(q("Two(x)"), q("Out(x)"))]
target = Dependency(q("Loop(x)"), q("Out(x)"))
print("Loop <= Two, Two <= Out imply Loop <= Out:", imply_dependencies(given, target, theory.views).status)
