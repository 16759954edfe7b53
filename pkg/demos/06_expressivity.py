"""Pairs of structures no view sentence separates, yet a first-order query does."""
from ucv.apps.expressivity import hom_agreement_check, search_inexpressibility_witness
from ucv.core import Vocabulary
from ucv.frontend import parse_fo_formula, render

E = Vocabulary((("E", 2),))
queries = {
    "symmetry": ("forall x forall y (E(x,y) -> E(y,x))", "generic"),
    "transitivity": ("forall x forall y forall z (E(x,y) & E(y,z) -> E(x,z))", "fold"),
    "some edge": ("exists x exists y E(x,y)", "generic"),
}
for name, (text, mode) in queries.items():
    w = search_inexpressibility_witness(parse_fo_formula(text, E), E, max_size=4, mode=mode, size_a=3)
    print(f"== {name} ({mode} search)")
    if w is None:
        print("  no witness: the query may be expressible")
        continue
    print("  A:", render(w.a).strip().replace("\n", " "), "->", w.value_a)
    print("  B:", render(w.b).strip().replace("\n", " "), "->", w.value_b)
    print("  homomorphism agreement:", hom_agreement_check(w.a, w.b))
