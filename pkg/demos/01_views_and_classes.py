"""Evaluate views on a small path, then look at the element classes they induce."""
from pathlib import Path

from ucv.evaluation import class_table, lambda_map
from ucv.frontend import parse_facts, parse_theory, render

DATA = Path(__file__).parent / "data"

theory = parse_theory((DATA / "path.ucv").read_text())
path = parse_facts((DATA / "path.facts").read_text(), theory.vocabulary)

print("Theory:")
print(render(theory))
print("Base structure:")
print(render(path))

# Lambda replaces the base relations by the unary view images.
print("View images:")
print(render(lambda_map(path, theory.views)))

# Elements agreeing on every view share a class; labels list view 1 first.
table = class_table(path, theory.views)
for element in path.universe:
    print(f"  {element}: {table[element]}")
