"""Rebuild a model through the five construction stages and report the checks after each one."""
from pathlib import Path

from ucv.frontend import parse_facts, parse_theory
from ucv.pipeline import run_pipeline

DATA = Path(__file__).parent / "data"

theory = parse_theory((DATA / "path.ucv").read_text())
model = parse_facts((DATA / "path.facts").read_text(), theory.vocabulary)
result = run_pipeline(model, theory.query, theory.views)

print("parameters:", {k: v for k, v in result.parameters.items() if k != "size_bound"})
for stage in result.stages:
    print(f"  {stage.stage:8s} size {stage.size:4d}  JS ok={stage.js.ok}  classes ok={stage.classes.ok}"
          + (f"  [{'; '.join(stage.notes)}]" if stage.notes else ""))
print(f"final size {len(result.model.universe)}, allowed {result.size_bound}")
print("overall:", "ok" if result.ok else result.diagnostics)
