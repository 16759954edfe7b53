"""Command-line entry point. Exit codes: 0 definitive answer, 2 unknown or budget, 1 usage or input error."""
from __future__ import annotations

import argparse
import os
import re
import sys

from .core import Vocabulary, is_sentence, qrank
from .errors import ResourceError, UcvError, UnsupportedCertificationError
from .evaluation import class_table, lambda_map, model_check
from .frontend import (dumps, parse_facts, parse_fo_formula, parse_formula, parse_theory, render,
                       render_formula, to_document)

EXIT_OK, EXIT_ERROR, EXIT_UNKNOWN = 0, 1, 2
DEFAULTS = {"max_size": 4, "time": 10.0, "seed": 0, "workers": 1, "out": "text"}
ENV = {"max_size": ("UCV_MAX_SIZE", int), "time": ("UCV_TIME", float), "seed": ("UCV_SEED", int),
       "workers": ("UCV_WORKERS", int)}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _common(parser):
    s = argparse.SUPPRESS
    parser.add_argument("--out", choices=["text", "structured"], default=s, help="output format")
    parser.add_argument("--seed", type=int, default=s, help="random seed")
    parser.add_argument("--max-size", dest="max_size", type=int, default=s, help="model size budget (4)")
    parser.add_argument("--time", type=float, default=s, help="time budget in seconds (10)")
    parser.add_argument("--workers", type=int, default=s, help="accepted for compatibility; output never depends on it")


def build_parser():
    common = _Parser(add_help=False)
    _common(common)
    p = _Parser(prog="ucv", description="Reasoning over first-order logic of unary conjunctive views.",
                parents=[common])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    c = sub.add_parser("check", parents=[common], help="parse a theory and report its shape")
    c.add_argument("theory")
    c.add_argument("--facts", help="also model-check the query on this database")

    c = sub.add_parser("eval", parents=[common], help="view images, classes and query value on a database")
    c.add_argument("theory")
    c.add_argument("facts")

    c = sub.add_parser("views", parents=[common], help="enumerate all views up to a length")
    c.add_argument("--vocab", required=True, help="e.g. E/2,P/1")
    c.add_argument("--m", type=int, required=True)

    c = sub.add_parser("sat", parents=[common], help="decide satisfiability of the query")
    c.add_argument("theory")
    c.add_argument("--certified", action="store_true")
    c.add_argument("--no-abstraction", action="store_true")
    c.add_argument("--engine", choices=["auto", "canonical", "sat"], default="auto")

    c = sub.add_parser("shrink", parents=[common], help="run the bounded-model construction on a model")
    c.add_argument("theory")
    c.add_argument("facts")
    c.add_argument("--c", type=int, default=1)
    c.add_argument("--copies", type=int, help="override the number of forest copies")
    c.add_argument("--depth", type=int, help="override the forest depth")

    c = sub.add_parser("contain", parents=[common], help="query containment under constraints")
    c.add_argument("theory")
    c.add_argument("--q1", required=True)
    c.add_argument("--q2", required=True)
    c.add_argument("--constraint", action="append", default=[])
    c.add_argument("--certified", action="store_true")

    c = sub.add_parser("imply", parents=[common], help="implication of view-containment dependencies")
    c.add_argument("theory")
    c.add_argument("--given", action="append", default=[], help="'A(x) <= B(x)' or 'A(x) < B(x)'")
    c.add_argument("--target", required=True)
    c.add_argument("--certified", action="store_true")

    c = sub.add_parser("reduce-2cm", parents=[common], help="compile a two-counter machine")
    c.add_argument("machine")
    c.add_argument("--trace", action="store_true", help="emit the encoded run and check it")
    c.add_argument("--max-steps", type=int, default=1000)
    c.add_argument("--search", action="store_true", help="also run bounded model search on the theory")

    c = sub.add_parser("inexpress", parents=[common], help="search structures separating a query from UCV")
    c.add_argument("--vocab", required=True)
    c.add_argument("--query", required=True)
    c.add_argument("--mode", choices=["generic", "fold"], default="generic")
    c.add_argument("--size-a", type=int, default=3)
    return p


def _settings(args):
    out = {}
    for key, default in DEFAULTS.items():
        if hasattr(args, key):
            out[key] = getattr(args, key)
        elif key in ENV and ENV[key][0] in os.environ:
            name, conv = ENV[key]
            try:
                out[key] = conv(os.environ[name])
            except ValueError:
                raise UsageError(f"environment variable {name} must be a number")
        else:
            out[key] = default
    if out["max_size"] < 1:
        raise UsageError("ucv: error: --max-size must be at least 1")
    return out


def _read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}")


def parse_vocab(text):
    symbols = []
    for part in filter(None, (s.strip() for s in text.split(","))):
        m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_]*)/(\d+)", part)
        if not m:
            raise UsageError(f"bad vocabulary entry {part!r}; expected NAME/ARITY")
        symbols.append((m.group(1), int(m.group(2))))
    return Vocabulary(tuple(symbols))


def _split_dependency(text):
    m = re.search(r"<=|<(?![-=])", text)
    if not m:
        raise UsageError(f"dependency {text!r} needs '<=' or '<'")
    op = "subset" if m.group(0) == "<=" else "proper"
    return text[:m.start()], text[m.end():], op


class Output:
    def __init__(self, mode):
        self.mode = mode
        self.lines = []
        self.doc = {}

    def text(self, line=""):
        self.lines.append(line)

    def emit(self):
        if self.mode == "structured":
            return dumps(self.doc)
        return "\n".join(self.lines).rstrip("\n") + "\n"


def _verdict_lines(out, verdict):
    out.text(f"verdict: {verdict.status}")
    if verdict.certificate:
        out.text(f"certificate: {verdict.certificate}")
    if verdict.sizes_searched:
        out.text("sizes searched: " + " ".join(map(str, verdict.sizes_searched)))
    if verdict.reason:
        out.text(f"reason: {verdict.reason}")
    if verdict.model is not None:
        out.text(f"model (size {verdict.model.size}):")
        out.text(render(verdict.model).rstrip("\n"))


def _verdict_doc(verdict):
    return {"status": verdict.status, "certificate": verdict.certificate,
            "bound": None if verdict.bound is None else str(verdict.bound),
            "sizes_searched": list(verdict.sizes_searched), "reason": verdict.reason,
            "model": None if verdict.model is None else to_document(verdict.model),
            "model_size": None if verdict.model is None else verdict.model.size}


def cmd_check(args, cfg, out):
    theory = parse_theory(_read(args.theory))
    out.text(f"dialect: {theory.dialect.value}")
    out.text(f"relations: {theory.vocabulary}")
    out.text(f"views: {len(theory.views)}")
    for v in theory.views:
        out.text(f"  {v.name}: length {v.length}, {v.dialect.value}")
    doc = {"dialect": theory.dialect.value, "vocabulary": to_document(theory.vocabulary),
           "views": [to_document(v) for v in theory.views], "query": None}
    if theory.query is not None:
        out.text(f"query: {render_formula(theory.query)}")
        out.text(f"quantifier rank: {qrank(theory.query)}; sentence: {is_sentence(theory.query)}")
        doc["query"] = {"text": render_formula(theory.query), "qrank": qrank(theory.query)}
    if args.facts:
        s = parse_facts(_read(args.facts), theory.vocabulary)
        value = model_check(theory.query, s, theory.views)
        out.text(f"holds: {str(value).lower()}")
        doc["holds"] = value
    out.doc = doc
    return EXIT_OK


def cmd_eval(args, cfg, out):
    theory = parse_theory(_read(args.theory))
    s = parse_facts(_read(args.facts), theory.vocabulary)
    image = lambda_map(s, theory.views)
    table = class_table(s, theory.views)
    out.text("# view images")
    out.text(render(image).rstrip("\n"))
    out.text("# classes (" + " ".join(theory.views.names) + ")")
    for e in s.universe:
        out.text(f"{e}: {table[e]}")
    doc = {"image": to_document(image), "classes": {str(e): table[e].label for e in s.universe}}
    if theory.query is not None:
        value = model_check(theory.query, s, theory.views)
        value = sorted(value, key=str) if isinstance(value, frozenset) else value
        out.text(f"query: {value}")
        doc["query"] = value
    out.doc = doc
    return EXIT_OK


def cmd_views(args, cfg, out):
    from .views import count_bound, enumerate_views
    vocab = parse_vocab(args.vocab)
    vs = enumerate_views(vocab, args.m)
    for v in vs:
        out.text(render(v))
    out.text(f"# {vs.N} views; bound m(mp)^m = {count_bound(len(vocab), args.m)}")
    out.doc = {"views": [to_document(v) for v in vs], "count": vs.N,
               "bound": count_bound(len(vocab), args.m)}
    return EXIT_OK


def cmd_sat(args, cfg, out):
    from .sat import decide
    theory = parse_theory(_read(args.theory))
    if theory.query is None:
        raise UsageError("theory has no query")
    try:
        verdict = decide(theory.query, theory.views, max_size=cfg["max_size"], time_limit=cfg["time"],
                         seed=cfg["seed"], certified=args.certified,
                         use_abstraction=not args.no_abstraction, engine=args.engine)
    except UnsupportedCertificationError as e:
        out.text(f"error: {e}")
        if e.verdict is not None:
            _verdict_lines(out, e.verdict)
        out.doc = {"error": str(e), "verdict": None if e.verdict is None else _verdict_doc(e.verdict)}
        return EXIT_ERROR
    _verdict_lines(out, verdict)
    out.doc = _verdict_doc(verdict)
    return EXIT_UNKNOWN if verdict.status == "UNKNOWN" else EXIT_OK


def cmd_shrink(args, cfg, out):
    from .pipeline import run_pipeline
    theory = parse_theory(_read(args.theory))
    s = parse_facts(_read(args.facts), theory.vocabulary)
    views = theory.view_set_for(theory.query)
    result = run_pipeline(s, theory.query, views, c=args.c, copies=args.copies, depth=args.depth,
                          seed=cfg["seed"])
    params = {k: (str(v) if isinstance(v, int) and not isinstance(v, bool) and v > 2 ** 53 else v)
              for k, v in result.parameters.items()}
    out.text("parameters: " + ", ".join(f"{k}={v}" for k, v in params.items()))
    stages = []
    for st in result.stages:
        js = "-" if st.js is None else ("ok" if st.js.ok else f"{len(st.js.violations)} violations")
        cls = "-" if st.classes is None else ("ok" if st.classes.ok else
                                               f"missing {list(st.classes.missing)} extra {list(st.classes.extra)}")
        out.text(f"stage {st.subproperty} {st.stage}: size {st.size}, invariant {js}, classes {cls}"
                 + "".join(f"; {n}" for n in st.notes))
        stages.append({"stage": st.stage, "subproperty": st.subproperty, "size": st.size,
                       "invariant_ok": None if st.js is None else st.js.ok,
                       "invariant_violations": [] if st.js is None else [
                           {"node": list(map(str, loc)), "message": msg} for loc, msg in st.js.violations],
                       "classes_ok": None if st.classes is None else st.classes.ok,
                       "missing": [] if st.classes is None else list(st.classes.missing),
                       "extra": [] if st.classes is None else list(st.classes.extra),
                       "notes": list(st.notes)})
    for d in result.diagnostics:
        out.text(f"diagnostic: {d}")
    if result.model is not None:
        out.text(f"model (size {result.model.size}, bound {result.size_bound}):")
        out.text(render(result.model).rstrip("\n"))
    out.doc = {"ok": result.ok, "parameters": params, "stages": stages,
               "diagnostics": list(result.diagnostics),
               "model": None if result.model is None else to_document(result.model)}
    return EXIT_OK if result.ok else EXIT_UNKNOWN


def _unary_formula(text, theory):
    return parse_formula(text, theory.views)


def cmd_contain(args, cfg, out):
    from .apps.containment import check_containment
    theory = parse_theory(_read(args.theory))
    q1 = _unary_formula(args.q1, theory)
    q2 = _unary_formula(args.q2, theory)
    cons = [parse_formula(c, theory.views) for c in args.constraint]
    r = check_containment(q1, q2, theory.views, cons, max_size=cfg["max_size"], time_limit=cfg["time"],
                          seed=cfg["seed"], certified=args.certified)
    out.text(f"result: {r.status}")
    if r.verdict.certificate:
        out.text(f"certificate: {r.verdict.certificate}")
    if r.model is not None:
        out.text(f"witness element: {r.element}")
        out.text(render(r.model).rstrip("\n"))
    out.doc = {"result": r.status, "element": r.element, "verdict": _verdict_doc(r.verdict)}
    return EXIT_UNKNOWN if r.status == "UNKNOWN" else EXIT_OK


def cmd_imply(args, cfg, out):
    from .apps.containment import Dependency, imply_dependencies
    theory = parse_theory(_read(args.theory))

    def dep(text):
        lhs, rhs, op = _split_dependency(text)
        return Dependency(_unary_formula(lhs, theory), _unary_formula(rhs, theory), op)
    r = imply_dependencies([dep(g) for g in args.given], dep(args.target), theory.views,
                           max_size=cfg["max_size"], time_limit=cfg["time"], seed=cfg["seed"],
                           certified=args.certified)
    out.text(f"result: {r.status}")
    if r.verdict.certificate:
        out.text(f"certificate: {r.verdict.certificate}")
    if r.model is not None:
        out.text(render(r.model).rstrip("\n"))
    out.doc = {"result": r.status, "verdict": _verdict_doc(r.verdict)}
    return EXIT_UNKNOWN if r.status == "UNKNOWN" else EXIT_OK


def cmd_reduce(args, cfg, out):
    from .apps.twocm import compile_2cm, encode_trace, failing_conjuncts, parse_machine
    from .sat import bounded_model_search, NoModelUpTo, Sat
    machine = parse_machine(_read(args.machine))
    compiled = compile_2cm(machine)
    doc = {"theory": render(compiled.theory), "conjuncts": [n for n, _ in compiled.conjuncts]}
    code = EXIT_OK
    if not args.trace and not args.search:
        out.text(render(compiled.theory).rstrip("\n"))
    if args.trace:
        trace = encode_trace(machine, args.max_steps)
        failing = failing_conjuncts(compiled, trace)
        out.text("# encoded run")
        out.text(render(trace).rstrip("\n"))
        out.text(f"# sentence holds: {str(not failing).lower()}")
        for n in failing:
            out.text(f"# failing conjunct: {n}")
        doc["trace"] = to_document(trace)
        doc["failing"] = failing
        code = EXIT_OK if not failing else EXIT_ERROR
    if args.search:
        res = bounded_model_search(compiled.sentence, compiled.views, cfg["max_size"], cfg["seed"], cfg["time"])
        if isinstance(res, Sat):
            out.text(f"# search: model of size {res.model.size}")
            out.text(render(res.model).rstrip("\n"))
            doc["search"] = {"status": "SAT", "model": to_document(res.model)}
        elif isinstance(res, NoModelUpTo):
            out.text(f"# search: no model up to size {res.size} (not a proof: the dialect is undecidable)")
            doc["search"] = {"status": "NoModelUpTo", "size": res.size}
            code = max(code, EXIT_UNKNOWN) if code != EXIT_ERROR else code
        else:
            out.text(f"# search: budget reached after size {res.completed_up_to}")
            doc["search"] = {"status": "budget", "completed_up_to": res.completed_up_to}
            code = EXIT_UNKNOWN if code == EXIT_OK else code
    out.doc = doc
    return code


def cmd_inexpress(args, cfg, out):
    from .apps.expressivity import search_inexpressibility_witness
    vocab = parse_vocab(args.vocab)
    query = parse_fo_formula(args.query, vocab)
    w = search_inexpressibility_witness(query, vocab, max_size=cfg["max_size"], mode=args.mode,
                                        size_a=args.size_a, time_limit=cfg["time"])
    if w is None:
        out.text(f"no witness within the bounds (mode {args.mode})")
        out.doc = {"witness": None, "mode": args.mode}
        return EXIT_OK
    out.text(f"witness found (mode {w.mode}): query is {str(w.value_a).lower()} on A, "
             f"{str(w.value_b).lower()} on B")
    out.text(f"# A (size {w.a.size})")
    out.text(render(w.a).rstrip("\n"))
    out.text(f"# B (size {w.b.size})")
    out.text(render(w.b).rstrip("\n"))
    out.doc = {"witness": {"a": to_document(w.a), "b": to_document(w.b), "value_a": w.value_a,
                           "value_b": w.value_b}, "mode": w.mode}
    return EXIT_OK


COMMANDS = {"check": cmd_check, "eval": cmd_eval, "views": cmd_views, "sat": cmd_sat, "shrink": cmd_shrink,
            "contain": cmd_contain, "imply": cmd_imply, "reduce-2cm": cmd_reduce, "inexpress": cmd_inexpress}


def run(argv):
    """Returns (exit code, stdout text, stderr text)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _settings(args)
    except UsageError as e:
        return EXIT_ERROR, "", f"{e}\n"
    out = Output(cfg["out"])
    try:
        code = COMMANDS[args.command](args, cfg, out)
    except UsageError as e:
        return EXIT_ERROR, "", f"ucv: error: {e}\n"
    except ResourceError as e:
        return EXIT_UNKNOWN, "", f"ucv: budget: {e}\n"
    except UcvError as e:
        return EXIT_ERROR, "", f"ucv: error: {e}\n"
    return code, out.emit(), ""


def main(argv=None):
    code, stdout, stderr = run(sys.argv[1:] if argv is None else argv)
    sys.stdout.write(stdout)
    sys.stderr.write(stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
