"""Text formats: `.ucv` theories, `.facts` databases, canonical printing and JSON export."""
from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass
from enum import Enum

from .core import (And, Atom, ConjunctiveView, Dialect, Exists, Fact, FORMULA_VIEWS, Not, RelAtom,
                   Structure, ViewAtom, ViewSet, Vocabulary, disj, element_key, forall, free_vars,
                   iff, implies, max_dialect, sort_elements)
from .errors import InputError, ParseError, UnsafeViewError

OPERATORS = ["<->", "<-", "->", "!=", "<=", "<", "!", "&", "|", "(", ")", ",", ".", "/", "=", ">"]
KEYWORDS = {"rel", "view", "query", "exists", "forall", "universe"}
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
_INT = re.compile(r"-?[0-9]+")


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, INT, STRING, OP, EOF
    text: str
    line: int
    col: int
    value: object = None


def tokenize(text):
    tokens = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, col, i = line + 1, 1, i + 1
            continue
        if ch.isspace():
            i, col = i + 1, col + 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == '"':
            try:
                value, end = json.JSONDecoder().raw_decode(text, i)
            except json.JSONDecodeError:
                raise ParseError("unterminated string", line, col)
            if not isinstance(value, str):
                raise ParseError("bad string literal", line, col)
            tokens.append(Token("STRING", text[i:end], line, col, value))
            col += end - i
            i = end
            continue
        m = _INT.match(text, i)
        if m and (ch != "-" or (m.end() > i + 1)):
            if not (ch == "-" and text.startswith("->", i)):
                tokens.append(Token("INT", m.group(), line, col, int(m.group())))
                col += m.end() - i
                i = m.end()
                continue
        m = _IDENT.match(text, i)
        if m:
            tokens.append(Token("IDENT", m.group(), line, col, m.group()))
            col += m.end() - i
            i = m.end()
            continue
        for op in OPERATORS:
            if text.startswith(op, i):
                tokens.append(Token("OP", op, line, col))
                i += len(op)
                col += len(op)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def tok(self):
        return self.tokens[self.pos]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def at(self, kind, text=None):
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def at_op(self, text):
        return self.at("OP", text)

    def take(self, kind, text=None):
        t = self.tok
        if not self.at(kind, text):
            want = text or kind.lower()
            got = t.text or "end of input"
            raise self.error(f"expected {want!r}, got {got!r}")
        self.pos += 1
        return t

    def ident(self):
        return self.take("IDENT").text

    def accept(self, text):
        if self.at_op(text):
            self.pos += 1
            return True
        return False


# formulas

class _FormulaParser:
    """Precedence: <-> < -> < | < & < unary. Quantifiers take a unary operand."""

    def __init__(self, p, atom):
        self.p = p
        self.atom = atom

    def formula(self):
        left = self.implication()
        while self.p.accept("<->"):
            left = iff(left, self.implication())
        return left

    def implication(self):
        left = self.disjunction()
        if self.p.accept("->"):
            return implies(left, self.implication())
        return left

    def disjunction(self):
        parts = [self.conjunction()]
        while self.p.accept("|"):
            parts.append(self.conjunction())
        return disj(*parts)

    def conjunction(self):
        parts = [self.unary()]
        while self.p.accept("&"):
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary(self):
        p = self.p
        if p.accept("!"):
            return Not(self.unary())
        if p.at("IDENT", "exists") or p.at("IDENT", "forall"):
            kind = p.ident()
            names = [p.ident()]
            while p.accept(","):
                names.append(p.ident())
            body = self.unary()
            for v in reversed(names):
                body = Exists(v, body) if kind == "exists" else forall(v, body)
            return body
        if p.accept("("):
            f = self.formula()
            p.take("OP", ")")
            return f
        tok = p.tok
        name = p.ident()
        p.take("OP", "(")
        args = [p.ident()]
        while p.accept(","):
            args.append(p.ident())
        p.take("OP", ")")
        return self.atom(name, tuple(args), tok)


def _view_atom_factory(p, views):
    def make(name, args, tok):
        if name not in views:
            raise p.error(f"undefined view {name}", tok)
        if len(args) != 1:
            raise p.error(f"view {name} is unary but used with {len(args)} arguments", tok)
        return ViewAtom(name, args[0])
    return make


def _rel_atom_factory(p, vocabulary):
    def make(name, args, tok):
        if name not in vocabulary:
            raise p.error(f"unknown relation {name}", tok)
        if vocabulary.arity(name) != len(args):
            raise p.error(f"arity mismatch: {name} has arity {vocabulary.arity(name)}", tok)
        return RelAtom(name, args)
    return make


def parse_formula(text, views):
    """Parse a UCV formula; `views` is a ViewSet or a collection of view names."""
    names = set(views.names) if isinstance(views, ViewSet) else set(views)
    p = _Parser(text)
    f = _FormulaParser(p, _view_atom_factory(p, names)).formula()
    p.accept(".")
    p.take("EOF")
    return f


def parse_fo_formula(text, vocabulary):
    """Parse a first-order formula over base relations (no equality)."""
    p = _Parser(text)
    f = _FormulaParser(p, _rel_atom_factory(p, vocabulary)).formula()
    p.accept(".")
    p.take("EOF")
    return f


# theories

@dataclass(frozen=True)
class Theory:
    vocabulary: Vocabulary
    views: ViewSet
    query: object = None

    @property
    def dialect(self):
        return self.views.dialect

    def view_set_for(self, formula):
        from .core import view_names
        used = view_names(formula)
        return ViewSet(tuple(v for v in self.views if v.name in used), FORMULA_VIEWS)


def parse_theory(text):
    p = _Parser(text)
    rels = []
    rules = []   # (name, head, literals, token)
    query = None
    query_pos = None
    while not p.at("EOF"):
        tok = p.tok
        kw = p.ident() if p.at("IDENT") else None
        if kw == "rel":
            name = p.ident()
            p.take("OP", "/")
            arity_tok = p.take("INT")
            if arity_tok.value < 1:
                raise p.error("arity must be at least 1 (constants are not supported)", arity_tok)
            rels.append((name, arity_tok.value, tok))
            p.take("OP", ".")
        elif kw == "view":
            name = p.ident()
            p.take("OP", "(")
            head = p.ident()
            p.take("OP", ")")
            p.take("OP", "<-")
            lits = [_body_literal(p)]
            while p.accept(","):
                lits.append(_body_literal(p))
            p.take("OP", ".")
            rules.append((name, head, lits, tok))
        elif kw == "query":
            if query_pos is not None:
                raise p.error("only one query per theory", tok)
            query_pos = p.pos
            depth = 0
            while not (p.at_op(".") and depth == 0):
                if p.at("EOF"):
                    raise p.error("unterminated query")
                if p.at_op("("):
                    depth += 1
                elif p.at_op(")"):
                    depth -= 1
                p.pos += 1
            p.take("OP", ".")
        else:
            raise p.error(f"expected 'rel', 'view' or 'query', got {tok.text!r}", tok)

    names = [n for n, _, _ in rels]
    for n, _, tok in rels:
        if names.count(n) > 1:
            raise p.error(f"relation {n} declared twice", tok)
    vocabulary = Vocabulary(tuple((n, a) for n, a, _ in rels))
    view_names = {r[0] for r in rules}
    recursive = any(a.relation in view_names and a.relation not in vocabulary
                    for _, _, lits, _ in rules for kind, a, _ in lits if kind != "neq")
    seen = set()
    views = []
    for name, head, lits, tok in rules:
        if name in seen and not recursive:
            raise p.error(f"view {name} defined twice", tok)
        seen.add(name)
        body, neqs, negs = [], [], []
        for kind, a, atok in lits:
            if kind == "neq":
                neqs.append(a)
                continue
            if a.relation in vocabulary:
                if vocabulary.arity(a.relation) != a.arity:
                    raise p.error(f"arity mismatch: {a.relation} has arity "
                                  f"{vocabulary.arity(a.relation)}, used with {a.arity}", atok)
            elif a.relation in view_names:
                if a.arity != 1:
                    raise p.error(f"view {a.relation} is unary", atok)
            else:
                raise p.error(f"undeclared relation {a.relation}", atok)
            (negs if kind == "neg" else body).append(a)
        try:
            views.append(ConjunctiveView(name, head, tuple(body), tuple(neqs), tuple(negs), recursive))
        except UnsafeViewError as e:
            raise ParseError(str(e), tok.line, tok.col) from None
    viewset = ViewSet(tuple(views), FORMULA_VIEWS)
    if query_pos is not None:
        end = p.pos
        p.pos = query_pos
        query = _FormulaParser(p, _view_atom_factory(p, view_names)).formula()
        if not p.at_op("."):
            raise p.error("expected '.' after query")
        p.pos = end
        extra = free_vars(query)
        if extra:
            raise p.error(f"query has free variables {sorted(extra)}", p.tokens[query_pos])
    return Theory(vocabulary, viewset, query)


def _body_literal(p):
    tok = p.tok
    if p.accept("!"):
        return ("neg", _atom(p), tok)
    name = p.ident()
    if p.accept("!="):
        return ("neq", (name, p.ident()), tok)
    p.take("OP", "(")
    args = [p.ident()]
    while p.accept(","):
        args.append(p.ident())
    p.take("OP", ")")
    return ("pos", Atom(name, tuple(args)), tok)


def _atom(p):
    name = p.ident()
    p.take("OP", "(")
    args = [p.ident()]
    while p.accept(","):
        args.append(p.ident())
    p.take("OP", ")")
    return Atom(name, tuple(args))


# facts

def _element(p):
    t = p.tok
    if t.kind in ("INT", "IDENT", "STRING"):
        p.pos += 1
        return t.value
    raise p.error(f"expected an element, got {t.text!r}")


def parse_facts(text, vocabulary):
    p = _Parser(text)
    facts = []
    universe = None
    while not p.at("EOF"):
        tok = p.tok
        name = p.ident()
        if name == "universe" and not p.at_op("("):
            if universe is not None:
                raise p.error("universe declared twice", tok)
            universe = []
            while not p.at_op("."):
                universe.append(_element(p))
            p.take("OP", ".")
            continue
        if name not in vocabulary:
            raise p.error(f"unknown relation {name}", tok)
        p.take("OP", "(")
        args = [_element(p)]
        while p.accept(","):
            args.append(_element(p))
        p.take("OP", ")")
        p.take("OP", ".")
        if len(args) != vocabulary.arity(name):
            raise p.error(f"arity mismatch: {name} has arity {vocabulary.arity(name)}, "
                          f"got {len(args)} arguments", tok)
        facts.append(Fact(name, tuple(args)))
    if universe is not None:
        missing = {e for f in facts for e in f.args} - set(universe)
        if missing:
            raise InputError(f"universe does not contain {sorted(map(str, missing))}")
    return Structure.from_facts(vocabulary, facts, universe)


# rendering

def render_element(e):
    if isinstance(e, int):
        return str(e)
    if _IDENT.fullmatch(e) and e not in KEYWORDS:
        return e
    return json.dumps(e, ensure_ascii=False)


def _or_parts(f):
    if isinstance(f, Not) and isinstance(f.body, And) and all(isinstance(q, Not) for q in f.body.parts):
        return [q.body for q in f.body.parts]
    return None


def _forall_body(f):
    if isinstance(f, Not) and isinstance(f.body, Exists) and isinstance(f.body.body, Not):
        return f.body.var, f.body.body.body
    return None


def _level(f):
    if _or_parts(f) is not None:
        return 0
    if isinstance(f, And):
        return 1
    return 2


def render_formula(f, min_level=0):
    if _level(f) < min_level:
        return "(" + render_formula(f, 0) + ")"
    if isinstance(f, ViewAtom):
        return f"{f.view}({f.var})"
    if isinstance(f, RelAtom):
        return f"{f.relation}({','.join(f.args)})"
    parts = _or_parts(f)
    if parts is not None:
        return " | ".join(render_formula(q, 1) for q in parts)
    if isinstance(f, And):
        return " & ".join(render_formula(q, 2) for q in f.parts)
    fa = _forall_body(f)
    if fa is not None:
        return f"forall {fa[0]} " + render_formula(fa[1], 2)
    if isinstance(f, Not):
        return "!" + render_formula(f.body, 2)
    if isinstance(f, Exists):
        return f"exists {f.var} " + render_formula(f.body, 2)
    raise TypeError(f"not a formula: {f!r}")


def render_view(v):
    parts = [str(a) for a in v.body]
    parts += [f"{x} != {y}" for x, y in v.inequalities]
    parts += [f"!{a}" for a in v.negated]
    return f"view {v.name}({v.head}) <- {', '.join(parts)}."


def render_vocabulary(vocab):
    return "".join(f"rel {n}/{a}.\n" for n, a in vocab.symbols)


def render_structure(s, with_universe=None):
    lines = []
    if with_universe or (with_universe is None and set(s.universe) != set(s.adom())):
        lines.append("universe " + " ".join(render_element(e) for e in s.universe) + ".")
    for f in s.facts():
        lines.append(f"{f.relation}({','.join(render_element(e) for e in f.args)}).")
    return "\n".join(lines) + "\n"


def render_theory(t):
    out = render_vocabulary(t.vocabulary)
    out += "".join(render_view(v) + "\n" for v in t.views)
    if t.query is not None:
        out += f"query {render_formula(t.query)}.\n"
    return out


def render(value):
    """Canonical text for any core value."""
    if isinstance(value, Theory):
        return render_theory(value)
    if isinstance(value, Structure):
        return render_structure(value)
    if isinstance(value, Vocabulary):
        return render_vocabulary(value)
    if isinstance(value, ConjunctiveView):
        return render_view(value)
    if isinstance(value, ViewSet):
        return "".join(render_view(v) + "\n" for v in value)
    if isinstance(value, (ViewAtom, RelAtom, Not, And, Exists)):
        return render_formula(value)
    if isinstance(value, Fact):
        return f"{value.relation}({','.join(render_element(e) for e in value.args)})."
    raise TypeError(f"cannot render {type(value).__name__}")


# structured export

def to_document(value):
    """Plain JSON-compatible data with deterministic ordering."""
    if isinstance(value, Structure):
        return {"type": "Structure", "universe": [to_document(e) for e in value.universe],
                "relations": {n: [[to_document(e) for e in f.args] for f in value.facts() if f.relation == n]
                              for n in value.vocabulary.names},
                "vocabulary": to_document(value.vocabulary)}
    if isinstance(value, Vocabulary):
        return [{"name": n, "arity": a} for n, a in value.symbols]
    if isinstance(value, ConjunctiveView):
        return {"type": "View", "name": value.name, "text": render_view(value),
                "length": value.length, "dialect": value.dialect.value}
    if isinstance(value, (ViewAtom, RelAtom, Not, And, Exists)):
        return {"type": "Formula", "text": render_formula(value)}
    if isinstance(value, Theory):
        return {"type": "Theory", "text": render_theory(value), "dialect": value.dialect.value,
                "vocabulary": to_document(value.vocabulary),
                "views": [to_document(v) for v in value.views],
                "query": None if value.query is None else render_formula(value.query)}
    if isinstance(value, Enum):
        return value.value
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        doc = {"type": type(value).__name__}
        for f in dataclasses.fields(value):
            doc[f.name] = to_document(getattr(value, f.name))
        return doc
    if isinstance(value, dict):
        return {str(k): to_document(v) for k, v in value.items()}
    if isinstance(value, (set, frozenset)):
        items = [to_document(v) for v in value]
        return sorted(items, key=lambda d: json.dumps(d, sort_keys=True))
    if isinstance(value, (list, tuple)):
        return [to_document(v) for v in value]
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    return str(value)


def dumps(value):
    return json.dumps(to_document(value), sort_keys=True, indent=2, ensure_ascii=False)
