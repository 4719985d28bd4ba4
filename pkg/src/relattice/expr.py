"""Lattice expressions: syntax tree, parser, printer, header inference, evaluation.

Concrete syntax::

    union := join ('+' join)*
    join  := atom ('*' atom)*
    atom  := NAME | 00 | 01 | 10 | 11 | '[' header ']' | '[' predicate ']'
           | func '(' args ')' | '(' union ')'

``*`` is natural join, ``+`` inner union. Predicate constants are integers
or single-quoted strings; a bare identifier on the right of a comparator is an
attribute. Sugar functions::

    select(E, x=1 & y>z)   project(E, {x, y})   rename(E, y -> z)
    divide(E, F)           minus(E, F)
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields
from types import MappingProxyType
from typing import Mapping

from . import derived
from .core import (
    Relation,
    SpecialCode,
    Universe,
    columns_of,
    empty_relation,
    inner_union,
    natural_join,
    special_element,
)
from .derived import AttrAttr, AttrConst, Conjunction, Predicate, RenameSpec, conjoin
from .errors import EvaluationError, ExprSyntaxError, LatticeError, UniverseMismatch, UnresolvedName


class Expr:
    """Base class of syntax tree nodes. Subclasses are frozen dataclasses."""

    __slots__ = ()

    def children(self) -> tuple[Expr, ...]:
        return tuple(getattr(self, f.name) for f in fields(self) if isinstance(getattr(self, f.name), Expr))

    def with_children(self, new: tuple[Expr, ...]) -> Expr:
        new = iter(new)
        values = {
            f.name: next(new) if isinstance(getattr(self, f.name), Expr) else getattr(self, f.name)
            for f in fields(self)
        }
        return type(self)(**values)

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children())

    def __str__(self) -> str:
        return format_expr(self)


@dataclass(frozen=True)
class Join(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Union(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Name(Expr):
    ident: str


@dataclass(frozen=True)
class Special(Expr):
    code: SpecialCode


@dataclass(frozen=True)
class EmptyLit(Expr):
    """``[x y]``: the empty relation on the given attributes."""

    attrs: frozenset


@dataclass(frozen=True)
class PredLit(Expr):
    """``[x>y]``: a predicate materialized over the attributes it mentions."""

    pred: Predicate

    @property
    def attrs(self) -> frozenset:
        return self.pred.attributes()


@dataclass(frozen=True)
class Select(Expr):
    expr: Expr
    pred: Predicate


@dataclass(frozen=True)
class Project(Expr):
    expr: Expr
    attrs: frozenset


@dataclass(frozen=True)
class Rename(Expr):
    expr: Expr
    spec: RenameSpec


@dataclass(frozen=True)
class Divide(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Minus(Expr):
    left: Expr
    right: Expr


LITERALS = (EmptyLit, PredLit, Special)
SUGAR = (Select, Project, Rename)


@dataclass(frozen=True)
class Catalog:
    """Named relations over one shared universe."""

    universe: Universe
    relations: Mapping[str, Relation]

    def __post_init__(self):
        for name, r in self.relations.items():
            if r.universe != self.universe:
                raise UniverseMismatch(f"relation {name} is over a different universe")
        object.__setattr__(self, "relations", MappingProxyType(dict(self.relations)))

    def __getitem__(self, name: str) -> Relation:
        try:
            return self.relations[name]
        except KeyError:
            raise UnresolvedName(f"no relation named {name!r}") from None

    def __hash__(self):
        return hash(tuple(sorted(self.relations.items(), key=lambda kv: kv[0])))

    def __eq__(self, other):
        return (
            isinstance(other, Catalog)
            and self.universe == other.universe
            and dict(self.relations) == dict(other.relations)
        )

    def headers(self) -> dict[str, frozenset]:
        return {k: r.header for k, r in self.relations.items()}

    def to_json(self) -> dict:
        return {k: self.relations[k].to_json() for k in sorted(self.relations)}

    @classmethod
    def from_json(cls, u: Universe, doc: Mapping) -> Catalog:
        from .core import relation_from_json

        return cls(u, {name: relation_from_json(u, rel) for name, rel in doc.items()})


# ---------------------------------------------------------------- printing

_PREC = {Union: 1, Join: 2}
_BARE_CONST = re.compile(r"-?[0-9]+\Z")


def format_const(value: str) -> str:
    if _BARE_CONST.match(value):
        return value
    return "'" + value.replace("\\", "\\\\").replace("'", "\\'") + "'"


def format_pred(p: Predicate) -> str:
    if isinstance(p, AttrConst):
        return f"{p.attr}{p.op}{format_const(p.value)}"
    if isinstance(p, AttrAttr):
        return f"{p.left}{p.op}{p.right}"
    return " & ".join(format_pred(q) for q in p.parts)


def format_attrs(attrs, sep: str) -> str:
    return sep.join(columns_of(attrs))


def format_expr(e: Expr) -> str:
    """Canonical text with minimal parentheses; both operators are left-associative."""
    if isinstance(e, (Join, Union)):
        prec = _PREC[type(e)]
        op = " * " if isinstance(e, Join) else " + "
        left = format_expr(e.left)
        right = format_expr(e.right)
        if _PREC.get(type(e.left), 3) < prec:
            left = f"({left})"
        if _PREC.get(type(e.right), 3) <= prec:
            right = f"({right})"
        return left + op + right
    if isinstance(e, Name):
        return e.ident
    if isinstance(e, Special):
        return e.code.value
    if isinstance(e, EmptyLit):
        return f"[{format_attrs(e.attrs, ' ')}]"
    if isinstance(e, PredLit):
        return f"[{format_pred(e.pred)}]"
    if isinstance(e, Select):
        return f"select({format_expr(e.expr)}, {format_pred(e.pred)})"
    if isinstance(e, Project):
        return f"project({format_expr(e.expr)}, {{{format_attrs(e.attrs, ', ')}}})"
    if isinstance(e, Rename):
        return f"rename({format_expr(e.expr)}, {e.spec.source} -> {e.spec.target})"
    if isinstance(e, Divide):
        return f"divide({format_expr(e.left)}, {format_expr(e.right)})"
    if isinstance(e, Minus):
        return f"minus({format_expr(e.left)}, {format_expr(e.right)})"
    raise TypeError(f"not an expression: {e!r}")


# ----------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<STRING>'(?:[^'\\]|\\.)*')
  | (?P<NUMBER>-?[0-9]+)
  | (?P<NAME>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<CMP>!=|<=|>=|=|<|>|≠|≤|≥)
  | (?P<ARROW>->)
  | (?P<PUNCT>[*+()\[\]{},&])
    """,
    re.VERBOSE,
)
_UNICODE_CMP = {"≠": "!=", "≤": "<=", "≥": ">="}
FUNCS = ("select", "project", "rename", "divide", "minus")
SPECIALS = {c.value: c for c in SpecialCode}


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    offset: int  # byte offset


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ExprSyntaxError(text, len(text[:pos].encode()), {"token"}, repr(text[pos]))
        kind = m.lastgroup
        if kind != "ws":
            tok = m.group()
            if kind == "PUNCT":
                kind = tok
            toks.append(_Tok(kind, _UNICODE_CMP.get(tok, tok), len(text[:pos].encode())))
        pos = m.end()
    toks.append(_Tok("EOF", "", len(text.encode())))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.spans: dict[int, int] = {}

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def fail(self, expected):
        t = self.tok
        found = "end of input" if t.kind == "EOF" else repr(t.text)
        raise ExprSyntaxError(self.text, t.offset, expected, found)

    def eat(self, kind: str) -> _Tok:
        if self.tok.kind != kind:
            self.fail({kind})
        t = self.tok
        self.i += 1
        return t

    def mark(self, node: Expr, offset: int) -> Expr:
        self.spans.setdefault(id(node), offset)
        return node

    def union(self) -> Expr:
        start = self.tok.offset
        node = self.join()
        while self.tok.kind == "+":
            self.i += 1
            node = self.mark(Union(node, self.join()), start)
        return node

    def join(self) -> Expr:
        start = self.tok.offset
        node = self.atom()
        while self.tok.kind == "*":
            self.i += 1
            node = self.mark(Join(node, self.atom()), start)
        return node

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "NAME":
            self.i += 1
            if t.text in FUNCS and self.tok.kind == "(":
                return self.mark(self.call(t.text), t.offset)
            return self.mark(Name(t.text), t.offset)
        if t.kind == "NUMBER" and t.text in SPECIALS:
            self.i += 1
            return self.mark(Special(SPECIALS[t.text]), t.offset)
        if t.kind == "[":
            self.i += 1
            node = self.bracket()
            self.eat("]")
            return self.mark(node, t.offset)
        if t.kind == "(":
            self.i += 1
            node = self.union()
            self.eat(")")
            return node
        self.fail({"NAME", "00", "01", "10", "11", "[", "("})

    def bracket(self) -> Expr:
        j = self.i
        while self.toks[j].kind not in ("]", "EOF"):
            if self.toks[j].kind == "CMP":
                return PredLit(self.predicate())
            j += 1
        return EmptyLit(self.header_names(("]",)))

    def header_names(self, closers) -> frozenset:
        names = []
        while self.tok.kind not in closers:
            if self.tok.kind == "NAME" and self.tok.text in names:
                self.fail({"distinct attribute names"})
            names.append(self.eat("NAME").text)
            if self.tok.kind == ",":
                self.i += 1
                if self.tok.kind != "NAME":
                    self.fail({"NAME"})
        return frozenset(names)

    def predicate(self) -> Predicate:
        parts = [self.comparison()]
        while self.tok.kind == "&":
            self.i += 1
            parts.append(self.comparison())
        return conjoin(*parts)

    def comparison(self) -> Predicate:
        left = self.eat("NAME").text
        op = self.eat("CMP").text
        t = self.tok
        if t.kind == "NAME":
            self.i += 1
            return AttrAttr(left, op, t.text)
        if t.kind == "NUMBER":
            self.i += 1
            return AttrConst(left, op, t.text)
        if t.kind == "STRING":
            self.i += 1
            value = re.sub(r"\\(.)", r"\1", t.text[1:-1])
            if not value:
                self.fail({"non-empty constant"})
            return AttrConst(left, op, value)
        self.fail({"NAME", "NUMBER", "STRING"})

    def call(self, func: str) -> Expr:
        self.eat("(")
        first = self.union()
        self.eat(",")
        if func == "select":
            node = Select(first, self.predicate())
        elif func == "project":
            self.eat("{")
            node = Project(first, self.header_names(("}",)))
            self.eat("}")
        elif func == "rename":
            src = self.eat("NAME").text
            self.eat("ARROW")
            dst = self.eat("NAME").text
            if src == dst:
                self.fail({"attribute different from " + src})
            node = Rename(first, RenameSpec(src, dst))
        elif func == "divide":
            node = Divide(first, self.union())
        else:
            node = Minus(first, self.union())
        self.eat(")")
        return node


def parse(text: str) -> Expr:
    return parse_with_spans(text)[0]


def parse_with_spans(text: str) -> tuple[Expr, dict[tuple[int, ...], int]]:
    """Parse and also return the byte offset where each node (by path) starts."""
    p = _Parser(text)
    node = p.union()
    if p.tok.kind != "EOF":
        p.fail({"+", "*", "EOF"})
    spans = {}

    def walk(n: Expr, path: tuple[int, ...]):
        if id(n) in p.spans:
            spans[path] = p.spans[id(n)]
        for i, c in enumerate(n.children()):
            walk(c, path + (i,))

    walk(node, ())
    return node, spans


def line_col(text: str, offset: int) -> tuple[int, int]:
    head = text.encode()[:offset].decode(errors="replace")
    return head.count("\n") + 1, len(head) - (head.rfind("\n") + 1) + 1


# -------------------------------------------------------- headers & values


def names_in(e: Expr) -> frozenset[str]:
    if isinstance(e, Name):
        return frozenset((e.ident,))
    return frozenset().union(*(names_in(c) for c in e.children()))


def infer_header(e: Expr, c: Catalog) -> frozenset[str]:
    """Header of ``e`` from the catalog headers alone: join unites, union intersects."""
    if isinstance(e, Join):
        return infer_header(e.left, c) | infer_header(e.right, c)
    if isinstance(e, Union):
        return infer_header(e.left, c) & infer_header(e.right, c)
    if isinstance(e, Name):
        return c[e.ident].header
    if isinstance(e, Special):
        if e.code in (SpecialCode.EMPTY_00, SpecialCode.BOTTOM_01):
            return frozenset()
        return c.universe.all_attributes
    if isinstance(e, (EmptyLit, PredLit)):
        return frozenset(e.attrs)
    if isinstance(e, Select):
        return infer_header(e.expr, c)
    if isinstance(e, Project):
        return frozenset(e.attrs)
    if isinstance(e, Rename):
        return (infer_header(e.expr, c) - {e.spec.source}) | {e.spec.target}
    if isinstance(e, Divide):
        return infer_header(e.left, c) - infer_header(e.right, c)
    if isinstance(e, Minus):
        return infer_header(e.left, c)
    raise TypeError(f"not an expression: {e!r}")


def desugar_node(e: Expr, c: Catalog) -> Expr:
    """Rewrite one select/project/rename node into join/union/literal form.

    ``select(E, p)``  becomes ``[p] * E``,
    ``project(E, h)`` becomes ``[h] + E``,
    ``rename(E, a -> b)`` becomes ``[H(E) - a + b] + (E * [a=b])``.
    Other nodes are returned unchanged.
    """
    if isinstance(e, Select):
        return Join(PredLit(e.pred), e.expr)
    if isinstance(e, Project):
        return Union(EmptyLit(e.attrs), e.expr)
    if isinstance(e, Rename):
        s = e.spec
        target = (infer_header(e.expr, c) - {s.source}) | {s.target}
        return Union(EmptyLit(target), Join(e.expr, PredLit(AttrAttr(s.source, "=", s.target))))
    return e


def desugar(e: Expr, c: Catalog) -> Expr:
    """Remove all select/project/rename sugar; divide and minus stay."""
    e = e.with_children(tuple(desugar(ch, c) for ch in e.children()))
    return desugar_node(e, c)


def literal_value(e: Expr, u: Universe) -> Relation:
    if isinstance(e, Special):
        return special_element(u, e.code)
    if isinstance(e, EmptyLit):
        return empty_relation(u, e.attrs)
    if isinstance(e, PredLit):
        return derived.predicate_relation(u, e.attrs, e.pred)
    raise TypeError(f"not a literal: {e!r}")


def evaluate(e: Expr, c: Catalog) -> Relation:
    """Evaluate bottom-up; failures are wrapped in EvaluationError with the node path."""
    return _eval(e, c, ())


def _eval(e: Expr, c: Catalog, path: tuple[int, ...]) -> Relation:
    kids = [_eval(ch, c, path + (i,)) for i, ch in enumerate(e.children())]
    try:
        if isinstance(e, Join):
            return natural_join(*kids)
        if isinstance(e, Union):
            return inner_union(*kids)
        if isinstance(e, Name):
            return c[e.ident]
        if isinstance(e, LITERALS):
            return literal_value(e, c.universe)
        if isinstance(e, Select):
            return derived.select(kids[0], e.pred)
        if isinstance(e, Project):
            return derived.project(kids[0], e.attrs)
        if isinstance(e, Rename):
            return derived.rename(kids[0], e.spec)
        if isinstance(e, Divide):
            return derived.divide(*kids)
        if isinstance(e, Minus):
            return derived.difference(*kids)
    except EvaluationError:
        raise
    except LatticeError as exc:
        raise EvaluationError(path, format_expr(e), exc) from exc
    raise TypeError(f"not an expression: {e!r}")


def subexpr(e: Expr, path) -> Expr:
    for i in path:
        e = e.children()[i]
    return e


def replace_at(e: Expr, path, new: Expr) -> Expr:
    if not path:
        return new
    kids = list(e.children())
    kids[path[0]] = replace_at(kids[path[0]], path[1:], new)
    return e.with_children(tuple(kids))


def positions(e: Expr, path: tuple[int, ...] = ()):
    """Every node path in pre-order."""
    yield path
    for i, ch in enumerate(e.children()):
        yield from positions(ch, path + (i,))

