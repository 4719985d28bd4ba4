"""Guarded rewriting of lattice expressions.

Rules are equations between patterns. A pattern is an expression tree in
which :class:`Meta` placeholders stand for subexpressions, predicates or
attribute sets. Guards inspect only inferred headers, never relation bodies,
so an applicable rewrite is valid for every catalog with the same headers.
"""

from __future__ import annotations

import enum
import heapq
import json
import random
from dataclasses import dataclass, field, fields, replace
from typing import Callable

from .core import SpecialCode, columns_of, inner_union, natural_join, random_relation
from .derived import conjoin
from .errors import RuleNotApplicable, UnresolvedName
from .expr import (
    LITERALS,
    Catalog,
    EmptyLit,
    Expr,
    Join,
    PredLit,
    Project,
    Select,
    Special,
    Union,
    desugar_node,
    evaluate,
    format_expr,
    infer_header,
    literal_value,
    names_in,
    positions,
    replace_at,
    subexpr,
)
from .laws import join_over_union_applicable, union_over_join_applicable

Position = tuple  # child indices from the root


class Direction(enum.Enum):
    LTR = "LTR"
    RTL = "RTL"
    BOTH = "BOTH"


@dataclass(frozen=True)
class Meta(Expr):
    """Pattern placeholder; binds consistently on repeated occurrence."""

    name: str


@dataclass(frozen=True)
class Computed(Expr):
    """Replacement-only node whose value is computed from the bindings."""

    label: str
    uses: tuple[str, ...]
    fn: Callable = field(compare=False)


def _format_pattern(e) -> str:
    if isinstance(e, Meta):
        return e.name
    if isinstance(e, Computed):
        return e.label
    if isinstance(e, Select):
        return f"select({_format_pattern(e.expr)}, {_format_pattern(e.pred)})"
    if isinstance(e, Project):
        return f"project({_format_pattern(e.expr)}, {_format_pattern(e.attrs)})"
    if isinstance(e, (Join, Union)):
        op = " * " if isinstance(e, Join) else " + "
        sides = []
        for side in (e.left, e.right):
            text = _format_pattern(side)
            sides.append(f"({text})" if isinstance(side, (Join, Union)) else text)
        return op.join(sides)
    if isinstance(e, Expr):
        return format_expr(e)
    if isinstance(e, frozenset):
        return "{" + ", ".join(columns_of(e)) + "}"
    return str(e)


def metavars(p) -> frozenset[str]:
    if isinstance(p, Meta):
        return frozenset((p.name,))
    if isinstance(p, Computed):
        return frozenset(p.uses)
    if isinstance(p, Expr):
        return frozenset().union(*(metavars(getattr(p, f.name)) for f in fields(p)))
    return frozenset()


def match(pattern, target, bindings: dict) -> bool:
    """Structural match extending ``bindings`` in place."""
    if isinstance(pattern, Meta):
        if pattern.name in bindings:
            return bindings[pattern.name] == target
        bindings[pattern.name] = target
        return True
    if isinstance(pattern, Expr):
        if type(pattern) is not type(target):
            return False
        return all(match(getattr(pattern, f.name), getattr(target, f.name), bindings) for f in fields(pattern))
    return pattern == target


class Context:
    """What a guard or computed replacement may consult: headers and literals."""

    def __init__(self, catalog: Catalog):
        self.catalog = catalog
        self.universe = catalog.universe
        self._headers: dict[Expr, frozenset] = {}

    def header(self, e: Expr) -> frozenset:
        h = self._headers.get(e)
        if h is None:
            h = self._headers[e] = infer_header(e, self.catalog)
        return h

    def literal(self, e: Expr):
        return literal_value(e, self.universe)


def instantiate(template, bindings: dict, ctx: Context):
    if isinstance(template, Meta):
        return bindings[template.name]
    if isinstance(template, Computed):
        return template.fn(bindings, ctx)
    if isinstance(template, Expr):
        return type(template)(**{f.name: instantiate(getattr(template, f.name), bindings, ctx) for f in fields(template)})
    return template


Guard = Callable[[dict, Context], bool]


def _always(b, ctx) -> bool:
    return True


@dataclass(frozen=True)
class RewriteRule:
    """``pattern -> replacement`` under ``guard``.

    A BOTH rule also rewrites right to left; ``back`` overrides the swapped
    (pattern, replacement, guard) when the reverse needs different metadata,
    e.g. a computed attribute set. ``involutive`` marks rules that are their
    own inverse, such as commutativity.
    """

    id: str
    pattern: Expr
    replacement: Expr
    guard: Guard = _always
    direction: Direction = Direction.LTR
    back: tuple | None = None
    involutive: bool = False
    reversed: bool = False

    @property
    def name(self) -> str:
        return self.id + "~" if self.reversed else self.id

    def __str__(self):
        arrow = {Direction.LTR: "->", Direction.RTL: "<-", Direction.BOTH: "<->"}[self.direction]
        return f"{self.name}: {_format_pattern(self.pattern)} {arrow} {_format_pattern(self.replacement)}"

    def _reverse(self) -> RewriteRule:
        pattern, replacement, guard = self.back or (self.replacement, self.pattern, self.guard)
        return RewriteRule(self.id, pattern, replacement, guard, Direction.LTR, reversed=not self.reversed)

    def orientations(self) -> list[RewriteRule]:
        """Left-to-right views of this rule, one per direction it can fire in."""
        if self.direction is Direction.LTR:
            return [self]
        fwd = replace(self, direction=Direction.LTR, back=None)
        if self.direction is Direction.RTL:
            return [self._reverse()]
        return [fwd] if self.involutive else [fwd, self._reverse()]

    def enumerable(self) -> bool:
        """False for orientations whose pattern is a bare placeholder (they match every node)."""
        return not (self.reversed and isinstance(self.pattern, Meta))

    def rewrite(self, e: Expr, ctx: Context) -> Expr | None:
        rule = self if self.direction is Direction.LTR else self.orientations()[0]
        b = {}
        if not match(rule.pattern, e, b) or not rule.guard(b, ctx):
            return None
        out = instantiate(rule.replacement, b, ctx)
        if out is None or out == e:
            return None
        return out


# --------------------------------------------------------------- the rules

A, B, C = Meta("A"), Meta("B"), Meta("C")
P, H, K = Meta("p"), Meta("h"), Meta("k")


def _empty_or_00(attrs) -> Expr:
    return Special(SpecialCode.EMPTY_00) if not attrs else EmptyLit(frozenset(attrs))


def _known_empty(e: Expr) -> bool:
    return isinstance(e, EmptyLit) or (
        isinstance(e, Special) and e.code in (SpecialCode.EMPTY_00, SpecialCode.TOP_10)
    )


def _fold(b, ctx: Context) -> Expr | None:
    """Literal result of joining or unioning two literal operands, if one exists."""
    e = b["E"]
    left, right = e.left, e.right
    lv, rv = ctx.literal(left), ctx.literal(right)
    value = natural_join(lv, rv) if isinstance(e, Join) else inner_union(lv, rv)
    if value.is_empty():
        return _empty_or_00(value.header)
    for code in SpecialCode:
        if ctx.literal(Special(code)) == value:
            return Special(code)
    for side, v in ((left, lv), (right, rv)):
        if v == value:
            return side
    if isinstance(e, Join) and isinstance(left, PredLit) and isinstance(right, PredLit):
        return PredLit(conjoin(left.pred, right.pred))
    return None


def _fold_guard(b, ctx) -> bool:
    e = b["E"]
    return isinstance(e, (Join, Union)) and isinstance(e.left, LITERALS) and isinstance(e.right, LITERALS)


def _annihilate_guard(b, ctx) -> bool:
    return _known_empty(b["A"]) or _known_empty(b["B"])


def _annihilate(b, ctx: Context) -> Expr:
    return _empty_or_00(ctx.header(b["A"]) | ctx.header(b["B"]))


def _distrib_join_guard(b, ctx) -> bool:
    return join_over_union_applicable(ctx.header(b["A"]), ctx.header(b["B"]), ctx.header(b["C"]))


def _distrib_union_guard(b, ctx) -> bool:
    return union_over_join_applicable(ctx.header(b["A"]), ctx.header(b["B"]), ctx.header(b["C"]))


def _pred_in_left(b, ctx) -> bool:
    return b["p"].attributes() <= ctx.header(b["A"])


def _pred_in_projection(b, ctx) -> bool:
    return b["p"].attributes() <= b["h"]


def _shared_in_projection(b, ctx) -> bool:
    return ctx.header(b["A"]) & ctx.header(b["B"]) <= b["h"]


def _cross_with_covered(b, ctx) -> bool:
    ha, hb = ctx.header(b["A"]), ctx.header(b["B"])
    return not (ha & hb) and hb <= b["k"]


_H_PLUS_B = Computed("h | H(B)", ("h", "B"), lambda b, ctx: frozenset(b["h"] | ctx.header(b["B"])))
_K_MINUS_B = Computed("k - H(B)", ("k", "B"), lambda b, ctx: frozenset(b["k"] - ctx.header(b["B"])))


def builtin_rules() -> list[RewriteRule]:
    E = Meta("E")
    BOTH, LTR = Direction.BOTH, Direction.LTR
    return [
        RewriteRule("JOIN_IDEMPOTENT", Join(A, A), A, direction=BOTH),
        RewriteRule("UNION_IDEMPOTENT", Union(A, A), A, direction=BOTH),
        RewriteRule("JOIN_COMMUTATIVE", Join(A, B), Join(B, A), direction=BOTH, involutive=True),
        RewriteRule("UNION_COMMUTATIVE", Union(A, B), Union(B, A), direction=BOTH, involutive=True),
        RewriteRule("JOIN_ASSOCIATIVE", Join(A, Join(B, C)), Join(Join(A, B), C), direction=BOTH),
        RewriteRule("UNION_ASSOCIATIVE", Union(A, Union(B, C)), Union(Union(A, B), C), direction=BOTH),
        RewriteRule("ABSORB_JOIN_OVER_UNION", Join(A, Union(A, B)), A, direction=LTR),
        RewriteRule("ABSORB_UNION_OVER_JOIN", Union(A, Join(A, B)), A, direction=LTR),
        RewriteRule(
            "DISTRIB_JOIN_OVER_UNION",
            Join(A, Union(B, C)),
            Union(Join(A, B), Join(A, C)),
            _distrib_join_guard,
            BOTH,
        ),
        RewriteRule(
            "DISTRIB_UNION_OVER_JOIN",
            Union(A, Join(B, C)),
            Join(Union(A, B), Union(A, C)),
            _distrib_union_guard,
            BOTH,
        ),
        RewriteRule("CONSTANT_FOLD", E, Computed("fold(E)", ("E",), _fold), _fold_guard, LTR),
        RewriteRule(
            "EMPTY_ANNIHILATE",
            Join(A, B),
            Computed("[H(A) | H(B)]", ("A", "B"), _annihilate),
            _annihilate_guard,
            LTR,
        ),
        RewriteRule(
            "PUSH_CROSS_THROUGH_SELECT",
            Join(Select(A, P), B),
            Select(Join(A, B), P),
            direction=BOTH,
            back=(Select(Join(A, B), P), Join(Select(A, P), B), _pred_in_left),
        ),
        RewriteRule(
            "PUSH_SELECT_THROUGH_PROJECT",
            Select(Project(A, H), P),
            Project(Select(A, P), H),
            _pred_in_projection,
            BOTH,
        ),
        RewriteRule(
            "PUSH_CROSS_THROUGH_PROJECT",
            Join(Project(A, H), B),
            Project(Join(A, B), _H_PLUS_B),
            _shared_in_projection,
            BOTH,
            back=(Project(Join(A, B), K), Join(Project(A, _K_MINUS_B), B), _cross_with_covered),
        ),
    ]


MACRO_RULES = ("PUSH_CROSS_THROUGH_SELECT", "PUSH_SELECT_THROUGH_PROJECT", "PUSH_CROSS_THROUGH_PROJECT")


def rule_table() -> dict[str, RewriteRule]:
    """Every orientation of every builtin rule, keyed by ``RewriteRule.name``."""
    return {o.name: o for r in builtin_rules() for o in r.orientations()}


# --------------------------------------------------------------- applying


def applicable_rules(e: Expr, c: Catalog, rules: list[RewriteRule] | None = None):
    """All (oriented rule, position) pairs that fire on ``e``.

    Positions are visited in pre-order and rules in registry order.
    """
    ctx = Context(c)
    oriented = [o for r in (rules or builtin_rules()) for o in r.orientations() if o.enumerable()]
    out = []
    for pos in positions(e):
        node = subexpr(e, pos)
        for rule in oriented:
            if rule.rewrite(node, ctx) is not None:
                out.append((rule, pos))
    return out


def apply_rule(e: Expr, r: RewriteRule, p: Position, c: Catalog, _ctx: Context | None = None) -> Expr:
    try:
        node = subexpr(e, p)
    except IndexError:
        raise RuleNotApplicable(f"no node at position {list(p)}") from None
    new = r.rewrite(node, _ctx or Context(c))
    if new is None:
        raise RuleNotApplicable(f"{r.name} does not apply at {list(p)} ({format_expr(node)})")
    return replace_at(e, tuple(p), new)


@dataclass(frozen=True)
class Step:
    rule: str
    position: tuple
    before: Expr
    after: Expr

    def to_json(self) -> dict:
        return {
            "rule": self.rule,
            "position": list(self.position),
            "before": format_expr(self.before),
            "after": format_expr(self.after),
        }


@dataclass
class RewriteTrace:
    steps: list[Step] = field(default_factory=list)
    exhausted: bool = False  # the budget ran out; the result is the best found so far

    def to_jsonl(self) -> str:
        return "".join(json.dumps(s.to_json()) + "\n" for s in self.steps)

    def __len__(self):
        return len(self.steps)


DESUGAR, RESUGAR = "DESUGAR", "RESUGAR"


def _desugar_redex(e: Expr, c: Catalog) -> Expr:
    """Desugar the sugar nodes of a macro redex, down to its placeholders."""
    if isinstance(e, Select) and isinstance(e.expr, Project):
        return Join(PredLit(e.pred), Union(EmptyLit(e.expr.attrs), e.expr.expr))
    if isinstance(e, Join):
        return Join(desugar_node(e.left, c), e.right)
    return desugar_node(e, c)


def expand_macro(e: Expr, rule: RewriteRule, p: Position, c: Catalog) -> RewriteTrace:
    """Primitive-step derivation of one macro-rule application.

    The steps translate the redex into lattice terms, rewrite it with the
    primitive rules, then translate back. A reversed
    macro orientation is expanded as the forward derivation read backwards,
    each step named with a trailing ``~``.
    """
    if rule.id not in MACRO_RULES:
        raise RuleNotApplicable(f"{rule.id} is not a macro rule")
    if rule.direction is Direction.BOTH:
        rule = rule.orientations()[0]
    target = apply_rule(e, rule, p, c)
    if rule.reversed:
        forward = rule_table()[rule.id]
        fwd = expand_macro(target, forward, p, c)
        steps = [
            Step(_invert(s.rule), s.position, s.after, s.before) for s in reversed(fwd.steps)
        ]
        return RewriteTrace(steps)

    table = rule_table()
    steps: list[Step] = []
    p = tuple(p)
    cur = e

    def step(name: str, rel: tuple, new_sub: Expr | None = None):
        nonlocal cur
        pos = p + rel
        if new_sub is None:
            after = apply_rule(cur, table[name], pos, c)
        else:
            after = replace_at(cur, pos, new_sub)
        steps.append(Step(name, pos, cur, after))
        cur = after

    redex = subexpr(e, p)
    step(DESUGAR, (), _desugar_redex(redex, c))
    if rule.id == "PUSH_CROSS_THROUGH_SELECT":
        # ([p] * A) * B = [p] * (A * B)
        step("JOIN_ASSOCIATIVE~", ())
    elif rule.id == "PUSH_SELECT_THROUGH_PROJECT":
        # [p] * ([h] + A) = ([p] * [h]) + ([p] * A) = [h] + ([p] * A)
        step("DISTRIB_JOIN_OVER_UNION", ())
        step("CONSTANT_FOLD", (0,))
    else:
        # ([h] + A) * B = B * ([h] + A) = (B * [h]) + (B * A) = ([h] * B) + (A * B) = [h|H(B)] + (A * B)
        step("JOIN_COMMUTATIVE", ())
        step("DISTRIB_JOIN_OVER_UNION", ())
        step("JOIN_COMMUTATIVE", (0,))
        step("JOIN_COMMUTATIVE", (1,))
        step("EMPTY_ANNIHILATE", (0,))
    lattice_form = subexpr(cur, p)
    if evaluate(lattice_form, c) != evaluate(subexpr(target, p), c):
        raise AssertionError(f"macro expansion ended at {format_expr(lattice_form)}")
    step(RESUGAR, (), subexpr(target, p))
    return RewriteTrace(steps)


def expand_trace(trace: RewriteTrace, c: Catalog) -> RewriteTrace:
    """Replace every macro step of ``trace`` by its primitive derivation."""
    table = rule_table()
    steps: list[Step] = []
    for s in trace.steps:
        rule = table.get(s.rule)
        if rule is not None and rule.id in MACRO_RULES:
            steps.extend(expand_macro(s.before, rule, s.position, c).steps)
        else:
            steps.append(s)
    return RewriteTrace(steps, trace.exhausted)


def _invert(name: str) -> str:
    if name == DESUGAR:
        return RESUGAR
    if name == RESUGAR:
        return DESUGAR
    if name in ("JOIN_COMMUTATIVE", "UNION_COMMUTATIVE"):
        return name
    return name[:-1] if name.endswith("~") else name + "~"


def replay(e: Expr, trace: RewriteTrace, c: Catalog) -> Expr:
    """Re-apply every step of ``trace`` to ``e``; raises if any step disagrees.

    Steps named after registered rule orientations are re-applied by rule.
    DESUGAR/RESUGAR steps and inverted steps of expanded macros are checked
    for agreement with the recorded trees and for semantic equality.
    """
    table = rule_table()
    cur = e
    for s in trace.steps:
        if s.before != cur:
            raise RuleNotApplicable(f"trace step {s.rule} does not start from the current expression")
        if s.rule in table:
            after = apply_rule(cur, table[s.rule], s.position, c)
        else:
            after = s.after
            if evaluate(after, c) != evaluate(cur, c):
                raise RuleNotApplicable(f"trace step {s.rule} changes the value")
        if after != s.after:
            raise RuleNotApplicable(f"trace step {s.rule} does not reproduce its result")
        cur = after
    return cur


# --------------------------------------------------------------- strategies


class Strategy(enum.Enum):
    PUSHDOWN = "pushdown"
    EXHAUSTIVE = "exhaustive"


PUSHDOWN_RULES = (
    "CONSTANT_FOLD",
    "EMPTY_ANNIHILATE",
    "PUSH_CROSS_THROUGH_SELECT~",
    "PUSH_SELECT_THROUGH_PROJECT",
    "PUSH_CROSS_THROUGH_PROJECT",
)


def _cost(e: Expr) -> tuple[int, str]:
    return (e.size(), format_expr(e))


def normalize(
    e: Expr, c: Catalog, strategy: Strategy | str = Strategy.PUSHDOWN, budget: int = 1000
) -> tuple[Expr, RewriteTrace]:
    """Rewrite ``e`` under ``strategy`` within ``budget`` rule applications.

    PUSHDOWN fires the first applicable pushdown rule (pre-order position,
    then rule order) until none applies: selections move toward the leaves,
    projections toward the root, constant subterms fold. EXHAUSTIVE explores
    the closure under every rule orientation breadth-first and returns the
    visited expression with the least (node count, canonical text). If the
    budget runs out the trace is marked ``exhausted``.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    strategy = Strategy(strategy)
    if strategy is Strategy.PUSHDOWN:
        return _pushdown(e, c, budget)
    return _exhaustive(e, c, budget)


def _pushdown(e: Expr, c: Catalog, budget: int):
    table = rule_table()
    rules = [table[n] for n in PUSHDOWN_RULES]
    ctx = Context(c)
    trace = RewriteTrace()
    cur = e
    while True:
        fired = False
        for pos in positions(cur):
            node = subexpr(cur, pos)
            for rule in rules:
                new = rule.rewrite(node, ctx)
                if new is not None:
                    if len(trace.steps) >= budget:
                        trace.exhausted = True
                        return cur, trace
                    after = replace_at(cur, pos, new)
                    trace.steps.append(Step(rule.name, pos, cur, after))
                    cur = after
                    fired = True
                    break
            if fired:
                break
        if not fired:
            return cur, trace


def _exhaustive(e: Expr, c: Catalog, budget: int):
    oriented = [o for r in builtin_rules() for o in r.orientations() if o.enumerable()]
    ctx = Context(c)
    parent: dict[Expr, Step | None] = {e: None}
    frontier = [e]
    applications = 0
    exhausted = False
    while frontier and not exhausted:
        nxt = []
        for cur in frontier:
            for pos in positions(cur):
                node = subexpr(cur, pos)
                for rule in oriented:
                    new = rule.rewrite(node, ctx)
                    if new is None:
                        continue
                    if applications >= budget:
                        exhausted = True
                        break
                    applications += 1
                    after = replace_at(cur, pos, new)
                    if after not in parent:
                        parent[after] = Step(rule.name, pos, cur, after)
                        nxt.append(after)
                if exhausted:
                    break
            if exhausted:
                break
        frontier = nxt
    best = heapq.nsmallest(1, parent, key=_cost)[0]
    steps = []
    node = best
    while parent[node] is not None:
        steps.append(parent[node])
        node = parent[node].before
    return best, RewriteTrace(list(reversed(steps)), exhausted)


# ------------------------------------------------------------- equivalence


@dataclass(frozen=True)
class Equivalent:
    trials: int

    def __bool__(self):
        return True


@dataclass(frozen=True)
class Counterexample:
    catalog: Catalog
    trial: int

    def __bool__(self):
        return False


def random_catalog(c0: Catalog, names, rng: random.Random) -> Catalog:
    """A catalog with ``c0``'s universe and headers and freshly drawn bodies."""
    u = c0.universe
    return Catalog(u, {n: random_relation(u, c0[n].header, rng, density=rng.random()) for n in sorted(names)})


def equivalent(e1: Expr, e2: Expr, c0: Catalog, trials: int = 100, seed: int = 0):
    """Compare ``e1`` and ``e2`` on ``c0`` itself and on ``trials`` random catalogs.

    Returns :class:`Equivalent` (truthy) or the first falsifying
    :class:`Counterexample` (falsy). Deterministic for a given seed.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    names = names_in(e1) | names_in(e2)
    missing = sorted(names - set(c0.relations))
    if missing:
        raise UnresolvedName(f"no relation named {missing[0]!r}")
    base = Catalog(c0.universe, {n: c0[n] for n in names})
    rng = random.Random(seed)
    for i in range(trials + 1):
        cat = base if i == 0 else random_catalog(base, names, rng)
        if evaluate(e1, cat) != evaluate(e2, cat):
            return Counterexample(cat, i)
    return Equivalent(trials)

