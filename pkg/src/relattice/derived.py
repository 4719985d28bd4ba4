"""Classic relational operators expressed through join and inner union.

Selection, projection plus renaming are computed by their lattice
reductions (join with a predicate relation, inner union with a header
relation). Set difference and division are not lattice terms; they are
implemented directly or through the finite supremum of sections.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

from .core import (
    Relation,
    SpecialCode,
    Universe,
    _raw,
    columns_of,
    compare_values,
    empty_relation,
    inner_union,
    natural_join,
    special_element,
)
from .errors import (
    ArityRestriction,
    AttributeNotInHeader,
    DomainMismatch,
    EmptyDivisorHeader,
    HeaderMismatch,
    HeaderNotProperSubset,
    LatticeError,
    OverlappingHeaders,
    TargetAttributeCollision,
)

COMPARATORS = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


def _compare(op: str, a: str, b: str) -> bool:
    return COMPARATORS[op](compare_values(a, b), 0)


def _check_op(op: str):
    if op not in COMPARATORS:
        raise LatticeError(f"unknown comparator {op!r}")


@dataclass(frozen=True)
class AttrConst:
    """``attr op constant``"""

    attr: str
    op: str
    value: str

    def __post_init__(self):
        _check_op(self.op)

    def attributes(self) -> frozenset[str]:
        return frozenset((self.attr,))

    def holds(self, t: Mapping[str, str]) -> bool:
        return _compare(self.op, t[self.attr], self.value)


@dataclass(frozen=True)
class AttrAttr:
    """``left op right`` between two attributes."""

    left: str
    op: str
    right: str

    def __post_init__(self):
        _check_op(self.op)

    def attributes(self) -> frozenset[str]:
        return frozenset((self.left, self.right))

    def holds(self, t: Mapping[str, str]) -> bool:
        return _compare(self.op, t[self.left], t[self.right])


@dataclass(frozen=True)
class Conjunction:
    parts: tuple

    def __post_init__(self):
        if len(self.parts) < 2:
            raise LatticeError("a conjunction needs at least two conjuncts")
        if any(isinstance(p, Conjunction) for p in self.parts):
            raise LatticeError("nested conjunction; use conjoin()")

    def attributes(self) -> frozenset[str]:
        return frozenset().union(*(p.attributes() for p in self.parts))

    def holds(self, t: Mapping[str, str]) -> bool:
        return all(p.holds(t) for p in self.parts)


Predicate = Union[AttrConst, AttrAttr, Conjunction]


def conjoin(*preds: Predicate) -> Predicate:
    """Flattened conjunction of the given predicates."""
    parts = []
    for p in preds:
        parts.extend(p.parts if isinstance(p, Conjunction) else (p,))
    return parts[0] if len(parts) == 1 else Conjunction(tuple(parts))


@dataclass(frozen=True)
class RenameSpec:
    source: str
    target: str

    def __post_init__(self):
        if self.source == self.target:
            raise LatticeError("rename source and target must differ")


def predicate_relation(u: Universe, over: Iterable[str], p: Predicate) -> Relation:
    """Materialize ``p`` as the finite relation of satisfying tuples over ``over``."""
    over = u.check_attributes(over)
    u.check_attributes(p.attributes())
    missing = p.attributes() - over
    if missing:
        raise AttributeNotInHeader(f"predicate mentions {sorted(missing)} outside {sorted(over)}")
    cols = columns_of(over)
    return _raw(u, cols, [t for t in u.product(cols) if p.holds(dict(zip(cols, t)))])


def _require_in_header(r: Relation, attrs: Iterable[str]):
    r.universe.check_attributes(attrs)
    missing = frozenset(attrs) - r.header
    if missing:
        raise AttributeNotInHeader(f"{sorted(missing)} not in header {list(r.columns)}")


def select(a: Relation, p: Predicate) -> Relation:
    _require_in_header(a, p.attributes())
    return natural_join(a, predicate_relation(a.universe, p.attributes(), p))


def project(a: Relation, attrs: Iterable[str]) -> Relation:
    attrs = frozenset(attrs)
    _require_in_header(a, attrs)
    return inner_union(a, empty_relation(a.universe, attrs))


def rename(a: Relation, spec: RenameSpec) -> Relation:
    u = a.universe
    if spec.source not in a.header:
        raise AttributeNotInHeader(f"{spec.source!r} not in header {list(a.columns)}")
    if spec.target in a.header:
        raise TargetAttributeCollision(f"{spec.target!r} already in header {list(a.columns)}")
    target_domain = set(u.domain_of(spec.target))
    if not set(u.domain_of(spec.source)) <= target_domain:
        raise DomainMismatch(f"domain of {spec.target} does not cover domain of {spec.source}")
    eq = predicate_relation(u, (spec.source, spec.target), AttrAttr(spec.source, "=", spec.target))
    new_header = (a.header - {spec.source}) | {spec.target}
    return inner_union(empty_relation(u, new_header), natural_join(a, eq))


def _same_header(a: Relation, b: Relation):
    if a.header != b.header:
        raise HeaderMismatch(f"headers differ: {list(a.columns)} vs {list(b.columns)}")


def difference(a: Relation, b: Relation) -> Relation:
    _same_header(a, b)
    return _raw(a.universe, a.columns, a.body - b.body)


class NoSolution:
    """The equation system characterizing ``A \\ B`` has no solution."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NO_SOLUTION"

    def __bool__(self):
        return False


NO_SOLUTION = NoSolution()


def solves_difference(x: Relation, a: Relation, b: Relation) -> bool:
    """``x * b == [H(a)]`` and ``x + b == a``."""
    return (
        natural_join(x, b) == empty_relation(a.universe, a.header)
        and inner_union(x, b) == a
    )


def difference_by_equations(a: Relation, b: Relation) -> Relation | NoSolution:
    """The relation X with ``X * B = [H(A)]`` and ``X + B = A``, if it exists.

    The second equation forces H(X) = H(A) and B <= A as bodies; the first
    makes X and B disjoint, so X is the complement of B within A.
    """
    _same_header(a, b)
    if not b.body <= a.body:
        return NO_SOLUTION
    x = _raw(a.universe, a.columns, a.body - b.body)
    if not solves_difference(x, a, b):
        return NO_SOLUTION
    return x


def divide(a: Relation, b: Relation) -> Relation:
    """Relational division as the finite supremum of the sections of ``a``.

    For each tuple ``t`` of ``b``, the section ``[rest] + (a * {t})`` keeps the
    rest-columns of the ``a``-tuples that agree with ``t``; the sections are
    joined together. An empty divisor leaves the join unit over ``rest``,
    i.e. the full domain product (vacuous universal quantification).
    """
    _check_divisor(a, b)
    u = a.universe
    rest = a.header - b.header
    rest_header = empty_relation(u, rest)
    acc = inner_union(rest_header, special_element(u, SpecialCode.UNIVERSAL_11))
    for t in b.rows():
        point = _raw(u, b.columns, [t])
        acc = natural_join(acc, inner_union(rest_header, natural_join(a, point)))
    return acc


def finite_infimum(a: Relation, b: Relation) -> Relation:
    """``[H(a) - H(b)] + (a * b)``: subquery unnesting as join then projection."""
    _check_divisor(a, b)
    return project(natural_join(a, b), a.header - b.header)


def _check_divisor(a: Relation, b: Relation):
    if not b.header:
        raise EmptyDivisorHeader("divisor must have at least one attribute")
    if not b.header < a.header:
        raise HeaderNotProperSubset(
            f"divisor header {list(b.columns)} is not a proper subset of {list(a.columns)}"
        )


def difference_by_division(a: Relation, b: Relation, shadow: str) -> Relation:
    """``A \\ B`` for unary relations through division.

    With ``C`` the divisor renamed onto ``shadow``, the result is
    ``select(A * C, z != shadow) / C``. An empty ``B`` divides by an empty
    relation and so yields the whole domain of ``z`` rather than ``A``.
    """
    _same_header(a, b)
    if len(a.columns) != 1:
        raise ArityRestriction("division-based difference is defined for unary relations only")
    (z,) = a.columns
    if shadow in a.header:
        raise TargetAttributeCollision(f"shadow attribute {shadow!r} is the relation's attribute")
    c = rename(b, RenameSpec(z, shadow))
    return divide(select(natural_join(a, c), AttrAttr(z, "!=", shadow)), c)


def cross(a: Relation, b: Relation) -> Relation:
    shared = a.header & b.header
    if shared:
        raise OverlappingHeaders(f"cross product operands share {sorted(shared)}")
    return natural_join(a, b)

