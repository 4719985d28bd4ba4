"""Finite relations over an explicit universe and the two lattice operations.

A :class:`Relation` is an immutable (header, body) pair. Natural join and
inner union are the only primitives; everything else in the package is built
from them.
"""

from __future__ import annotations

import enum
import itertools
import json
import random
import re
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .errors import (
    InvalidUniverse,
    TupleHeaderMismatch,
    UniverseMismatch,
    UnknownAttribute,
    ValueOutsideDomain,
)

_INT = re.compile(r"-?[0-9]+\Z")


def compare_values(a: str, b: str) -> int:
    """Three-way comparison used by ordering predicates.

    Two integer tokens compare numerically, ties broken by token text so that
    a zero result means token equality. Any other pair compares by UTF-8 bytes.
    """
    if _INT.match(a) and _INT.match(b):
        ka, kb = (int(a), a), (int(b), b)
    else:
        ka, kb = a.encode(), b.encode()
    return (ka > kb) - (ka < kb)


@dataclass(frozen=True)
class Universe:
    """Attribute names, each bound to a finite ordered domain of text tokens."""

    attributes: tuple[str, ...]
    domains: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if len(self.attributes) != len(self.domains):
            raise InvalidUniverse("one domain per attribute required")
        if len(set(self.attributes)) != len(self.attributes):
            raise InvalidUniverse(f"duplicate attribute names in {self.attributes}")
        for name, dom in zip(self.attributes, self.domains):
            if not isinstance(name, str) or not name:
                raise InvalidUniverse(f"bad attribute name {name!r}")
            if not dom:
                raise InvalidUniverse(f"empty domain for {name}")
            if len(set(dom)) != len(dom):
                raise InvalidUniverse(f"duplicate values in domain of {name}")
            if any(not isinstance(v, str) or not v for v in dom):
                raise InvalidUniverse(f"domain of {name} must hold non-empty text tokens")

    @classmethod
    def of(cls, spec: Mapping[str, Iterable] | None = None, **domains) -> Universe:
        """Build from an ordered mapping ``name -> values``; values are str()-ed."""
        items = list((spec or {}).items()) + list(domains.items())
        return cls(
            tuple(name for name, _ in items),
            tuple(tuple(str(v) for v in dom) for _, dom in items),
        )

    @cached_property
    def _domain_map(self) -> dict[str, tuple[str, ...]]:
        return dict(zip(self.attributes, self.domains))

    @cached_property
    def _rank(self) -> dict[str, dict[str, int]]:
        return {a: {v: i for i, v in enumerate(d)} for a, d in zip(self.attributes, self.domains)}

    @cached_property
    def all_attributes(self) -> frozenset[str]:
        return frozenset(self.attributes)

    def domain_of(self, attr: str) -> tuple[str, ...]:
        try:
            return self._domain_map[attr]
        except KeyError:
            raise UnknownAttribute(f"{attr!r} is not an attribute of the universe") from None

    def check_attributes(self, attrs: Iterable[str]) -> frozenset[str]:
        attrs = frozenset(attrs)
        unknown = attrs - self.all_attributes
        if unknown:
            raise UnknownAttribute(f"unknown attribute(s) {sorted(unknown)}")
        return attrs

    def tuple_key(self, columns: Sequence[str], row: Sequence[str]) -> tuple[int, ...]:
        return tuple(self._rank[c][v] for c, v in zip(columns, row))

    def product(self, columns: Sequence[str]) -> list[tuple[str, ...]]:
        """Every tuple over ``columns``, in canonical order."""
        return list(itertools.product(*(self.domain_of(c) for c in columns)))

    def to_json(self) -> dict:
        return {
            "attributes": [
                {"name": a, "domain": list(d)} for a, d in zip(self.attributes, self.domains)
            ]
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> Universe:
        try:
            entries = doc["attributes"]
            return cls(
                tuple(e["name"] for e in entries),
                tuple(tuple(e["domain"]) for e in entries),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidUniverse(f"malformed universe document: {exc}") from None


def columns_of(attrs: Iterable[str]) -> tuple[str, ...]:
    """Canonical column order: attribute names sorted lexicographically."""
    return tuple(sorted(attrs))


@dataclass(frozen=True)
class Relation:
    """An immutable relation: a header and a set of tuples over it.

    Tuples are stored as plain value tuples aligned with ``columns`` (the
    header sorted by name). Equality is structural.
    """

    universe: Universe = field(repr=False, hash=False)
    columns: tuple[str, ...]
    body: frozenset[tuple[str, ...]]

    @property
    def header(self) -> frozenset[str]:
        return frozenset(self.columns)

    def __len__(self) -> int:
        return len(self.body)

    def is_empty(self) -> bool:
        return not self.body

    def rows(self) -> list[tuple[str, ...]]:
        """Tuples in canonical order."""
        return sorted(self.body, key=lambda r: self.universe.tuple_key(self.columns, r))

    def tuples(self) -> list[dict[str, str]]:
        return [dict(zip(self.columns, r)) for r in self.rows()]

    def to_json(self) -> dict:
        return {"header": list(self.columns), "tuples": [list(r) for r in self.rows()]}

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    def __repr__(self) -> str:
        rows = ", ".join("(" + ",".join(r) + ")" for r in self.rows())
        return f"Relation[{','.join(self.columns)}]{{{rows}}}"

    def __str__(self) -> str:
        return self.table()

    def table(self) -> str:
        """Aligned plain-text table."""
        cols = list(self.columns)
        data = [list(r) for r in self.rows()]
        if not cols:
            return "(no attributes)\n" + ("()\n" if data else "")
        widths = [max([len(c)] + [len(r[i]) for r in data]) for i, c in enumerate(cols)]
        lines = [" | ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip()]
        lines.append("-+-".join("-" * w for w in widths))
        lines += [" | ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in data]
        return "\n".join(lines) + "\n"


def _raw(u: Universe, columns: tuple[str, ...], body: Iterable[tuple[str, ...]]) -> Relation:
    return Relation(u, columns, frozenset(body))


def make_relation(u: Universe, header: Iterable[str], tuples: Iterable) -> Relation:
    """Validated constructor.

    Each tuple is either a mapping ``attr -> value`` or a sequence of values
    positionally matched to ``header`` as given. Duplicates collapse.
    """
    header = list(header)
    if len(set(header)) != len(header):
        raise TupleHeaderMismatch(f"duplicate attribute in header {header}")
    attrs = u.check_attributes(header)
    cols = columns_of(attrs)
    body = set()
    for t in tuples:
        if isinstance(t, Mapping):
            if set(t) != attrs:
                raise TupleHeaderMismatch(f"tuple {dict(t)} is not over header {sorted(attrs)}")
            row = tuple(str(t[c]) for c in cols)
        else:
            t = [str(v) for v in t]
            if len(t) != len(header):
                raise TupleHeaderMismatch(f"tuple {t} has arity {len(t)}, header has {len(header)}")
            named = dict(zip(header, t))
            row = tuple(named[c] for c in cols)
        for c, v in zip(cols, row):
            if v not in u._rank[c]:
                raise ValueOutsideDomain(f"{v!r} is not in the domain of {c}")
        body.add(row)
    return _raw(u, cols, body)


def relation_from_json(u: Universe, doc: Mapping) -> Relation:
    try:
        return make_relation(u, doc["header"], doc["tuples"])
    except (KeyError, TypeError) as exc:
        raise TupleHeaderMismatch(f"malformed relation document: {exc}") from None


def empty_relation(u: Universe, header: Iterable[str]) -> Relation:
    """The header relation ``[h]``: no tuples."""
    return _raw(u, columns_of(u.check_attributes(header)), ())


def full_relation(u: Universe, header: Iterable[str]) -> Relation:
    """Cartesian product of the domains of ``header``."""
    cols = columns_of(u.check_attributes(header))
    return _raw(u, cols, u.product(cols))


def _universe(a: Relation, b: Relation) -> Universe:
    if a.universe is not b.universe and a.universe != b.universe:
        raise UniverseMismatch("relations belong to different universes")
    return a.universe


def natural_join(a: Relation, b: Relation) -> Relation:
    u = _universe(a, b)
    bset = b.header
    cols = columns_of(a.header | bset)
    common = [c for c in a.columns if c in bset]
    a_key = [a.columns.index(c) for c in common]
    b_key = [b.columns.index(c) for c in common]
    pick = [(0, a.columns.index(c)) if c in a.header else (1, b.columns.index(c)) for c in cols]

    index = defaultdict(list)
    for t in b.body:
        index[tuple(t[i] for i in b_key)].append(t)
    out = set()
    for s in a.body:
        for t in index.get(tuple(s[i] for i in a_key), ()):
            pair = (s, t)
            out.add(tuple(pair[side][i] for side, i in pick))
    return _raw(u, cols, out)


def _project_body(r: Relation, cols: tuple[str, ...]) -> set[tuple[str, ...]]:
    idx = [r.columns.index(c) for c in cols]
    return {tuple(t[i] for i in idx) for t in r.body}


def inner_union(a: Relation, b: Relation) -> Relation:
    """Project both operands onto the shared header, then take the set union.

    With no shared attributes the result is 01 if either body is non-empty
    and 00 otherwise; this falls out of projecting onto the empty header.
    """
    u = _universe(a, b)
    cols = columns_of(a.header & b.header)
    return _raw(u, cols, _project_body(a, cols) | _project_body(b, cols))


def leq(a: Relation, b: Relation) -> bool:
    """Lattice order: ``a <= b`` iff ``b == a * b``."""
    return natural_join(a, b) == b


class SpecialCode(enum.Enum):
    EMPTY_00 = "00"
    BOTTOM_01 = "01"
    TOP_10 = "10"
    UNIVERSAL_11 = "11"


def special_element(u: Universe, code: SpecialCode) -> Relation:
    if code is SpecialCode.EMPTY_00:
        return _raw(u, (), ())
    if code is SpecialCode.BOTTOM_01:
        return _raw(u, (), [()])
    if code is SpecialCode.TOP_10:
        return empty_relation(u, u.attributes)
    return full_relation(u, u.attributes)


def decompose(u: Universe, a: Relation) -> tuple[Relation, Relation]:
    """Split ``a`` into its header part ``a * 00`` and content part ``a * 11``.

    The inner union of the two parts gives back ``a``.
    """
    return (
        natural_join(a, special_element(u, SpecialCode.EMPTY_00)),
        natural_join(a, special_element(u, SpecialCode.UNIVERSAL_11)),
    )


def random_relation(
    u: Universe, header: Iterable[str], rng: random.Random, density: float = 0.5
) -> Relation:
    """Each tuple of the header's domain product is kept with probability ``density``."""
    cols = columns_of(u.check_attributes(header))
    return _raw(u, cols, [t for t in u.product(cols) if rng.random() < density])


def random_header(u: Universe, rng: random.Random) -> frozenset[str]:
    return frozenset(a for a in u.attributes if rng.random() < 0.5)


def all_headers(u: Universe) -> list[frozenset[str]]:
    """Every subset of the attributes: by size, then by sorted attribute names."""
    subsets = [
        frozenset(c) for n in range(len(u.attributes) + 1) for c in itertools.combinations(u.attributes, n)
    ]
    return sorted(subsets, key=lambda h: (len(h), columns_of(h)))


def relation_count(u: Universe) -> int:
    total = 0
    for h in all_headers(u):
        size = 1
        for a in h:
            size *= len(u.domain_of(a))
        total += 2**size
    return total


def all_relations(u: Universe) -> Iterable[Relation]:
    """Every relation over ``u`` in canonical order.

    Headers come in :func:`all_headers` order; within a header, bodies are
    ordered by their inclusion bit-vector over the canonical tuple order,
    first tuple most significant.
    """
    for h in all_headers(u):
        cols = columns_of(h)
        space = u.product(cols)
        n = len(space)
        for mask in range(2**n):
            yield _raw(u, cols, [t for i, t in enumerate(space) if mask >> (n - 1 - i) & 1])
