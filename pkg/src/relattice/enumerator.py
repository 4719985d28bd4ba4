"""Every relation over a tiny universe, its Hasse diagram and Boolean sublattices."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .core import (
    Relation,
    SpecialCode,
    Universe,
    all_headers,
    all_relations,
    full_relation,
    inner_union,
    natural_join,
    relation_count,
    special_element,
)
from .errors import UniverseTooLarge

DEFAULT_CAP = 10**6


@dataclass(frozen=True)
class LatticeGraph:
    elements: tuple[Relation, ...]
    covers: frozenset[tuple[int, int]]
    labels: dict[int, str] = field(compare=False)
    order: np.ndarray = field(compare=False, repr=False)  # order[i, j] iff elements[i] <= elements[j]

    def index(self, r: Relation) -> int:
        return self._index[r]

    @cached_property
    def _index(self) -> dict[Relation, int]:
        return {r: i for i, r in enumerate(self.elements)}

    def __len__(self) -> int:
        return len(self.elements)

    def leq(self, i: int, j: int) -> bool:
        return bool(self.order[i, j])


def label(r: Relation) -> str:
    u = r.universe
    for code in (SpecialCode.BOTTOM_01, SpecialCode.EMPTY_00, SpecialCode.TOP_10, SpecialCode.UNIVERSAL_11):
        if r == special_element(u, code):
            return code.value
    head = "[" + " ".join(r.columns) + "]"
    if r.is_empty():
        return head
    return "{" + ",".join("(" + ",".join(t) + ")" for t in r.rows()) + "}" + head


def _order_matrix(elements: list[Relation]) -> np.ndarray:
    """``a <= b`` iff H(a) is within H(b) and b projected onto H(a) lies in a.

    Same relation as ``b == a * b``; this form avoids materializing joins.
    """
    n = len(elements)
    order = np.zeros((n, n), dtype=bool)
    by_header: dict[frozenset, list[int]] = {}
    for i, r in enumerate(elements):
        by_header.setdefault(r.header, []).append(i)
    for ha, group_a in by_header.items():
        for hb, group_b in by_header.items():
            if not ha <= hb:
                continue
            for j in group_b:
                b = elements[j]
                idx = [b.columns.index(c) for c in elements[group_a[0]].columns]
                shadow = {tuple(t[k] for k in idx) for t in b.body}
                for i in group_a:
                    order[i, j] = shadow <= elements[i].body
    return order


def _covers_from_order(order: np.ndarray) -> frozenset[tuple[int, int]]:
    lt = order.copy()
    np.fill_diagonal(lt, False)
    lt_i = lt.astype(np.int32)
    between = (lt_i @ lt_i) > 0
    ii, jj = np.nonzero(lt & ~between)
    return frozenset(zip(ii.tolist(), jj.tolist()))


def enumerate_lattice(u: Universe, cap: int = DEFAULT_CAP) -> LatticeGraph:
    count = relation_count(u)
    if count > cap:
        raise UniverseTooLarge(f"{count} relations exceed the enumeration cap {cap}")
    elements = list(all_relations(u))
    order = _order_matrix(elements)
    order.flags.writeable = False
    return LatticeGraph(
        tuple(elements),
        _covers_from_order(order),
        {i: label(r) for i, r in enumerate(elements)},
        order,
    )


def hasse_edges(g: LatticeGraph) -> frozenset[tuple[int, int]]:
    """Cover pairs recomputed from the order by definition."""
    n = len(g)
    lt = [[g.leq(i, j) and i != j for j in range(n)] for i in range(n)]
    return frozenset(
        (a, b)
        for a in range(n)
        for b in range(n)
        if lt[a][b] and not any(lt[a][c] and lt[c][b] for c in range(n))
    )


def heights(g: LatticeGraph) -> list[int]:
    """Length of the longest cover chain from each element down to a minimal one."""
    below: dict[int, list[int]] = {i: [] for i in range(len(g))}
    for a, b in g.covers:
        below[b].append(a)
    memo: dict[int, int] = {}

    def h(i: int) -> int:
        if i not in memo:
            memo[i] = 1 + max((h(j) for j in below[i]), default=-1)
        return memo[i]

    return [h(i) for i in range(len(g))]


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(g: LatticeGraph) -> str:
    """Graphviz source: bottom-to-top ranks, nodes in element order."""
    lines = ["digraph lattice {", "  rankdir=BT;", '  node [shape=box, fontname="monospace"];']
    for i in range(len(g)):
        lines.append(f"  n{i} [label={_dot_quote(g.labels[i])}];")
    levels: dict[int, list[int]] = {}
    for i, h in enumerate(heights(g)):
        levels.setdefault(h, []).append(i)
    for h in sorted(levels):
        lines.append("  { rank=same; " + " ".join(f"n{i};" for i in levels[h]) + " }")
    for a, b in sorted(g.covers):
        lines.append(f"  n{a} -> n{b};")
    lines.append("}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SublatticeReport:
    members: tuple[int, ...]
    closed_under_join: bool
    closed_under_union: bool
    distributive: bool
    complemented: bool
    bottom: int | None
    top: int | None

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def boolean(self) -> bool:
        return self.closed_under_join and self.closed_under_union and self.distributive and self.complemented

    def to_json(self) -> dict:
        return {
            "size": self.size,
            "members": list(self.members),
            "closed_under_join": self.closed_under_join,
            "closed_under_union": self.closed_under_union,
            "distributive": self.distributive,
            "complemented": self.complemented,
            "bottom": self.bottom,
            "top": self.top,
            "boolean": self.boolean,
        }


def _distributive(rels) -> bool:
    for a, b, c in itertools.product(rels, repeat=3):
        if natural_join(a, inner_union(b, c)) != inner_union(natural_join(a, b), natural_join(a, c)):
            return False
        if inner_union(a, natural_join(b, c)) != natural_join(inner_union(a, b), inner_union(a, c)):
            return False
    return True


def verify_boolean_sublattice(g: LatticeGraph, members) -> SublatticeReport:
    idx = tuple(sorted(set(members)))
    rels = [g.elements[i] for i in idx]
    member_set = set(rels)
    pairs = list(itertools.product(rels, repeat=2))
    closed_join = all(natural_join(a, b) in member_set for a, b in pairs)
    closed_union = all(inner_union(a, b) in member_set for a, b in pairs)
    bottom = next((i for i in idx if all(g.leq(i, j) for j in idx)), None)
    top = next((i for i in idx if all(g.leq(j, i) for j in idx)), None)
    distributive = _distributive(rels)
    complemented = False
    if bottom is not None and top is not None:
        lo, hi = g.elements[bottom], g.elements[top]
        complemented = all(
            any(natural_join(a, b) == hi and inner_union(a, b) == lo for b in rels) for a in rels
        )
    return SublatticeReport(idx, closed_join, closed_union, distributive, complemented, bottom, top)


def find_nondistributive_triple(g: LatticeGraph, members=None) -> tuple[Relation, Relation, Relation] | None:
    """First triple, in element order, where join fails to distribute over inner union."""
    idx = sorted(members) if members is not None else range(len(g))
    rels = [g.elements[i] for i in idx]
    for a, b, c in itertools.product(rels, repeat=3):
        if natural_join(a, inner_union(b, c)) != inner_union(natural_join(a, b), natural_join(a, c)):
            return a, b, c
    return None


def standard_sublattices(g: LatticeGraph) -> dict[str, tuple[int, ...]]:
    """Candidate Boolean sublattices.

    One per non-empty header (all relations carrying it), the empty
    relations, the domain products ``[h] + 11`` for every header ``h``, and
    the four special elements.
    """
    u = g.elements[0].universe
    out: dict[str, tuple[int, ...]] = {}
    for h in all_headers(u):
        if h:
            out["header:" + ",".join(sorted(h))] = tuple(i for i, r in enumerate(g.elements) if r.header == h)
    out["empty-relations"] = tuple(i for i, r in enumerate(g.elements) if r.is_empty())
    out["domain-products"] = tuple(sorted(g.index(full_relation(u, h)) for h in all_headers(u)))
    out["special-elements"] = tuple(sorted({g.index(special_element(u, c)) for c in SpecialCode}))
    return out
