"""Registry of lattice identities and the header criteria for distributivity."""

from __future__ import annotations

import enum
import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .core import (
    Relation,
    SpecialCode,
    Universe,
    all_relations,
    inner_union as U,
    natural_join as J,
    random_header,
    random_relation,
    special_element,
)
from .errors import ArityMismatch

ARG_NAMES = ("A", "B", "C")


def join_over_union_applicable(ha, hb, hc) -> bool:
    """Sufficient header condition for ``A * (B + C) == (A * B) + (A * C)``.

    No attribute may be shared by A and exactly one of B, C.
    """
    ha, hb, hc = frozenset(ha), frozenset(hb), frozenset(hc)
    return (ha & hb) <= hc and (ha & hc) <= hb


def union_over_join_applicable(ha, hb, hc) -> bool:
    """Sufficient header condition for ``A + (B * C) == (A + B) * (A + C)``.

    On top of the join-over-union condition, nothing may be unique to A and
    nothing shared by B and C may be missing from A; together this says
    ``H(A) == H(B) & H(C)``.
    """
    ha, hb, hc = frozenset(ha), frozenset(hb), frozenset(hc)
    return (
        join_over_union_applicable(ha, hb, hc)
        and (hb & hc) <= ha
        and ha <= (hb | hc)
    )


def _prop1(a: Relation) -> Relation:
    u = a.universe
    return U(J(a, special_element(u, SpecialCode.EMPTY_00)), J(a, special_element(u, SpecialCode.UNIVERSAL_11)))


class LawId(enum.Enum):
    JOIN_IDEMPOTENT = (1, lambda a: J(a, a), lambda a: a)
    UNION_IDEMPOTENT = (1, lambda a: U(a, a), lambda a: a)
    JOIN_COMMUTATIVE = (2, lambda a, b: J(a, b), lambda a, b: J(b, a))
    UNION_COMMUTATIVE = (2, lambda a, b: U(a, b), lambda a, b: U(b, a))
    JOIN_ASSOCIATIVE = (3, lambda a, b, c: J(a, J(b, c)), lambda a, b, c: J(J(a, b), c))
    UNION_ASSOCIATIVE = (3, lambda a, b, c: U(a, U(b, c)), lambda a, b, c: U(U(a, b), c))
    ABSORB_JOIN_OVER_UNION = (2, lambda a, b: J(a, U(a, b)), lambda a, b: a)
    ABSORB_UNION_OVER_JOIN = (2, lambda a, b: U(a, J(a, b)), lambda a, b: a)
    PROPOSITION_1 = (1, _prop1, lambda a: a)
    DISTRIB_JOIN_OVER_UNION = (
        3,
        lambda a, b, c: J(a, U(b, c)),
        lambda a, b, c: U(J(a, b), J(a, c)),
        join_over_union_applicable,
    )
    DISTRIB_UNION_OVER_JOIN = (
        3,
        lambda a, b, c: U(a, J(b, c)),
        lambda a, b, c: J(U(a, b), U(a, c)),
        union_over_join_applicable,
    )

    def __init__(self, arity: int, lhs: Callable, rhs: Callable, guard: Callable | None = None):
        self.arity = arity
        self.lhs = lhs
        self.rhs = rhs
        self.guard = guard

    @property
    def guarded(self) -> bool:
        return self.guard is not None


LATTICE_AXIOMS = (
    LawId.JOIN_IDEMPOTENT,
    LawId.UNION_IDEMPOTENT,
    LawId.JOIN_COMMUTATIVE,
    LawId.UNION_COMMUTATIVE,
    LawId.JOIN_ASSOCIATIVE,
    LawId.UNION_ASSOCIATIVE,
    LawId.ABSORB_JOIN_OVER_UNION,
    LawId.ABSORB_UNION_OVER_JOIN,
)


class Verdict(enum.Enum):
    HOLDS = "HOLDS"
    GUARD_FAILED = "GUARD_FAILED"
    COUNTEREXAMPLE = "COUNTEREXAMPLE"


@dataclass(frozen=True)
class LawReport:
    law: LawId
    verdict: Verdict
    witness: dict[str, Relation] | None = None
    lhs: Relation | None = None
    rhs: Relation | None = None
    checked: int = 0
    guard_failed: int = 0
    mode: str = field(default="single")

    def to_json(self) -> dict:
        doc = {
            "law": self.law.name,
            "verdict": self.verdict.value,
            "mode": self.mode,
            "checked": self.checked,
            "guard_failed": self.guard_failed,
        }
        if self.witness is not None:
            doc["witness"] = {k: r.to_json() for k, r in self.witness.items()}
        if self.lhs is not None:
            doc["lhs"] = self.lhs.to_json()
            doc["rhs"] = self.rhs.to_json()
        return doc


def check_law(law: LawId, args: Sequence[Relation], guarded: bool = True) -> LawReport:
    """Evaluate both sides of ``law`` on ``args``.

    For a guarded law whose header criterion fails the verdict is
    GUARD_FAILED and no equality claim is made; pass ``guarded=False`` to
    evaluate anyway.
    """
    if len(args) != law.arity:
        raise ArityMismatch(f"{law.name} takes {law.arity} relations, got {len(args)}")
    if guarded and law.guarded and not law.guard(*(a.header for a in args)):
        return LawReport(law, Verdict.GUARD_FAILED, dict(zip(ARG_NAMES, args)), guard_failed=1)
    lhs, rhs = law.lhs(*args), law.rhs(*args)
    if lhs == rhs:
        return LawReport(law, Verdict.HOLDS, lhs=lhs, rhs=rhs, checked=1)
    return LawReport(law, Verdict.COUNTEREXAMPLE, dict(zip(ARG_NAMES, args)), lhs, rhs, checked=1)


def is_exhaustive_universe(u: Universe) -> bool:
    return len(u.attributes) <= 2 and all(len(d) <= 2 for d in u.domains)


def _sample_args(law: LawId, u: Universe, rng: random.Random, guarded: bool) -> list[Relation]:
    headers = [random_header(u, rng) for _ in range(law.arity)]
    if guarded and law.guarded:
        # the all-equal header assignment always passes, so this terminates quickly
        while not law.guard(*headers):
            headers = [random_header(u, rng) for _ in range(law.arity)]
    return [random_relation(u, h, rng, density=rng.random()) for h in headers]


def quantified_check(
    law: LawId, u: Universe, budget: int = 1000, seed: int = 0, guarded: bool = True
) -> LawReport:
    """Check ``law`` universally over ``u``.

    Small universes (at most 2 attributes with at most 2 values each) are
    swept exhaustively over every relation; otherwise ``budget`` argument
    tuples are drawn from ``random.Random(seed)``. For guarded laws the
    sampler draws only guard-passing headers, so ``checked == budget``.
    Stops at the first counterexample.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    if is_exhaustive_universe(u):
        mode = "exhaustive"
        elements = list(all_relations(u))
        candidates = itertools.product(elements, repeat=law.arity)
    else:
        mode = "sampled"
        rng = random.Random(seed)
        candidates = (_sample_args(law, u, rng, guarded) for _ in range(budget))

    checked = skipped = 0
    for args in candidates:
        report = check_law(law, args, guarded)
        if report.verdict is Verdict.GUARD_FAILED:
            skipped += 1
            continue
        checked += 1
        if report.verdict is Verdict.COUNTEREXAMPLE:
            return LawReport(
                law, Verdict.COUNTEREXAMPLE, report.witness, report.lhs, report.rhs, checked, skipped, mode
            )
    verdict = Verdict.HOLDS if checked else Verdict.GUARD_FAILED
    return LawReport(law, verdict, checked=checked, guard_failed=skipped, mode=mode)
