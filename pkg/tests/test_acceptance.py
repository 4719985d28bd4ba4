"""Acceptance criteria, one ``criterion`` marker per check.

The terminal summary prints one PASS/FAIL line per criterion number.
Reference values come from ``tests/oracle.py``, an independent set-theoretic
implementation, unless the value is a literal fact about the lattice.
"""

from __future__ import annotations

import itertools
import json
import random
import subprocess
import sys
from collections import defaultdict

import pytest

from relattice.core import (
    SpecialCode,
    Universe,
    all_relations,
    columns_of,
    empty_relation,
    full_relation,
    inner_union,
    make_relation,
    natural_join,
    random_header,
    random_relation,
    special_element,
)
from relattice.derived import (
    AttrAttr,
    AttrConst,
    RenameSpec,
    conjoin,
    difference,
    difference_by_division,
    difference_by_equations,
    divide,
    finite_infimum,
    project,
    rename,
    select,
    solves_difference,
)
from relattice.enumerator import (
    enumerate_lattice,
    find_nondistributive_triple,
    standard_sublattices,
    verify_boolean_sublattice,
)
from relattice.expr import Catalog, evaluate, format_expr, parse
from relattice.laws import (
    LATTICE_AXIOMS,
    LawId,
    Verdict,
    check_law,
    join_over_union_applicable,
    quantified_check,
    union_over_join_applicable,
)
from relattice.rewriter import (
    Equivalent,
    apply_rule,
    expand_macro,
    normalize,
    replay,
    rule_table,
)

from . import gen, oracle
from .conftest import U2

# three attributes, at most three values each
U3 = Universe.of(x=["1", "2", "3"], y=["a", "b", "c"], z=["p", "q"])
SEED = 20240501
SAMPLES = 1000


@pytest.fixture(scope="module")
def lattice():
    return enumerate_lattice(U2)


@pytest.fixture(scope="module")
def elements():
    return list(all_relations(U2))


# ----------------------------------------------------------------- 1


@pytest.mark.criterion(1, "lattice axioms hold exhaustively over the 26-element U2 lattice")
def test_c1_lattice_size(elements):
    sizes = defaultdict(int)
    for r in elements:
        sizes[r.header] += 1
    assert len(elements) == len(set(elements)) == 26
    assert sorted(sizes.values()) == [2, 4, 4, 16]


@pytest.mark.criterion(1, "lattice axioms hold exhaustively over the 26-element U2 lattice")
def test_c1_primitives_agree_with_oracle(elements):
    for a, b in itertools.product(elements, repeat=2):
        oa, ob = oracle.of(a), oracle.of(b)
        assert oracle.of(natural_join(a, b)) == oracle.join(oa, ob)
        assert oracle.of(inner_union(a, b)) == oracle.inner_union(oa, ob)


@pytest.mark.criterion(1, "lattice axioms hold exhaustively over the 26-element U2 lattice")
@pytest.mark.parametrize("law", LATTICE_AXIOMS, ids=lambda law: law.name)
def test_c1_axioms(law):
    report = quantified_check(law, U2)
    assert report.mode == "exhaustive"
    assert report.checked == 26**law.arity
    assert report.verdict is Verdict.HOLDS


# ----------------------------------------------------------------- 2


@pytest.mark.criterion(2, "A = (A * 00) + (A * 11) for all 26 U2 elements")
def test_c2_header_content_decomposition(elements):
    s00 = special_element(U2, SpecialCode.EMPTY_00)
    s11 = special_element(U2, SpecialCode.UNIVERSAL_11)
    for a in elements:
        assert inner_union(natural_join(a, s00), natural_join(a, s11)) == a
        assert check_law(LawId.PROPOSITION_1, [a]).verdict is Verdict.HOLDS


# ----------------------------------------------------------------- 3


@pytest.mark.criterion(3, "join/union with 00 and 11 behave as stated for all 26 elements")
def test_c3_special_element_facts(elements):
    s00 = special_element(U2, SpecialCode.EMPTY_00)
    s01 = special_element(U2, SpecialCode.BOTTOM_01)
    s11 = special_element(U2, SpecialCode.UNIVERSAL_11)
    every = frozenset(U2.attributes)
    for a in elements:
        oa = oracle.of(a)
        # A * 00: the header of A with no tuples
        assert natural_join(a, s00) == empty_relation(U2, a.header)
        # A + 00: 00 for an empty A, 01 otherwise
        assert inner_union(a, s00) == (s00 if a.is_empty() else s01)
        # A + 11: the domain product over H(A)
        assert oracle.of(inner_union(a, s11)) == (a.header, oracle.domain_product(U2, a.header))
        # A * 11: the content of A spread over every attribute
        content = natural_join(a, s11)
        assert content.header == every
        assert oracle.project(oracle.of(content), a.header) == oa
    # joining by 00 maps onto headers: it preserves both operations
    for a, b in itertools.product(elements, repeat=2):
        assert natural_join(natural_join(a, b), s00) == natural_join(natural_join(a, s00), natural_join(b, s00))
        assert natural_join(inner_union(a, b), s00) == inner_union(natural_join(a, s00), natural_join(b, s00))


# ----------------------------------------------------------------- 4


@pytest.mark.criterion(4, "guarded distributivity is sound (U2 exhaustive, >=1000 samples over U3)")
@pytest.mark.parametrize(
    "law, guard",
    [
        (LawId.DISTRIB_JOIN_OVER_UNION, join_over_union_applicable),
        (LawId.DISTRIB_UNION_OVER_JOIN, union_over_join_applicable),
    ],
    ids=["join-over-union", "union-over-join"],
)
def test_c4_u2_exhaustive(law, guard, elements):
    passing = 0
    for a, b, c in itertools.product(elements, repeat=3):
        if not guard(a.header, b.header, c.header):
            continue
        passing += 1
        assert law.lhs(a, b, c) == law.rhs(a, b, c), (a, b, c)
    report = quantified_check(law, U2)
    assert report.verdict is Verdict.HOLDS and report.checked == passing > 0


@pytest.mark.criterion(4, "guarded distributivity is sound (U2 exhaustive, >=1000 samples over U3)")
@pytest.mark.parametrize(
    "law, guard, lhs, rhs",
    [
        (
            LawId.DISTRIB_JOIN_OVER_UNION,
            join_over_union_applicable,
            lambda a, b, c: oracle.join(a, oracle.inner_union(b, c)),
            lambda a, b, c: oracle.inner_union(oracle.join(a, b), oracle.join(a, c)),
        ),
        (
            LawId.DISTRIB_UNION_OVER_JOIN,
            union_over_join_applicable,
            lambda a, b, c: oracle.inner_union(a, oracle.join(b, c)),
            lambda a, b, c: oracle.join(oracle.inner_union(a, b), oracle.inner_union(a, c)),
        ),
    ],
    ids=["join-over-union", "union-over-join"],
)
def test_c4_sampled_u3(law, guard, lhs, rhs):
    rng = random.Random(SEED)
    passing = 0
    while passing < SAMPLES:
        hs = [random_header(U3, rng) for _ in range(3)]
        if not guard(*hs):
            continue
        rels = [random_relation(U3, h, rng, rng.random()) for h in hs]
        passing += 1
        assert law.lhs(*rels) == law.rhs(*rels)
        # reference semantics agree too
        os_ = [oracle.of(r) for r in rels]
        assert lhs(*os_) == rhs(*os_) == oracle.of(law.lhs(*rels))
    report = quantified_check(law, U3, budget=SAMPLES, seed=SEED)
    assert report.verdict is Verdict.HOLDS and report.checked == SAMPLES


# ----------------------------------------------------------------- 5


@pytest.mark.criterion(5, "non-distributivity witness found; stored triple gives {(1,a)} vs empty [x y]")
def test_c5_nondistributive(lattice):
    found = find_nondistributive_triple(lattice)
    assert found is not None
    a, b, c = found
    oa, ob, oc = (oracle.of(r) for r in found)
    assert oracle.join(oa, oracle.inner_union(ob, oc)) != oracle.inner_union(oracle.join(oa, ob), oracle.join(oa, oc))

    a = make_relation(U2, ["x", "y"], [["1", "a"]])
    b = make_relation(U2, ["y"], [["b"]])
    c = make_relation(U2, ["x"], [["2"]])
    oa, ob, oc = oracle.of(a), oracle.of(b), oracle.of(c)
    want_lhs = oracle.join(oa, oracle.inner_union(ob, oc))
    want_rhs = oracle.inner_union(oracle.join(oa, ob), oracle.join(oa, oc))
    assert want_lhs == oracle.of(a) and want_rhs == (frozenset("xy"), frozenset())
    report = check_law(LawId.DISTRIB_JOIN_OVER_UNION, [a, b, c], guarded=False)
    assert report.verdict is Verdict.COUNTEREXAMPLE
    assert oracle.of(report.lhs) == want_lhs and oracle.of(report.rhs) == want_rhs
    assert check_law(LawId.DISTRIB_JOIN_OVER_UNION, [a, b, c]).verdict is Verdict.GUARD_FAILED


# ----------------------------------------------------------------- 6

CRIT6 = "select/project/rename match oracles; equation and division forms of difference"
UR = Universe.of(x=["1", "2", "3"], y=["a", "b", "c"], z=["p", "q"], w=["a", "b", "c", "d"])


def _random_pred(rng, header):
    attrs = sorted(header)
    parts = []
    for _ in range(rng.choice((1, 2))):
        left = rng.choice(attrs)
        op = rng.choice(list(oracle.CMP))
        if rng.random() < 0.3 and len(attrs) > 1:
            right = rng.choice([a for a in attrs if a != left])
            parts.append((AttrAttr(left, op, right), lambda t, l=left, o=op, r=right: oracle.holds(o, t[l], t[r])))
        else:
            v = rng.choice(UR.domain_of(left))
            parts.append((AttrConst(left, op, v), lambda t, l=left, o=op, v=v: oracle.holds(o, t[l], v)))
    pred = conjoin(*(p for p, _ in parts))
    return pred, lambda t: all(test(t) for _, test in parts)


@pytest.mark.criterion(6, CRIT6)
def test_c6_select_project_rename():
    rng = random.Random(SEED)
    base = ("x", "y", "z")
    for _ in range(SAMPLES):
        h = frozenset(a for a in base if rng.random() < 0.5) or frozenset({rng.choice(base)})
        a = random_relation(UR, h, rng, rng.random())
        oa = oracle.of(a)

        pred, test = _random_pred(rng, h)
        assert oracle.of(select(a, pred)) == oracle.select(oa, test)

        keep = frozenset(x for x in h if rng.random() < 0.5)
        assert oracle.of(project(a, keep)) == oracle.project(oa, keep)

        if "y" in h:
            spec = RenameSpec("y", "w")
            assert oracle.of(rename(a, spec)) == oracle.rename(oa, "y", "w")


@pytest.mark.criterion(6, CRIT6)
@pytest.mark.parametrize(
    "u, header",
    [
        (U2, ("x",)),
        (U2, ("x", "y")),
        (Universe.of(x=["1", "2"], y=["a", "b"], z=["p", "q"]), ("x", "y", "z")),
    ],
    ids=["2-tuples", "4-tuples", "8-tuples"],
)
def test_c6_difference_by_equations_unique(u, header):
    space = u.product(columns_of(header))
    assert len(space) <= 8
    rels = [
        make_relation(u, columns_of(header), [t for i, t in enumerate(space) if mask >> i & 1])
        for mask in range(2 ** len(space))
    ]
    empty = empty_relation(u, header)
    for b in rels:
        # group every candidate X by the value of X + B, keeping those with X * B = [H]
        by_union = defaultdict(list)
        for x in rels:
            if natural_join(x, b) == empty:
                by_union[inner_union(x, b)].append(x)
        for a in rels:
            solutions = by_union.get(a, [])
            got = difference_by_equations(a, b)
            if b.body <= a.body:
                assert len(solutions) == 1 and got == solutions[0]
                assert oracle.of(got) == oracle.difference(oracle.of(a), oracle.of(b))
                assert solves_difference(got, a, b)
            else:
                assert solutions == [] and not got


@pytest.mark.criterion(6, CRIT6)
def test_c6_difference_by_division():
    u = Universe.of(z=["1", "2", "3", "4"], s=["1", "2", "3", "4"])
    rels = list(r for r in all_relations(u) if r.header == {"z"})
    assert len(rels) == 16
    pairs = 0
    for a in rels:
        for b in rels:
            if b.is_empty():
                continue
            pairs += 1
            assert oracle.of(difference_by_division(a, b, "s")) == oracle.difference(oracle.of(a), oracle.of(b))
            assert difference_by_division(a, b, "s") == difference(a, b)
    assert pairs == 16 * 15


# ----------------------------------------------------------------- 7


@pytest.mark.criterion(7, "finite_infimum = exists-oracle, divide = forall-oracle on >=1000 pairs")
def test_c7_quantifiers():
    rng = random.Random(SEED)
    attrs = U3.attributes
    for _ in range(SAMPLES):
        ha = frozenset(a for a in attrs if rng.random() < 0.7)
        if len(ha) < 2:
            ha = frozenset(rng.sample(attrs, 2))
        hb = frozenset(a for a in sorted(ha) if rng.random() < 0.5)
        if not hb or hb == ha:
            hb = frozenset({min(ha)})
        a = random_relation(U3, ha, rng, rng.random())
        b = random_relation(U3, hb, rng, rng.random())
        oa, ob = oracle.of(a), oracle.of(b)
        exists = oracle.exists(U3, oa, ob)
        assert oracle.of(finite_infimum(a, b)) == exists
        # unnesting identity, evaluated from the primitives
        assert oracle.of(inner_union(empty_relation(U3, ha - hb), natural_join(a, b))) == exists
        assert oracle.of(divide(a, b)) == oracle.forall(U3, oa, ob)


# ----------------------------------------------------------------- 8

CRIT8 = "macro rewrites give the expected shapes with sound, equivalence-checked traces"
UM = Universe.of(x=["1", "2", "3"], y=["1", "2", "3"], z=["1", "2", "3"])
MACROS = [
    ("PUSH_CROSS_THROUGH_SELECT", "select(A, x=1) * B", "select(A * B, x=1)", {"A": "xy", "B": "z"}),
    ("PUSH_SELECT_THROUGH_PROJECT", "select(project(A, {x, y}), x=1)", "project(select(A, x=1), {x, y})", {"A": "xyz"}),
    ("PUSH_CROSS_THROUGH_PROJECT", "project(A, {x}) * B", "project(A * B, {x, z})", {"A": "xy", "B": "z"}),
]


def _catalog(headers, seed):
    rng = random.Random(seed)
    return Catalog(UM, {n: random_relation(UM, h, rng, 0.5) for n, h in headers.items()})


def _catalogs(headers, n):
    return [_catalog(headers, SEED + i) for i in range(n)]


@pytest.mark.criterion(8, CRIT8)
@pytest.mark.parametrize("rule, before, after, headers", MACROS, ids=[m[0] for m in MACROS])
def test_c8_macro_rules(rule, before, after, headers):
    table = rule_table()
    c0 = _catalog(headers, SEED)
    e = parse(before)
    out = apply_rule(e, table[rule], (), c0)
    assert out == parse(after) and format_expr(out) == format_expr(parse(after))
    verdict = equivalent_over(e, out, c0)
    assert isinstance(verdict, Equivalent) and verdict.trials >= 100

    trace = expand_macro(e, table[rule], (), c0)
    assert replay(e, trace, c0) == out
    for c in _catalogs(headers, 20):
        want = evaluate(e, c)
        for step in trace.steps:
            assert evaluate(step.after, c) == want, step.rule

    back = expand_macro(out, table[rule + "~"], (), c0)
    assert replay(out, back, c0) == e


def equivalent_over(e1, e2, c0):
    from relattice.rewriter import equivalent

    return equivalent(e1, e2, c0, trials=100, seed=SEED)


@pytest.mark.criterion(8, CRIT8)
def test_c8_pushdown_traces_preserve_values():
    rng = random.Random(SEED)
    headers = {"A": "xy", "B": "yz", "C": "z"}
    cats = _catalogs(headers, 5)
    c0 = cats[0]
    for _ in range(100):
        e, _ = gen.typed(rng, c0.headers(), UM.attributes, lattice_only=True)
        out, trace = normalize(e, c0, budget=10 * e.size())
        assert not trace.exhausted
        assert replay(e, trace, c0) == out
        for c in cats:
            want = evaluate(e, c)
            for step in trace.steps:
                assert evaluate(step.after, c) == want


# ----------------------------------------------------------------- 9


@pytest.mark.criterion(9, "six Boolean sublattices of sizes 16,4,4,4,4,4; fixed-header one is distributive")
def test_c9_sublattices(lattice):
    candidates = standard_sublattices(lattice)
    assert len(candidates) == 6
    reports = {name: verify_boolean_sublattice(lattice, m) for name, m in candidates.items()}
    for name, r in reports.items():
        assert r.closed_under_join and r.closed_under_union, name
        assert r.distributive and r.complemented, name
    assert sorted((r.size for r in reports.values()), reverse=True) == [16, 4, 4, 4, 4, 4]
    # membership, recomputed from first principles
    assert {lattice.elements[i] for i in candidates["special-elements"]} == {
        special_element(U2, c) for c in SpecialCode
    }
    assert {lattice.elements[i] for i in candidates["empty-relations"]} == {
        empty_relation(U2, h) for h in ("", "x", "y", "xy")
    }
    assert {lattice.elements[i] for i in candidates["domain-products"]} == {
        full_relation(U2, h) for h in ("", "x", "y", "xy")
    }
    assert find_nondistributive_triple(lattice, candidates["header:x,y"]) is None


# ----------------------------------------------------------------- 10

CRIT10 = "CLI output is byte-identical across runs; parse/format round-trips 10,000 expressions"


@pytest.mark.criterion(10, CRIT10)
def test_c10_cli_determinism(tmp_path):
    u = tmp_path / "u.json"
    u.write_text(json.dumps(U2.to_json()))
    u3 = tmp_path / "u3.json"
    u3.write_text(json.dumps(UM.to_json()))
    cat = tmp_path / "c.json"
    cat.write_text(json.dumps(_catalog({"A": "xy", "B": "z"}, SEED).to_json()))
    commands = [
        ["eval", "-u", str(u3), "-c", str(cat), "-e", "select(A * B, x = 1) + project(A, {y})"],
        ["rewrite", "-u", str(u3), "-c", str(cat), "-e", "select(project(A, {x, y}) * B, x=1)", "--trace"],
        ["rewrite", "-u", str(u3), "-c", str(cat), "-e", "A * (A + B)", "--strategy", "exhaustive", "--trace"],
        ["laws", "-u", str(u)],
        ["laws", "-u", str(u3), "--samples", "200", "--seed", "5"],
        ["enum", "-u", str(u), "--dot", str(tmp_path / "g.dot"), "--check-sublattices"],
    ]
    for argv in commands:
        outputs = []
        for _ in range(2):
            proc = subprocess.run([sys.executable, "-m", "relattice", *argv], capture_output=True)
            assert proc.returncode == 0, proc.stderr
            dot = (tmp_path / "g.dot").read_bytes() if argv[0] == "enum" else b""
            outputs.append((proc.stdout, dot))
        assert outputs[0] == outputs[1], argv
        assert outputs[0][0]


@pytest.mark.criterion(10, CRIT10)
def test_c10_round_trip():
    rng = random.Random(SEED)
    for _ in range(10_000):
        e = gen.syntactic(rng)
        text = format_expr(e)
        back = parse(text)
        assert back == e, text
        assert format_expr(back) == text
