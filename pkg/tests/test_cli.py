from __future__ import annotations

import io
import json
import subprocess
import sys

import pytest

from relattice.cli import main

U2_DOC = {"attributes": [{"name": "x", "domain": ["1", "2"]}, {"name": "y", "domain": ["a", "b"]}]}
U3_DOC = {
    "attributes": [
        {"name": "x", "domain": ["1", "2", "3"]},
        {"name": "y", "domain": ["a", "b", "c"]},
        {"name": "z", "domain": ["p", "q"]},
    ]
}
CATALOG = {
    "A": {"header": ["x", "y"], "tuples": [["1", "a"], ["2", "b"]]},
    "B": {"header": ["z"], "tuples": [["p"]]},
}


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, doc in [("u2", U2_DOC), ("u3", U3_DOC), ("cat", CATALOG)]:
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(doc))
        paths[name] = str(p)
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    paths["bad"] = str(bad)
    paths["dir"] = str(tmp_path)
    return paths


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


class TestEval:
    def test_json(self, files):
        code, out = run("eval", "-u", files["u3"], "-c", files["cat"], "-e", "select(A * B, x = 1)")
        assert code == 0
        assert json.loads(out) == {"header": ["x", "y", "z"], "tuples": [["1", "a", "p"]]}

    def test_header_and_content_parts_rebuild_a(self, files):
        a = run("eval", "-u", files["u3"], "-c", files["cat"], "-e", "(A*00)+(A*11)")
        b = run("eval", "-u", files["u3"], "-c", files["cat"], "-e", "A")
        assert a == b and a[0] == 0

    def test_table(self, files):
        code, out = run("eval", "-u", files["u3"], "-c", files["cat"], "-e", "A", "--table")
        assert code == 0 and out == "x | y\n--+--\n1 | a\n2 | b\n"

    def test_evaluation_error_carries_position(self, files, capsys):
        code, _ = run("eval", "-u", files["u3"], "-c", files["cat"], "-e", "A *\n  rename(A, x -> y)")
        err = capsys.readouterr().err
        assert code == 4
        assert err.startswith("relattice: error: 2:3: TargetAttributeCollision") and err.count("\n") == 1

    def test_unresolved_name(self, files, capsys):
        code, _ = run("eval", "-u", files["u3"], "-c", files["cat"], "-e", "A * Q")
        assert code == 4 and "1:5: UnresolvedName" in capsys.readouterr().err

    def test_syntax_error(self, files, capsys):
        code, _ = run("eval", "-u", files["u3"], "-c", files["cat"], "-e", "A * (B")
        assert code == 2 and "1:7: expected one of" in capsys.readouterr().err

    @pytest.mark.parametrize("which", ["missing", "bad"])
    def test_file_errors(self, files, which, capsys):
        path = files["dir"] + "/nope.json" if which == "missing" else files["bad"]
        code, _ = run("eval", "-u", path, "-c", files["cat"], "-e", "A")
        assert code == 2
        assert capsys.readouterr().err.count("\n") == 1

    def test_catalog_outside_universe(self, files, capsys):
        code, _ = run("eval", "-u", files["u2"], "-c", files["cat"], "-e", "A")
        assert code == 2 and "unknown attribute" in capsys.readouterr().err


class TestUsage:
    @pytest.mark.parametrize(
        "argv",
        [
            [],
            ["frobnicate"],
            ["eval", "-u", "u.json", "-e", "A"],
            ["rewrite", "-u", "u", "-c", "c", "-e", "A", "--strategy", "greedy"],
            ["rewrite", "-u", "u", "-c", "c", "-e", "A", "--budget", "0"],
            ["laws", "-u", "u", "--law", "NOPE"],
        ],
    )
    def test_exit_1_before_reading_files(self, argv, capsys):
        # none of the referenced files exist; flag validation comes first
        code, out = run(*argv)
        err = capsys.readouterr().err
        assert code == 1 and out == ""
        assert err.startswith("relattice: error: usage:") and err.count("\n") == 1


class TestRewrite:
    def test_pushdown(self, files):
        code, out = run("rewrite", "-u", files["u3"], "-c", files["cat"], "-e", "select(A * B, x = 1)")
        assert code == 0 and out == "select(A, x=1) * B\n"

    def test_trace(self, files):
        code, out = run(
            "rewrite", "-u", files["u3"], "-c", files["cat"], "-e", "select(A * B, x = 1)", "--trace"
        )
        lines = out.splitlines()
        assert code == 0 and lines[0] == "select(A, x=1) * B"
        step = json.loads(lines[1])
        assert step == {
            "rule": "PUSH_CROSS_THROUGH_SELECT~",
            "position": [],
            "before": "select(A * B, x=1)",
            "after": "select(A, x=1) * B",
        }

    def test_expanded_trace(self, files):
        code, out = run(
            "rewrite", "-u", files["u3"], "-c", files["cat"], "-e", "select(A * B, x = 1)", "--trace", "--expand"
        )
        rules = [json.loads(line)["rule"] for line in out.splitlines()[1:]]
        assert code == 0 and rules == ["DESUGAR", "JOIN_ASSOCIATIVE", "RESUGAR"]

    def test_exhaustive(self, files, capsys):
        code, out = run(
            "rewrite", "-u", files["u3"], "-c", files["cat"], "-e", "A * (A + B)", "--strategy", "exhaustive", "--budget", "3"
        )
        assert code == 0 and out.endswith("\n")
        assert "budget of 3 steps exhausted" in capsys.readouterr().err


class TestLaws:
    def test_u2_all_hold(self, files):
        code, out = run("laws", "-u", files["u2"])
        reports = [json.loads(line) for line in out.splitlines()]
        assert code == 0 and len(reports) == 11
        assert all(r["verdict"] == "HOLDS" for r in reports)
        assert all(r["mode"] == "exhaustive" for r in reports)

    def test_single_law_sampled(self, files):
        code, out = run("laws", "-u", files["u3"], "--law", "UNION_ASSOCIATIVE", "--samples", "50", "--seed", "4")
        (report,) = [json.loads(line) for line in out.splitlines()]
        assert code == 0 and report["checked"] == 50 and report["mode"] == "sampled"

    def test_unguarded_distributivity_counterexample_is_not_an_axiom_failure(self, files):
        code, out = run("laws", "-u", files["u2"], "--law", "DISTRIB_JOIN_OVER_UNION", "--unguarded")
        assert code == 0 and json.loads(out)["verdict"] == "COUNTEREXAMPLE"


class TestEnum:
    def test_summary(self, files, tmp_path):
        dot = tmp_path / "g.dot"
        code, out = run("enum", "-u", files["u2"], "--dot", str(dot), "--check-sublattices")
        summary = json.loads(out)
        assert code == 0 and summary["elements"] == 26 and summary["covers"] == 53
        assert set(summary["axioms"].values()) == {"HOLDS"}
        assert summary["nondistributive_witness"] is not None
        assert sorted(r["size"] for r in summary["sublattices"].values()) == [4, 4, 4, 4, 4, 16]
        assert dot.read_text().startswith("digraph lattice {")

    def test_too_large(self, files, capsys):
        code, _ = run("enum", "-u", files["u3"], "--cap", "100")
        assert code == 2 and "exceed" in capsys.readouterr().err


def test_module_entry_point(files):
    proc = subprocess.run(
        [sys.executable, "-m", "relattice", "eval", "-u", files["u2"], "-c", files["dir"] + "/nope.json", "-e", "A"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2 and proc.stdout == "" and proc.stderr.count("\n") == 1
