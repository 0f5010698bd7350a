import io
import json
import pathlib

import pytest

from icrs import alpha_eq, parse_term
from icrs.cli import main

CORPUS = pathlib.Path(__file__).parent.parent / "src" / "icrs" / "corpus"


def run(*argv):
    import contextlib

    out = io.StringIO()
    with contextlib.redirect_stdout(out):
        code = main(list(argv))
    return code, out.getvalue()


def corpus(name):
    return str(CORPUS / name)


class TestCheck:
    def test_map_system_passes(self):
        code, out = run("check", corpus("map_streams.crs"))
        assert code == 0
        assert "orthogonal: pass" in out

    def test_left_linearity_failure(self, tmp_path):
        f = tmp_path / "bad.crs"
        f.write_text("rule eq: eq(Z, Z) -> k ;")
        code, out = run("check", str(f))
        assert code == 1
        assert "left-linear: FAIL" in out

    def test_beta_passes(self):
        code, _ = run("check", corpus("lambda_beta.crs"))
        assert code == 0

    def test_parse_error_exit(self, tmp_path):
        f = tmp_path / "broken.crs"
        f.write_text("rule r f(Z) -> k")
        code, _ = run("check", str(f))
        assert code == 2

    def test_json_reparses(self):
        code, out = run("check", corpus("spine_growth.crs"), "--json")
        assert code == 0
        payload = json.loads(out)
        assert payload["ok"] is True
        assert {c["check"] for c in payload["checks"]} == {
            "rule", "left-linear", "fully-extended", "orthogonal"}


class TestDevelop:
    def test_duplicating_example(self):
        code, out = run("develop", corpus("nested_duplication.crs"),
                        "--term", "f([x] g(x), a)", "--redexes", "@")
        assert code == 0
        assert "target: g(g(g(a)))" in out

    def test_empty_redex_list(self):
        code, out = run("develop", corpus("nested_duplication.crs"),
                        "--term", "f([x] g(x), a)")
        assert code == 0
        assert "target: f([x] g(x), a)" in out

    def test_collapse_tower_fails(self):
        code, out = run("develop", corpus("collapse_loop.crs"),
                        "--term", "rec F. f(F)", "--all-redexes")
        assert code == 1
        assert "no complete development" in out
        assert "cycle witness" in out


class TestPaths:
    def test_duplicating_example(self):
        code, out = run("paths", corpus("nested_duplication.crs"),
                        "--term", "f([x] g(x), a)", "--redexes", "@")
        assert code == 0
        assert "maximal paths: 1" in out
        assert "(s,@) -e-> (r,@,@) -e-> (s,1.0)" in out
        assert ". -e-> . -e-> g -1-> ." in out

    def test_budget_exit(self):
        code, out = run("paths", corpus("collapse_loop.crs"),
                        "--term", "rec F. f(F)", "--budget", "20")
        assert code == 4
        assert "cut by budget" in out


class TestNormalize:
    def test_spine_rational(self):
        code, out = run("normalize", corpus("spine_growth.crs"),
                        "--term", "f(a, c)", "--strategy", "fair",
                        "--depth", "4", "--emit", "rational")
        assert code == 0
        assert "rational normal form: rec" in out

    def test_growing_argument_truncation(self):
        code, out = run("normalize", corpus("outermost_pair.crs"),
                        "--term", "f(a)", "--depth", "3")
        assert code == 0
        assert "approximant: g(g(g(_|_)))" in out

    def test_already_normal(self):
        code, out = run("normalize", corpus("spine_growth.crs"),
                        "--term", "g(b, b)", "--depth", "3")
        assert code == 0
        assert "status: normal-form" in out

    def test_divergence_exit(self):
        code, out = run("normalize", corpus("spine_growth.crs"),
                        "--term", "c", "--depth", "3", "--fuel", "30")
        assert code == 3

    def test_json_roundtrip(self):
        code, out = run("normalize", corpus("spine_growth.crs"),
                        "--term", "f(a, c)", "--depth", "4", "--json")
        assert code == 0
        payload = json.loads(out)
        assert payload["status"] == "approximant"
        assert alpha_eq(parse_term(payload["rational_normal_form"]),
                        parse_term("rec S. g(b, S)"))
        assert all("rule" in s and "position" in s for s in payload["steps"])


class TestEssential:
    def test_scripted_narrative(self):
        code, out = run("essential", corpus("collapse_growth.crs"),
                        "--script", corpus("collapse_growth.script"))
        assert code == 0
        assert "final term: g(h(h(h(h(a)))))" in out
        assert "essential positions of stage term 0: {@, 1, 1.1, 1.1.0}" in out
        assert "measure: (4, 5, 4)" in out
        assert "redex dup@1: essential" in out
        assert "redex ren@1.1.0.1: inessential" in out

    def test_prefix_override_empty_means_all_inessential(self, tmp_path):
        script = tmp_path / "s.script"
        script.write_text("term g(f([x] g(g(x)))) ;\nprefix @ ;\n"
                          "stage { redexes 1 }\n")
        code, out = run("essential", corpus("collapse_growth.crs"),
                        "--script", str(script))
        assert code == 0
        assert "redex dup@1: inessential" in out
        assert "redex ren@@: essential" in out

    def test_json(self):
        code, out = run("essential", corpus("collapse_growth.crs"),
                        "--script", corpus("collapse_growth.script"), "--json")
        assert code == 0
        payload = json.loads(out)
        assert payload["measure"] == [4, 5, 4]
        assert payload["final"] == "g(h(h(h(h(a)))))"


class TestSuite:
    def test_seeded_run_is_reproducible(self):
        code1, out1 = run("suite", "--seed", "11", "--instances", "5")
        code2, out2 = run("suite", "--seed", "11", "--instances", "5")
        assert code1 == code2 == 0
        assert out1 == out2
        payload = json.loads(out1)
        assert payload["development_order_agreement"] == 5
        assert payload["finite_jumps_agreement"] == 5
        assert payload["phi_injectivity"] == 5
