import itertools
import random

import pytest

from icrs import (
    RewriteSystem, alpha_eq, check_fully_extended, check_left_linear,
    check_orthogonal, check_pattern, check_rule, check_system, match,
    parse_system, parse_term,
)
from icrs.errors import PreconditionViolated
from icrs.syntax import parse_metaterm
from icrs.systems import Rule, rule_meta

import genrand


class TestPattern:
    def test_fully_extended_pattern_passes(self):
        assert check_pattern(parse_metaterm("f(g([x] Z(x)))")).ok

    def test_non_variable_argument(self):
        v = check_pattern(parse_metaterm("f(Z(a))"))
        assert not v.ok and "non-variable" in v.detail

    def test_non_distinct_arguments(self):
        assert not check_pattern(parse_metaterm("f([x] [y] Z(x, x))")).ok


class TestRule:
    def test_valid_rule(self):
        r = Rule("r", parse_metaterm("f([x] Z(x), Z')"), parse_metaterm("Z(Z')"))
        assert check_rule(r).ok

    def test_metavariable_cycle_rejected(self):
        r = Rule("w", parse_metaterm("f(Z)"), parse_metaterm("rec W. Z(W)"))
        v = check_rule(r)
        assert not v.ok and "chain" in v.detail

    def test_cycle_through_abstraction_ok(self):
        r = Rule("w", parse_metaterm("f([x] [y] Z(x, y))"),
                 parse_metaterm("rec W. [x] Z(x, W)"))
        assert check_rule(r).ok

    def test_cycle_through_symbol_ok(self):
        r = Rule("w", parse_metaterm("f([x] Z(x))"), parse_metaterm("rec W. c(Z(W))"))
        assert check_rule(r).ok

    def test_rhs_metavars_must_occur_left(self):
        r = Rule("w", parse_metaterm("f(Z)"), parse_metaterm("g(W)"))
        assert not check_rule(r).ok

    def test_open_sides_rejected(self):
        r = Rule("w", parse_metaterm("f([x] Z(x))"), parse_metaterm("[y] Z(y)"))
        assert check_rule(r).ok
        # a genuinely free variable must be caught at rule level
        from icrs.terms import Sym, Var

        r2 = Rule("w2", Sym("f", (Var("x"),)), Sym("k", ()))
        assert not check_rule(r2).ok

    def test_lhs_must_be_finite(self):
        r = Rule("w", parse_metaterm("rec R. f(Z, R)"), parse_metaterm("Z"))
        assert not check_rule(r).ok


class TestLeftLinear:
    def test_map_system(self, map_system):
        assert check_left_linear(map_system).ok

    def test_duplicate_metavariable(self):
        system = parse_system("rule eq: eq(Z, Z) -> true ;")
        v = check_left_linear(system)
        assert not v.ok and "eq" in v.detail

    def test_empty_system(self):
        assert check_left_linear(RewriteSystem((), ())).ok


class TestFullyExtended:
    def test_passing_rule(self):
        system = parse_system("rule r: f(g([x] Z(x))) -> h([x] Z(x)) ;")
        assert check_fully_extended(system).ok

    def test_missing_scope_variable(self):
        system = parse_system("rule r: g([x] f(Z(x), Z')) -> Z' ;")
        v = check_fully_extended(system)
        assert not v.ok and "Z'" in v.detail

    def test_first_order_vacuous(self, spine_system):
        assert check_fully_extended(spine_system).ok


class TestOrthogonal:
    def test_map_system(self, map_system):
        assert check_orthogonal(map_system).ok

    def test_nested_overlap_found(self):
        system = parse_system("rule r1: f(g(Z)) -> a ; rule r2: g(b) -> c ;")
        v = check_orthogonal(system)
        assert not v.ok
        assert v.witness.position == (1,)

    def test_single_rule_constant(self):
        system = parse_system("rule r: a -> b ;")
        assert check_orthogonal(system).ok

    def test_self_overlap_below_root(self):
        system = parse_system("rule r: f(f(Z)) -> Z ;")
        assert not check_orthogonal(system).ok

    def test_root_overlap_of_distinct_rules(self):
        system = parse_system("rule r1: f(a) -> a ; rule r2: f(Z) -> b ;")
        assert not check_orthogonal(system).ok

    def test_requires_left_linear(self):
        system = parse_system("rule eq: eq(Z, Z) -> true ;")
        with pytest.raises(PreconditionViolated):
            check_orthogonal(system)

    def test_higher_order_projection_overlap(self):
        # the bound variable can be projected away, exposing the inner redex
        system = parse_system(
            "rule r1: f([x] Z(x)) -> Z(k) ; rule r2: f([x] g(Z(x))) -> k ;")
        assert not check_orthogonal(system).ok

    def test_verdict_invariant_under_rule_permutation(self):
        texts = [
            "rule r1: f(g(Z)) -> a ; rule r2: g(b) -> c ; rule r3: h(Z) -> Z ;",
            "rule r1: f(Z) -> a ; rule r2: g(b) -> c ; rule r3: h(Z) -> Z ;",
        ]
        for text in texts:
            base = parse_system(text)
            verdict = check_orthogonal(base).ok
            for perm in itertools.permutations(base.rules):
                system = RewriteSystem(tuple(perm), base.signature)
                assert check_orthogonal(system).ok == verdict

    def test_witness_is_replayable(self):
        system = parse_system("rule r1: f(g(Z)) -> a ; rule r2: g(b) -> c ;")
        v = check_orthogonal(system)
        w = v.witness
        assert w.instance is not None
        outer = system.rule(w.rule_outer)
        inner_name = w.rule_inner.removesuffix("#2") if w.rule_inner.endswith("#2") else w.rule_inner
        inner = system.rule(inner_name)
        assert match(outer, w.instance, ()) is not None
        assert match(inner, w.instance, w.position) is not None


class TestCheckSystem:
    def test_beta_system_all_pass(self, beta_system):
        assert check_system(beta_system).ok

    def test_spine_system_all_pass(self, spine_system):
        assert check_system(spine_system).ok

    def test_left_linearity_failure_reported(self):
        report = check_system(parse_system("rule eq: eq(Z, Z) -> true ;"))
        assert not report.ok
        assert any(v.check == "left-linear" and not v.ok for v in report.verdicts)

    def test_random_template_systems_pass(self):
        rng = random.Random(7)
        for _ in range(15):
            assert check_system(genrand.random_system(rng)).ok


def test_rule_meta_pattern_positions(dup_system):
    meta = rule_meta(dup_system.rule("r"))
    # f([x]Z(x),Z'): metavariable subtrees are not in the pattern
    assert set(meta.pattern_positions) == {(), (1,)}
    assert meta.metavar_position("Z") == (1, 0)
    assert meta.metavar_position("Z'") == (2,)
    assert meta.metavar_args("Z") == ("x",)
    assert meta.abs_map == {(1,): "x"}


def test_hole_symbol_reserved_in_rules():
    with pytest.raises(Exception):
        parse_system("rule bad: f(Z) -> _|_ ;")
