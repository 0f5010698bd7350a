"""Randomised instance generation for property suites and seeded CI runs:
orthogonal fully-extended systems built from non-overlapping rule templates,
terms biased towards containing redexes, redex sets, development sequences
and prefix sets."""

import random

from .developments import DevSequence, complete_development
from .rewriting import find_redexes
from .syntax import parse_system
from .terms import Abs, Rec, RecVar, Sym, Var, positions_to_depth, prefix_closure

RULE_TEMPLATES = [
    ("dup", "rule dup: dup(Z) -> c2(Z, Z) ;"),
    ("drop", "rule drop: drop(Z) -> k ;"),
    ("swap", "rule swap: swap(Z, W) -> c2(W, Z) ;"),
    ("col", "rule col: col(Z) -> Z ;"),
    ("uno", "rule uno: uno(Z) -> c1(Z) ;"),
    ("hob", "rule hob: hob([x] Z(x), W) -> Z(c1(Z(W))) ;"),
    ("lam", "rule lam: ap(lm([x] Z(x)), W) -> Z(W) ;"),
    ("nest", "rule nest: nest([x] Z(x)) -> Z(Z(k)) ;"),
]

CONSTRUCTORS = "sym k/0 ; sym c1/1 ; sym c2/2 ;"


def random_system(rng, min_rules=2, max_rules=5):
    picked = rng.sample(RULE_TEMPLATES, rng.randint(min_rules, max_rules))
    text = CONSTRUCTORS + "\n" + "\n".join(src for _, src in picked)
    return parse_system(text)


def _leaf(rng, bound_vars):
    if bound_vars and rng.random() < 0.5:
        return Var(rng.choice(bound_vars))
    return Sym("k", ())


def random_term(rng, system, depth, bound_vars=(), allow_rec=True):
    """A closed term over the system's signature, biased towards redexes."""
    bound_vars = list(bound_vars)
    if depth <= 0:
        return _leaf(rng, bound_vars)
    roll = rng.random()
    rules = {r.name: r for r in system.rules}
    if roll < 0.5 and rules:
        name = rng.choice(sorted(rules))
        if name == "dup":
            return Sym("dup", (random_term(rng, system, depth - 1, bound_vars),))
        if name == "drop":
            return Sym("drop", (random_term(rng, system, depth - 1, bound_vars),))
        if name == "swap":
            return Sym("swap", (random_term(rng, system, depth - 1, bound_vars),
                                random_term(rng, system, depth - 1, bound_vars)))
        if name == "col":
            return Sym("col", (random_term(rng, system, depth - 1, bound_vars),))
        if name == "uno":
            return Sym("uno", (random_term(rng, system, depth - 1, bound_vars),))
        if name == "hob":
            x = f"x{depth}"
            body = random_term(rng, system, depth - 1, bound_vars + [x])
            return Sym("hob", (Abs(x, body),
                               random_term(rng, system, depth - 1, bound_vars)))
        if name == "lam":
            x = f"x{depth}"
            body = random_term(rng, system, depth - 1, bound_vars + [x])
            return Sym("ap", (Sym("lm", (Abs(x, body),)),
                              random_term(rng, system, depth - 1, bound_vars)))
        if name == "nest":
            x = f"x{depth}"
            body = random_term(rng, system, depth - 1, bound_vars + [x])
            return Sym("nest", (Abs(x, body),))
    if roll < 0.65:
        return Sym("c2", (random_term(rng, system, depth - 1, bound_vars),
                          random_term(rng, system, depth - 1, bound_vars)))
    if roll < 0.75:
        return Sym("c1", (random_term(rng, system, depth - 1, bound_vars),))
    if roll < 0.85 and allow_rec and not bound_vars:
        v = f"R{depth}"
        inner = random_term(rng, system, depth - 1, bound_vars, allow_rec=False)
        return Rec(v, Sym("c2", (inner, RecVar(v))))
    return _leaf(rng, bound_vars)


def random_redex_set(rng, term, system, max_size=4, depth_bound=5):
    redexes = find_redexes(term, system, depth_bound)
    if not redexes:
        return []
    size = rng.randint(1, min(max_size, len(redexes)))
    return rng.sample(redexes, size)


def random_dev_sequence(rng, system, max_stages=3, term_depth=4):
    term = random_term(rng, system, term_depth)
    stages = []
    cur = term
    for _ in range(rng.randint(1, max_stages)):
        us = random_redex_set(rng, cur, system, max_size=3)
        dev = complete_development(cur, us, system)
        stages.append(dev)
        cur = dev.target
    return DevSequence(term, tuple(stages))


def random_prefix_set(rng, term, max_depth=3, keep=0.6):
    positions = sorted(positions_to_depth(term, max_depth))
    chosen = [p for p in positions if rng.random() < keep]
    return prefix_closure(chosen)
