"""Concrete syntax for terms, rules and systems.

Term grammar (shared by files, the CLI and test fixtures):

    term  := '[' name ']' term          abstraction, name lowercase
           | 'rec' NAME '.' term        rational cycle binder, NAME uppercase
           | ident '(' term,* ')'       symbol (lowercase) or meta (uppercase)
           | ident                      variable / nullary symbol / 0-ary meta
           | '_|_'                      hole (printed truncations only)

A bare lowercase identifier is a variable when bound by an enclosing [x],
otherwise a nullary symbol.  A bare uppercase identifier is a rec variable
when bound by an enclosing rec, otherwise a 0-ary meta-variable (rule sides
only).  Positions print dot-separated, the root as '@'.

System files hold `sym f/2 ;` declarations and `rule name: lhs -> rhs ;`
statements; '#' starts a line comment.
"""

from __future__ import annotations

import re

from .errors import ParseError
from .terms import (
    HOLE, Abs, MetaApp, Rec, RecVar, Sym, Var, check_guarded,
)

_TOKEN = re.compile(
    r"\s+|#[^\n]*"
    r"|(?P<arrow>->)"
    r"|(?P<hole>_\|_)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<num>\d+)"
    r"|(?P<punct>[()\[\],.;:/{}@])"
)


def tokenize(text):
    out = []
    pos = 0
    line, col = 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"stray character {text[pos]!r}", line, col)
        chunk = m.group(0)
        kind = m.lastgroup
        if kind is not None:
            out.append((kind, chunk, line, col))
        nl = chunk.count("\n")
        if nl:
            line += nl
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    out.append(("eof", "", line, col))
    return out


class _Tokens:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        if t[0] != "eof":
            self.i += 1
        return t

    def expect(self, value):
        kind, chunk, line, col = self.next()
        if chunk != value:
            raise ParseError(f"expected {value!r}, found {chunk!r}", line, col)
        return chunk

    def error(self, message):
        _, chunk, line, col = self.peek()
        raise ParseError(f"{message} (at {chunk!r})", line, col)


def _parse_term(ts, bound, recs, allow_meta):
    kind, chunk, line, col = ts.peek()
    if chunk == "[":
        ts.next()
        _, name, l2, c2 = ts.next()
        if not name or not name[0].islower():
            raise ParseError("abstraction binder must be lowercase", l2, c2)
        ts.expect("]")
        body = _parse_term(ts, bound | {name}, recs, allow_meta)
        return Abs(name, body)
    if chunk == "rec":
        ts.next()
        _, name, l2, c2 = ts.next()
        if not name or not name[0].isupper():
            raise ParseError("rec binder must be uppercase", l2, c2)
        ts.expect(".")
        body = _parse_term(ts, bound, recs | {name}, allow_meta)
        return Rec(name, body)
    if kind == "hole":
        ts.next()
        return Sym(HOLE, ())
    if kind != "name":
        ts.error("expected a term")
    ts.next()
    name = chunk
    args = None
    if ts.peek()[1] == "(":
        ts.next()
        args = []
        if ts.peek()[1] != ")":
            args.append(_parse_term(ts, bound, recs, allow_meta))
            while ts.peek()[1] == ",":
                ts.next()
                args.append(_parse_term(ts, bound, recs, allow_meta))
        ts.expect(")")
        args = tuple(args)
    upper = name[0].isupper()
    if args is None:
        if upper:
            if name in recs:
                return RecVar(name)
            if not allow_meta:
                raise ParseError(f"meta-variable {name} not allowed here", line, col)
            return MetaApp(name, ())
        if name in bound:
            return Var(name)
        return Sym(name, ())
    if upper:
        if name in recs:
            raise ParseError(f"rec variable {name} cannot take arguments", line, col)
        if not allow_meta:
            raise ParseError(f"meta-variable {name} not allowed here", line, col)
        return MetaApp(name, args)
    return Sym(name, args)


def parse_term(text, allow_meta=False):
    ts = _Tokens(text)
    t = _parse_term(ts, frozenset(), frozenset(), allow_meta)
    if ts.peek()[0] != "eof":
        ts.error("trailing input after term")
    return check_guarded(t)


def parse_metaterm(text):
    return parse_term(text, allow_meta=True)


def parse_position(text):
    text = text.strip()
    if text in ("@", ""):
        return ()
    try:
        return tuple(int(part) for part in text.split("."))
    except ValueError:
        raise ParseError(f"bad position {text!r}") from None


def position_str(p):
    return "@" if not p else ".".join(str(i) for i in p)


def parse_system(text):
    """Parse `sym f/2 ;` and `rule name: lhs -> rhs ;` statements."""
    from .systems import RewriteSystem, Rule, infer_signature

    ts = _Tokens(text)
    rules = []
    declared = {}
    while ts.peek()[0] != "eof":
        kind, chunk, line, col = ts.peek()
        if chunk == "sym":
            ts.next()
            _, name, _, _ = ts.next()
            ts.expect("/")
            k, num, l2, c2 = ts.next()
            if k != "num":
                raise ParseError("expected an arity", l2, c2)
            declared[name] = int(num)
            ts.expect(";")
        elif chunk == "rule":
            ts.next()
            _, name, _, _ = ts.next()
            ts.expect(":")
            lhs = _parse_term(ts, frozenset(), frozenset(), True)
            ts.expect("->")
            rhs = _parse_term(ts, frozenset(), frozenset(), True)
            ts.expect(";")
            rules.append(Rule(name, check_guarded(lhs), check_guarded(rhs)))
        else:
            ts.error("expected 'sym' or 'rule'")
    signature = infer_signature(rules, declared)
    return RewriteSystem(tuple(rules), signature)


# ---------------------------------------------------------------------------
# printing

def print_term(t, max_depth=None):
    """Render a term.  Rational structure prints with its rec binders; pass
    max_depth to force a truncated rendering of the unfolding instead."""
    if max_depth is not None:
        from .terms import truncate

        t = truncate(t, max_depth)

    def go(u):
        match u:
            case Var(x, _):
                return x
            case Abs(x, body, _):
                return f"[{x}] {go(body)}"
            case Sym(f, args, _):
                if not args:
                    return f
                return f"{f}({', '.join(go(a) for a in args)})"
            case MetaApp(z, args):
                if not args:
                    return z
                return f"{z}({', '.join(go(a) for a in args)})"
            case Rec(v, body):
                return f"rec {v}. {go(body)}"
            case RecVar(n):
                return n
        raise TypeError(f"not a term: {u!r}")

    return go(t)


def print_rule(rule):
    return f"rule {rule.name}: {print_term(rule.lhs)} -> {print_term(rule.rhs)} ;"


def print_system(system):
    lines = [f"sym {f}/{n} ;" for f, n in system.signature]
    lines += [print_rule(r) for r in system.rules]
    return "\n".join(lines)
