"""Fair, outermost-fair and needed-fair reduction with fairness bookkeeping.

Fairness is realised by obligation tracking: every redex occurrence that
satisfies the strategy predicate opens an obligation carrying its residual
set; contracting any member (while it satisfies the predicate) resolves the
obligation, as does every member ceasing to satisfy the predicate.  The
scheduler always serves the oldest open obligation, contracting its
outermost-leftmost eligible member, which bounds every obligation's delay by
the number of live obligation classes.

Neededness is not computed directly; needed-fair selection classifies
redexes as essential against a stratified pilot reduction (an outermost-fair
run cut into depth strata), which coincides with neededness on terms that
reach normal forms.  Exhaustive neededness lives in the oracle module.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import FuelExhausted, NoEligibleRedex, PreconditionViolated
from .developments import dev_sequence_of_steps
from .essential import essential_positions
from .rewriting import Redex, contract, find_redexes, match
from .syntax import position_str
from .systems import require_valid, rule_meta
from .terms import (
    Abs, Rec, RecVar, Sym, Term, Var, alpha_eq, children, hole, is_hole,
    positions_to_depth, resolve, root_key, truncate,
)


@dataclass(frozen=True)
class StrategyKind:
    kind: str  # 'fair' | 'outermost-fair' | 'needed-fair'
    pilot_depth: int = 8
    pilot_fuel: int = 600

    def __post_init__(self):
        if self.kind not in ("fair", "outermost-fair", "needed-fair"):
            raise PreconditionViolated(f"unknown strategy {self.kind!r}")


FAIR = StrategyKind("fair")
OUTERMOST_FAIR = StrategyKind("outermost-fair")


def needed_fair(pilot_depth=8, pilot_fuel=600):
    return StrategyKind("needed-fair", pilot_depth, pilot_fuel)


@dataclass
class Trace:
    system: object
    label: str
    terms: list
    steps: list  # StepRecord per step
    ledger: list = None  # Obligations with birth/resolution bookkeeping

    @property
    def initial(self):
        return self.terms[0]

    @property
    def final(self):
        return self.terms[-1]

    def __len__(self):
        return len(self.steps)

    def depth_floor(self):
        """Per-index minimum contraction depth from that index on."""
        depths = [len(s.redex.position) for s in self.steps]
        floor = []
        cur = None
        for d in reversed(depths):
            cur = d if cur is None else min(cur, d)
            floor.append(cur)
        floor.reverse()
        return floor

    def step_specs(self):
        return [(s.redex.position, s.redex.rule.name) for s in self.steps]


def trace_of(term, step_specs, system, label="scripted"):
    """Build a trace from explicit (position, rule name) steps."""
    terms = [term]
    steps = []
    cur = term
    for pos, rulename in step_specs:
        rule = system.rule(rulename) if isinstance(rulename, str) else rulename
        v = match(rule, cur, tuple(pos))
        if v is None:
            raise PreconditionViolated(
                f"scripted step is not a redex at {position_str(tuple(pos))}")
        rec = contract(cur, Redex(tuple(pos), rule, v))
        steps.append(rec)
        cur = rec.target
        terms.append(cur)
    return Trace(system, label, terms, steps)


@dataclass(frozen=True)
class Approximant:
    term: Term
    stable_depth: int
    certificate: int  # step index after which all contractions were deeper
    status: str       # 'normal-form' | 'approximant' | 'divergence-suspected' | 'fuel-exhausted'


# ---------------------------------------------------------------------------
# predicates

def is_normal_form(term, system):
    seen = set()
    stack = [resolve(term)]
    while stack:
        v = stack.pop()
        if v in seen:
            continue
        seen.add(v)
        for rule in system.rules:
            if match(rule, v) is not None:
                return False
        for _, c in children(v):
            stack.append(resolve(c))
    return True


def min_redex_depth(term, system, bound=64):
    """Depth of the shallowest redex, or None when the term is normal."""
    if is_normal_form(term, system):
        return None
    for d in range(bound):
        for p in positions_to_depth(term, d):
            if len(p) == d:
                for rule in system.rules:
                    if match(rule, term, p) is not None:
                        return d
    raise PreconditionViolated("shallowest redex deeper than the bound")


def outermost_redexes(term, system, depth_bound):
    """Redexes with no redex at any strict prefix position."""
    redexes = find_redexes(term, system, depth_bound)
    roots = {u.position for u in redexes}
    out = []
    for u in redexes:
        if not any(u.position[:k] in roots for k in range(len(u.position))):
            out.append(u)
    return out


class _Predicate:
    """satisfies(term, position, rule): does the redex satisfy the strategy
    predicate?  Scan-free for members (checked against ancestors only) so the
    bookkeeping never depends on the enumeration bound."""

    def __init__(self, kind, system):
        self.kind = kind
        self.system = system
        self._needed_cache = {}

    def satisfies(self, term, position, rule):
        if match(rule, term, position) is None:
            return False
        if self.kind.kind == "fair":
            return True
        if self.kind.kind == "outermost-fair":
            for k in range(len(position)):
                for r in self.system.rules:
                    if match(r, term, position[:k]) is not None:
                        return False
            return True
        return position in self._needed_positions(term)

    def _needed_positions(self, term):
        if term not in self._needed_cache:
            pilot = needed_pilot(term, self.system,
                                 self.kind.pilot_depth, self.kind.pilot_fuel)
            self._needed_cache[term] = pilot.essential_start_positions()
        return self._needed_cache[term]


# ---------------------------------------------------------------------------
# obligation tracking

@dataclass
class Obligation:
    born: int
    members: frozenset  # of (position, rule name)
    resolved_at: object = None
    resolution: str = ""

    @property
    def open(self):
        return self.resolved_at is None


class FairnessTracker:
    def __init__(self, kind, system, spawn_bound):
        self.pred = _Predicate(kind, system)
        self.system = system
        self.spawn_bound = spawn_bound
        self.obligations = []

    def _live(self):
        return [ob for ob in self.obligations if ob.open]

    def observe_term(self, index, term, redexes=None):
        if redexes is None:
            redexes = find_redexes(term, self.system, self.spawn_bound)
        # clause 2: an obligation none of whose members satisfies the
        # predicate any more is discharged vacuously
        for ob in self._live():
            if not any(self.pred.satisfies(term, p, self.system.rule(rn))
                       for p, rn in ob.members):
                ob.resolved_at = index
                ob.resolution = "vacuous"
        live_sets = {ob.members for ob in self._live()}
        for u in redexes:
            if self.pred.satisfies(term, u.position, u.rule):
                key = frozenset([(u.position, u.rule.name)])
                if key not in live_sets:
                    self.obligations.append(Obligation(index, key))
                    live_sets.add(key)

    def observe_step(self, index, term, step):
        contracted = step.redex.position
        contracted_sat = self.pred.satisfies(term, contracted, step.redex.rule)
        live = self._live()
        member_redexes = {}
        for ob in live:
            for p, rn in ob.members:
                if (p, rn) not in member_redexes:
                    rule = self.system.rule(rn)
                    v = match(rule, term, p)
                    member_redexes[(p, rn)] = Redex(p, rule, v) if v else None
        valid = [u for u in member_redexes.values() if u is not None]
        residual_map = step.residual_map(valid) if valid else {}
        bypos = {u.position: rs for u, rs in residual_map.items()}
        for ob in live:
            if contracted_sat and any(p == contracted for p, _ in ob.members):
                ob.resolved_at = index
                ob.resolution = "contracted"
                continue
            new = set()
            for p, rn in ob.members:
                if member_redexes.get((p, rn)) is None:
                    continue
                for r in bypos.get(p, ()):
                    new.add((r.position, r.rule.name))
            ob.members = frozenset(new)
            if not ob.members:
                ob.resolved_at = index
                ob.resolution = "vacuous"
        # identically-tracked obligations are redundant: keep the oldest
        by_members = {}
        for ob in self._live():
            other = by_members.get(ob.members)
            if other is None:
                by_members[ob.members] = ob
            elif other.born <= ob.born:
                ob.resolved_at = index
                ob.resolution = "merged"
            else:
                other.resolved_at = index
                other.resolution = "merged"
                by_members[ob.members] = ob

    def select(self, term):
        for ob in self.obligations:
            if not ob.open:
                continue
            eligible = []
            for p, rn in sorted(ob.members, key=lambda m: (len(m[0]), m[0])):
                rule = self.system.rule(rn)
                if self.pred.satisfies(term, p, rule):
                    eligible.append(Redex(p, rule, match(rule, term, p)))
            if eligible:
                return eligible[0]
        raise NoEligibleRedex("no tracked redex satisfies the strategy predicate")


def select(kind, trace, term):
    """Rebuild the fairness state from the trace and pick the next redex:
    the oldest obligation whose members still satisfy the predicate, its
    outermost-leftmost eligible member."""
    require_valid(trace.system)
    tracker = _replay_tracker(kind, trace)
    tracker.observe_term(len(trace.steps), term)
    return tracker.select(term)


def _replay_tracker(kind, trace, spawn_bound=None):
    bound = spawn_bound or _default_bound(trace)
    tracker = FairnessTracker(kind, trace.system, bound)
    for i, step in enumerate(trace.steps):
        tracker.observe_term(i, trace.terms[i])
        tracker.observe_step(i, trace.terms[i], step)
    return tracker


def _max_lhs_depth(system):
    return max((rule_meta(r).max_depth() for r in system.rules), default=0)


def _default_bound(trace):
    deepest = max((len(s.redex.position) for s in trace.steps), default=0)
    return deepest + _max_lhs_depth(trace.system) + 2


# ---------------------------------------------------------------------------
# normalisation

def normalize(term, system, kind, depth_goal, fuel):
    """Drive the term with the chosen fair strategy until nothing above the
    goal depth can change any more, or fuel runs out.

    Once no redex occurs at depth < depth_goal + max-lhs-depth, contractions
    can never recreate one there (a step only changes the term at and below
    its redex, and a pattern spans at most the lhs depth), so the prefix
    above the goal is final and certified.
    """
    require_valid(system)
    maxl = _max_lhs_depth(system)
    stable_bound = depth_goal + maxl
    scan_bound = stable_bound + 2
    if kind.kind == "needed-fair" and kind.pilot_depth <= stable_bound:
        # the pilot must stratify past every depth the run still rewrites at,
        # or pending redexes near the bound would classify as inessential
        kind = StrategyKind(kind.kind, stable_bound + 1, kind.pilot_fuel)
    tracker = FairnessTracker(kind, system, scan_bound)
    terms = [term]
    steps = []
    cur = term
    status = None
    for _ in range(fuel):
        redexes = find_redexes(cur, system, scan_bound)
        tracker.observe_term(len(steps), cur, redexes)
        if not any(u.depth < stable_bound for u in redexes):
            status = "stable"
            break
        u = tracker.select(cur)
        rec = contract(cur, u)
        tracker.observe_step(len(steps), cur, rec)
        steps.append(rec)
        cur = rec.target
        terms.append(cur)
    trace = Trace(system, kind.kind, terms, steps, ledger=tracker.obligations)
    if status != "stable":
        floor = trace.depth_floor()
        stuck = bool(floor) and floor[0] == floor[-1] and floor[0] < depth_goal
        status = "divergence-suspected" if stuck else "fuel-exhausted"
        approx = Approximant(truncate(cur, depth_goal), 0,
                             len(steps), status)
        return approx, trace
    certificate = 0
    for i, s in enumerate(steps):
        if len(s.redex.position) < depth_goal:
            certificate = i + 1
    if is_normal_form(cur, system):
        approx = Approximant(cur, depth_goal, certificate, "normal-form")
    else:
        approx = Approximant(truncate(cur, depth_goal), depth_goal,
                             certificate, "approximant")
    return approx, trace


# ---------------------------------------------------------------------------
# rational normal forms from stable prefixes

def _wildcard_eq(a, b, pairs=()):
    a, b = resolve(a), resolve(b)
    if is_hole(a) or is_hole(b):
        return True
    ka, kb = root_key(a), root_key(b)
    if ka[0] != kb[0]:
        return False
    if ka[0] == "var":
        from .terms import _env_lookup

        return _env_lookup(pairs, a.name, b.name)
    if ka[0] == "abs":
        return _wildcard_eq(a.body, b.body, pairs + ((a.var, b.var),))
    if ka != kb:
        return False
    return all(_wildcard_eq(x, y, pairs) for x, y in zip(a.args, b.args))


def _known_depth(t):
    """Depth of the shallowest hole; None when the subtree is hole-free."""
    t = resolve(t)
    if is_hole(t):
        return 0
    best = None
    for _, c in children(t):
        d = _known_depth(c)
        if d is not None:
            best = d + 1 if best is None else min(best, d + 1)
    return best


def _fold_rational(snapshot):
    """Tie holes back to consistent ancestors, producing a rec term whose
    unfolding matches the snapshot; None when no sufficiently confirmed fold
    exists.  A fold onto an ancestor L levels up is accepted only when the
    snapshot stays known for at least L further levels below the fold point,
    i.e. a full extra period confirms the conjectured cycle."""
    counter = [0]

    def close(t, depth, ancestors):
        t = resolve(t)
        if is_hole(t):
            return None
        for anc, anc_depth, var, used in ancestors:
            if _wildcard_eq(t, anc):
                period = depth - anc_depth
                known = _known_depth(t)
                if known is None or known >= max(period + 1, 2):
                    used[0] = True
                    return RecVar(var)
        counter[0] += 1
        var = f"S{counter[0]}"
        used = [False]
        anc_entry = (t, depth, var, used)
        match t:
            case Var(_, _):
                out = t
            case Abs(x, body, _):
                inner = close(body, depth + 1, ancestors + (anc_entry,))
                if inner is None:
                    return None
                out = Abs(x, inner)
            case Sym(f, args, _):
                new = []
                for a in args:
                    inner = close(a, depth + 1, ancestors + (anc_entry,))
                    if inner is None:
                        return None
                    new.append(inner)
                out = Sym(f, tuple(new))
            case _:
                return None
        if used[0]:
            out = Rec(var, out)
        return out

    return close(snapshot, 0, ())


def detect_rational_nf(trace):
    """Upgrade a stabilised trace to a rational normal form when the stable
    prefixes are eventually periodic; None otherwise."""
    system = trace.system
    final = trace.final
    if is_normal_form(final, system):
        return final
    d = min_redex_depth(final, system)
    if d is None or d == 0:
        return None
    snapshot = truncate(final, d)
    candidate = _fold_rational(snapshot)
    if candidate is None:
        return None
    if not is_normal_form(candidate, system):
        return None
    # the fold must explain the stable prefix exactly, not just consistently
    if not alpha_eq(truncate(candidate, d), snapshot):
        return None
    return candidate


# ---------------------------------------------------------------------------
# fairness audit

@dataclass(frozen=True)
class AuditVerdict:
    ok: bool
    detail: str = ""
    witness: object = None

    def __bool__(self):
        return self.ok


def fairness_audit(trace, kind, window=None):
    """Check the produced prefix against the strategy's fairness clause:
    every predicate-satisfying redex occurrence must, within the window,
    either have a residual contracted or stop having predicate-satisfying
    residuals.  Obligations younger than the window at the cut are
    inconclusive and pass."""
    require_valid(trace.system)
    if window is None:
        window = max(1, len(trace.steps))
    tracker = _replay_tracker(kind, trace)
    tracker.observe_term(len(trace.steps), trace.final)
    end = len(trace.steps)
    for ob in tracker.obligations:
        if ob.open and end - ob.born >= window:
            pos = sorted(ob.members)
            return AuditVerdict(
                False,
                f"obligation born at step {ob.born} unresolved for "
                f"{end - ob.born} steps (members at "
                f"{', '.join(position_str(p) for p, _ in pos)})",
                witness=ob)
    return AuditVerdict(True)


# ---------------------------------------------------------------------------
# needed-fair pilot

@dataclass(frozen=True)
class Stratum:
    depth: int
    index: int      # trace index after which all steps are at least this deep
    term: Term
    prefix: frozenset  # positions of the stratum term above the depth


@dataclass(frozen=True)
class Pilot:
    trace: object
    strata: tuple

    def essential_start_positions(self):
        """Positions of the pilot's initial term essential for some stratum
        prefix; by the neededness correspondence these are the needed ones."""
        out = set()
        specs = self.trace.step_specs()
        for st in self.strata:
            if not st.prefix:
                continue
            dev = dev_sequence_of_steps(self.trace.initial,
                                        specs[: st.index], self.trace.system)
            out |= essential_positions(st.prefix, dev)
        return frozenset(out)


def needed_pilot(term, system, depth_goal, fuel):
    """An outermost-fair run re-indexed into depth strata: for every depth d
    up to the goal, an index after which all contractions are below d, the
    term there, and its positions above d."""
    approx, trace = normalize(term, system, OUTERMOST_FAIR, depth_goal, fuel)
    if approx.status in ("divergence-suspected", "fuel-exhausted"):
        raise FuelExhausted("pilot run did not stabilise", approx, trace)
    depths = [len(s.redex.position) for s in trace.steps]
    strata = []
    for d in range(1, depth_goal + 1):
        n_d = 0
        for i in range(len(depths) - 1, -1, -1):
            if depths[i] < d:
                n_d = i + 1
                break
        s_d = trace.terms[n_d]
        prefix = frozenset(p for p in positions_to_depth(s_d, d - 1))
        strata.append(Stratum(d, n_d, s_d, prefix))
    return Pilot(trace, tuple(strata))
