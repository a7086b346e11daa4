"""Interval calculus over workflow-pattern trees, and the pattern -> net generator.

The calculus composes enabling intervals (TEB) bottom-up:

* sequence     ``teb(first) + teb(second) + tec``  (tec: connector interval)
* parallel     componentwise max over branches
* conditional  componentwise max over branches of ``teb(pre) + teb(branch) + tec``
* loop         ``k * teb(body)``

The conditional rule takes the max for *both* bounds, so its lower bound is
the slowest branch rather than the fastest. ``check_bounds_against_oracle``
surfaces that against the state space instead of correcting it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

from .net import INF, Arc, Net, Place, TimeInterval, Transition
from .untimed import ExploreLimits

ZERO = TimeInterval(0, 0)


@dataclass(frozen=True)
class Leaf:
    id: str
    teb: TimeInterval


@dataclass(frozen=True)
class Seq:
    first: "PatternExpr"
    second: "PatternExpr"
    connector_tec: TimeInterval = ZERO


@dataclass(frozen=True)
class Par:
    branches: tuple["PatternExpr", ...]

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        if len(self.branches) < 2:
            raise ValueError("parallel composition needs at least two branches")


@dataclass(frozen=True)
class Cond:
    pre: "PatternExpr"
    branches: tuple["PatternExpr", ...]
    connector_tec: TimeInterval = ZERO

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        if len(self.branches) < 2:
            raise ValueError("conditional composition needs at least two branches")


@dataclass(frozen=True)
class Loop:
    body: "PatternExpr"
    k: int

    def __post_init__(self):
        if isinstance(self.k, bool) or not isinstance(self.k, int) or self.k < 1:
            raise ValueError(f"loop count must be a positive integer, got {self.k!r}")


PatternExpr = Leaf | Seq | Par | Cond | Loop


def interval_add(a: TimeInterval, b: TimeInterval) -> TimeInterval:
    return TimeInterval(a.lo + b.lo, a.hi + b.hi)


def interval_max(a: TimeInterval, b: TimeInterval) -> TimeInterval:
    return TimeInterval(max(a.lo, b.lo), max(a.hi, b.hi))


def interval_scale(a: TimeInterval, k: int) -> TimeInterval:
    return TimeInterval(k * a.lo, a.hi if a.hi == INF else k * a.hi)


def teb_eval(e: PatternExpr) -> TimeInterval:
    match e:
        case Leaf(teb=teb):
            return teb
        case Seq(first, second, tec):
            return interval_add(interval_add(teb_eval(first), teb_eval(second)), tec)
        case Par(branches):
            return reduce(interval_max, map(teb_eval, branches))
        case Cond(pre, branches, tec):
            head = teb_eval(pre)
            return reduce(interval_max, (interval_add(interval_add(head, teb_eval(b)), tec) for b in branches))
        case Loop(body, k):
            return interval_scale(teb_eval(body), k)
    raise TypeError(f"not a pattern expression: {e!r}")


def contains_cond(e: PatternExpr) -> bool:
    match e:
        case Leaf():
            return False
        case Cond():
            return True
        case Seq(first, second, _):
            return contains_cond(first) or contains_cond(second)
        case Par(branches):
            return any(map(contains_cond, branches))
        case Loop(body, _):
            return contains_cond(body)
    raise TypeError(f"not a pattern expression: {e!r}")


def depth(e: PatternExpr) -> int:
    match e:
        case Leaf():
            return 1
        case Seq(first, second, _):
            return 1 + max(depth(first), depth(second))
        case Par(branches) | Cond(_, branches, _):
            kids = list(branches) + ([e.pre] if isinstance(e, Cond) else [])
            return 1 + max(map(depth, kids))
        case Loop(body, _):
            return 1 + depth(body)
    raise TypeError(f"not a pattern expression: {e!r}")


# ---------------------------------------------------------------------------
# net generation


@dataclass
class _Builder:
    places: list[Place] = field(default_factory=list)
    transitions: list[Transition] = field(default_factory=list)
    arcs: list[Arc] = field(default_factory=list)
    used: set[str] = field(default_factory=set)
    counter: int = 0

    def fresh(self, base: str) -> str:
        name = base
        while name in self.used:
            self.counter += 1
            name = f"{base}_{self.counter}"
        self.used.add(name)
        return name

    def place(self) -> str:
        pid = self.fresh("p")
        self.places.append(Place(pid))
        return pid

    def transition(self, base, src, dst, window=None, name=None) -> str:
        tid = self.fresh(base)
        self.transitions.append(Transition(tid, name=name, window=window))
        self.arcs += [Arc(p, tid) for p in src] + [Arc(tid, p) for p in dst]
        return tid

    def build(self, e: PatternExpr, entry: str, exit_: str | None = None) -> str:
        """Wire ``e`` from place ``entry``; returns its exit place (``exit_`` if given)."""
        match e:
            case Leaf(id, teb):
                out = exit_ or self.place()
                self.transition(id, [entry], [out], window=teb, name=id)
                return out
            case Seq(first, second, tec):
                mid = self.build(first, entry)
                nxt = self.place()
                self.transition("_tec", [mid], [nxt], window=tec)
                return self.build(second, nxt, exit_)
            case Par(branches):
                starts = [self.place() for _ in branches]
                self.transition("_split", [entry], starts)
                ends = [self.build(b, s) for b, s in zip(branches, starts)]
                out = exit_ or self.place()
                self.transition("_join", ends, [out])
                return out
            case Cond(pre, branches, tec):
                mid = self.build(pre, entry)
                out = exit_ or self.place()
                for b in branches:
                    start = self.place()
                    self.transition("_choice", [mid], [start], window=tec)
                    self.build(b, start, out)
                return out
            case Loop(body, k):
                here = entry
                for i in range(k):
                    here = self.build(body, here, exit_ if i == k - 1 else None)
                return here
        raise TypeError(f"not a pattern expression: {e!r}")


def pattern_to_net(e: PatternExpr, name: str = "pattern") -> Net:
    """Workflow net realising the pattern: leaf TEB on the leaf transition's
    window, connector TEC on a silent transition after the connector place."""
    b = _Builder()
    entry = b.place()
    exit_ = b.build(e, entry)
    places = [Place(p.id, entry=p.id == entry, exit=p.id == exit_) for p in b.places]
    return Net(name, tuple(places), tuple(b.transitions), tuple(b.arcs))


# ---------------------------------------------------------------------------
# calculus vs state space

EQUAL = "equal"
CONTAINS = "calculus_contains_statespace"
MISMATCH = "mismatch"
UNKNOWN = "unknown"


@dataclass
class BoundsCheck:
    calculus: TimeInterval
    statespace: TimeInterval | None
    relation: str

    def to_json(self) -> dict:
        return {"calculus": str(self.calculus),
                "statespace": None if self.statespace is None else str(self.statespace),
                "relation": self.relation}


def relate(calculus: TimeInterval, statespace: TimeInterval) -> str:
    """``equal``; ``calculus_contains_statespace`` when the calculus worst case
    still covers the state space's (the conditional rule may overestimate the
    best case); otherwise ``mismatch``."""
    if calculus == statespace:
        return EQUAL
    if statespace.hi <= calculus.hi:
        return CONTAINS
    return MISMATCH


def check_bounds_against_oracle(e: PatternExpr, lim: ExploreLimits = ExploreLimits()) -> BoundsCheck:
    from .timed import check_schedulability

    calc = teb_eval(e)
    report = check_schedulability(pattern_to_net(e), lim=lim)
    if report.truncated or report.completion is None:
        return BoundsCheck(calc, report.completion, UNKNOWN)
    return BoundsCheck(calc, report.completion, relate(calc, report.completion))
