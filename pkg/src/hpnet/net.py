"""Core net model: places, transitions, arcs, markings and the token game.

Everything here is an immutable value. ``Net`` accepts arbitrary candidate
structures so that :func:`validate_structure` can report on them; the
analyses assume a net with an empty violation list.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import cached_property

INF = math.inf


@dataclass(frozen=True, order=True)
class TimeInterval:
    """Integer interval ``[lo, hi]``; ``hi`` may be ``INF`` (unbounded)."""

    lo: int
    hi: int | float = INF

    def __post_init__(self):
        if isinstance(self.lo, bool) or not isinstance(self.lo, int):
            raise TypeError(f"lower bound must be an integer, got {self.lo!r}")
        if self.hi != INF and (isinstance(self.hi, bool) or not isinstance(self.hi, int)):
            raise TypeError(f"upper bound must be an integer or INF, got {self.hi!r}")
        if self.lo < 0:
            raise ValueError(f"negative lower bound {self.lo}")
        if self.lo > self.hi:
            raise ValueError(f"interval [{self.lo},{self.hi}] has lo > hi")

    @property
    def bounded(self) -> bool:
        return self.hi != INF

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def __contains__(self, value) -> bool:
        return self.lo <= value <= self.hi

    def __str__(self):
        hi = "inf" if self.hi == INF else str(self.hi)
        return f"[{self.lo},{hi}]"


PLACE_DEFAULT_WINDOW = TimeInterval(0, INF)
TRANSITION_DEFAULT_WINDOW = TimeInterval(0, 0)


@dataclass(frozen=True)
class Place:
    id: str
    entry: bool = False
    exit: bool = False
    window: TimeInterval | None = None

    @property
    def role(self) -> str:
        if self.entry and self.exit:
            return "entry+exit"
        if self.entry:
            return "entry"
        if self.exit:
            return "exit"
        return "internal"

    @property
    def tc(self) -> TimeInterval:
        return self.window if self.window is not None else PLACE_DEFAULT_WINDOW


@dataclass(frozen=True)
class Transition:
    """A transition. ``name`` is the service label; ``None`` is the silent label."""

    id: str
    name: str | None = None
    guard: str | None = None
    window: TimeInterval | None = None
    duration: int = 0
    refinable: bool = False
    refine: str | None = None
    pre_labels: frozenset[str] = frozenset()
    post_labels: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.refine is not None and not self.refinable:
            object.__setattr__(self, "refinable", True)
        object.__setattr__(self, "pre_labels", frozenset(self.pre_labels))
        object.__setattr__(self, "post_labels", frozenset(self.post_labels))

    @property
    def silent(self) -> bool:
        return self.name is None

    @property
    def tc(self) -> TimeInterval:
        return self.window if self.window is not None else TRANSITION_DEFAULT_WINDOW


@dataclass(frozen=True, order=True)
class Arc:
    source: str
    target: str


@dataclass(frozen=True)
class Net:
    """A single-level net. Node collections are kept sorted so equality is structural."""

    name: str
    places: tuple[Place, ...] = ()
    transitions: tuple[Transition, ...] = ()
    arcs: tuple[Arc, ...] = ()

    def __post_init__(self):
        key = lambda node: (node.id, repr(node))
        object.__setattr__(self, "places", tuple(sorted(self.places, key=key)))
        object.__setattr__(self, "transitions", tuple(sorted(self.transitions, key=key)))
        object.__setattr__(self, "arcs", tuple(sorted(self.arcs)))

    @cached_property
    def place_map(self) -> dict[str, Place]:
        return {p.id: p for p in self.places}

    @cached_property
    def transition_map(self) -> dict[str, Transition]:
        return {t.id: t for t in self.transitions}

    @property
    def place_ids(self) -> list[str]:
        return [p.id for p in self.places]

    @property
    def transition_ids(self) -> list[str]:
        return [t.id for t in self.transitions]

    @cached_property
    def _adjacency(self):
        pre: dict[str, list[str]] = {}
        post: dict[str, list[str]] = {}
        for a in self.arcs:
            post.setdefault(a.source, []).append(a.target)
            pre.setdefault(a.target, []).append(a.source)
        freeze = lambda d: {k: tuple(sorted(set(v))) for k, v in d.items()}
        return freeze(pre), freeze(post)

    @property
    def entry(self) -> str | None:
        ids = [p.id for p in self.places if p.entry]
        return ids[0] if len(ids) == 1 else None

    @property
    def exit(self) -> str | None:
        ids = [p.id for p in self.places if p.exit]
        return ids[0] if len(ids) == 1 else None

    def has_node(self, node: str) -> bool:
        return node in self.place_map or node in self.transition_map

    def replace(self, **changes) -> Net:
        values = dict(name=self.name, places=self.places,
                      transitions=self.transitions, arcs=self.arcs)
        values.update(changes)
        return Net(**values)


class Marking(Mapping):
    """Immutable multiset of tokens; absent places hold zero tokens."""

    __slots__ = ("_items", "_hash")

    def __init__(self, tokens: Mapping[str, int] | Iterable[tuple[str, int]] | None = None, **kw):
        counts: dict[str, int] = {}
        pairs = tokens.items() if isinstance(tokens, Mapping) else (tokens or ())
        for place, n in list(pairs) + list(kw.items()):
            if n < 0:
                raise ValueError(f"negative token count {n} for place {place!r}")
            counts[place] = counts.get(place, 0) + n
        self._items = tuple(sorted((p, n) for p, n in counts.items() if n))
        self._hash = hash(self._items)

    def __getitem__(self, place: str) -> int:
        for p, n in self._items:
            if p == place:
                return n
        return 0

    def __contains__(self, place) -> bool:
        return any(p == place for p, _ in self._items)

    def __iter__(self):
        return (p for p, _ in self._items)

    def __len__(self):
        return len(self._items)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if isinstance(other, Marking):
            return self._items == other._items
        if isinstance(other, Mapping):
            return self._items == tuple(sorted((p, n) for p, n in other.items() if n))
        return NotImplemented

    def __lt__(self, other: Marking):
        return self._items < other._items

    def __repr__(self):
        return "Marking({" + ", ".join(f"{p!r}: {n}" for p, n in self._items) + "})"

    def total(self) -> int:
        return sum(n for _, n in self._items)

    def as_dict(self) -> dict[str, int]:
        return dict(self._items)


# ---------------------------------------------------------------------------
# structural validation


@dataclass(frozen=True, order=True)
class Violation:
    location: str
    code: str
    message: str = field(default="", compare=False)


def validate_structure(net: Net, strict_intervals: bool = False) -> list[Violation]:
    """Check the net invariants; returns violations ordered by node id."""
    out: list[Violation] = []
    seen: dict[str, str] = {}
    for kind, nodes in (("place", net.places), ("transition", net.transitions)):
        for node in nodes:
            if node.id in seen:
                code = "DUPLICATE_ID" if seen[node.id] == kind else "NODE_CLASH"
                out.append(Violation(node.id, code, f"{kind} id {node.id!r} already used by a {seen[node.id]}"))
            else:
                seen[node.id] = kind
    if not seen:
        out.append(Violation("", "EMPTY_NET", "net has neither places nor transitions"))

    places, transitions = net.place_map, net.transition_map
    arc_seen = set()
    for arc in net.arcs:
        loc = f"{arc.source}->{arc.target}"
        if arc in arc_seen:
            out.append(Violation(loc, "DUPLICATE_ARC", "arc declared twice"))
            continue
        arc_seen.add(arc)
        missing = [n for n in (arc.source, arc.target) if n not in seen]
        if missing:
            out.append(Violation(loc, "UNKNOWN_NODE", f"arc endpoint {missing[0]!r} does not exist"))
            continue
        if (arc.source in places) == (arc.target in places):
            kind = "place" if arc.source in places else "transition"
            out.append(Violation(loc, "ARC_SHAPE", f"arc connects {kind} to {kind}"))

    entries = [p.id for p in net.places if p.entry]
    exits = [p.id for p in net.places if p.exit]
    if not entries:
        out.append(Violation(net.name, "MISSING_ENTRY", "no entry place"))
    for pid in entries[1:]:
        out.append(Violation(pid, "MULTIPLE_ENTRY", f"second entry place (first is {entries[0]!r})"))
    if not exits:
        out.append(Violation(net.name, "MISSING_EXIT", "no exit place"))
    for pid in exits[1:]:
        out.append(Violation(pid, "MULTIPLE_EXIT", f"second exit place (first is {exits[0]!r})"))

    for t in net.transitions:
        if t.duration < 0:
            out.append(Violation(t.id, "NEGATIVE_DURATION", f"duration {t.duration} < 0"))
    if strict_intervals:
        for node in (*net.places, *net.transitions):
            w = node.window
            if w is not None and not w.lo < w.hi:
                out.append(Violation(node.id, "STRICT_INTERVAL", f"window {w} is not strictly increasing"))
            if w is not None and not w.bounded:
                out.append(Violation(node.id, "STRICT_INTERVAL", f"window {w} is unbounded"))
    return sorted(out)


# ---------------------------------------------------------------------------
# token game


class UnknownNodeError(KeyError):
    pass


class NotEnabledError(ValueError):
    code = "NOT_ENABLED"


def preset(net: Net, node: str) -> tuple[str, ...]:
    if not net.has_node(node):
        raise UnknownNodeError(node)
    return net._adjacency[0].get(node, ())


def postset(net: Net, node: str) -> tuple[str, ...]:
    if not net.has_node(node):
        raise UnknownNodeError(node)
    return net._adjacency[1].get(node, ())


def is_enabled(net: Net, m: Mapping[str, int], t: str) -> bool:
    return all(m.get(p, 0) >= 1 for p in preset(net, t))


def enabled_transitions(net: Net, m: Mapping[str, int]) -> list[str]:
    """Untimed enabling; transitions are returned in id order."""
    return [t for t in net.transition_ids if is_enabled(net, m, t)]


def fire(net: Net, m: Mapping[str, int], t: str) -> Marking:
    if not is_enabled(net, m, t):
        raise NotEnabledError(f"transition {t!r} is not enabled")
    counts = dict(m)
    for p in preset(net, t):
        counts[p] -= 1
    for p in postset(net, t):
        counts[p] = counts.get(p, 0) + 1
    return Marking(counts)
