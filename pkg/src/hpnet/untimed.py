"""Explicit-state untimed analyses: reachability, boundedness, deadlocks, completion."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .net import Marking, Net, postset, preset
from .report import FAIL, PASS, UNKNOWN, TraceStep, Verdict


@dataclass(frozen=True)
class ExploreLimits:
    max_states: int = 1_000_000
    max_token_bound: int = 16

    def __post_init__(self):
        if self.max_states < 1 or self.max_token_bound < 1:
            raise ValueError("exploration limits must be >= 1")


@dataclass
class ReachGraph:
    """Breadth-first reachability graph; state 0 is the initial marking."""

    states: list[Marking]
    edges: list[tuple[int, str, int]]
    truncated: bool = False
    expanded: set[int] = field(default_factory=set)
    suspects: list[int] = field(default_factory=list)
    parent: dict[int, tuple[int, str]] = field(default_factory=dict, repr=False)

    @property
    def initial(self) -> Marking:
        return self.states[0]

    @property
    def marking_edges(self) -> list[tuple[Marking, str, Marking]]:
        return [(self.states[a], t, self.states[b]) for a, t, b in self.edges]

    def trace_to(self, index: int) -> list[str]:
        path = []
        while index in self.parent:
            index, t = self.parent[index]
            path.append(t)
        return path[::-1]

    def successors(self, index: int) -> list[tuple[str, int]]:
        return [(t, b) for a, t, b in self.edges if a == index]


def _compile(net: Net):
    places = net.place_ids
    index = {p: i for i, p in enumerate(places)}
    trans = [(t, [index[p] for p in preset(net, t)], [index[p] for p in postset(net, t)])
             for t in net.transition_ids]
    return places, index, trans


def reachability_graph(net: Net, m0, lim: ExploreLimits = ExploreLimits()) -> ReachGraph:
    places, index, trans = _compile(net)
    start = tuple(Marking(m0)[p] for p in places)
    if any(p not in index for p in Marking(m0)):
        raise KeyError(f"initial marking mentions unknown places: {sorted(set(Marking(m0)) - set(index))}")

    seen = {start: 0}
    order = [start]
    edges: list[tuple[int, str, int]] = []
    parent: dict[int, tuple[int, str]] = {}
    expanded: set[int] = set()
    suspects: list[int] = []
    truncated = False
    queue = deque()
    if max(start, default=0) > lim.max_token_bound:
        suspects.append(0)
        truncated = True
    else:
        queue.append(0)

    while queue:
        i = queue.popleft()
        m = order[i]
        expanded.add(i)
        for t, pre, post in trans:
            if any(m[j] < 1 for j in pre):
                continue
            nxt = list(m)
            for j in pre:
                nxt[j] -= 1
            for j in post:
                nxt[j] += 1
            nxt = tuple(nxt)
            k = seen.get(nxt)
            if k is None:
                if len(order) >= lim.max_states:
                    truncated = True
                    expanded.discard(i)
                    queue.clear()
                    break
                k = seen[nxt] = len(order)
                order.append(nxt)
                parent[k] = (i, t)
                if max(nxt, default=0) > lim.max_token_bound:
                    suspects.append(k)
                    truncated = True
                else:
                    queue.append(k)
            edges.append((i, t, k))

    if queue or len(expanded) + len(suspects) < len(order):
        truncated = True
    states = [Marking(zip(places, m)) for m in order]
    return ReachGraph(states, edges, truncated, expanded, suspects, parent)


def _steps(trace: list[str]) -> list[TraceStep]:
    return [TraceStep(t) for t in trace]


def completion_marking(net: Net) -> Marking | None:
    return Marking({net.exit: 1}) if net.exit is not None else None


def check_boundedness(net: Net, m0, k: int = 1, lim: ExploreLimits = ExploreLimits(),
                      graph: ReachGraph | None = None) -> Verdict:
    """k-boundedness; ``k=1`` is the safeness check."""
    g = graph or reachability_graph(net, m0, lim)
    for i, m in enumerate(g.states):
        over = [p for p in m if m[p] > k]
        if over:
            return Verdict("boundedness", FAIL, _steps(g.trace_to(i)),
                           {"k": k, "marking": m.as_dict(), "places": over})
    result = UNKNOWN if g.truncated else PASS
    details = {"k": k, "states": len(g.states)}
    if g.suspects:
        details["unbounded_suspect"] = [g.states[i].as_dict() for i in g.suspects]
    return Verdict("boundedness", result, None, details)


def check_deadlock_freedom(net: Net, m0, lim: ExploreLimits = ExploreLimits(),
                           graph: ReachGraph | None = None) -> Verdict:
    g = graph or reachability_graph(net, m0, lim)
    done = completion_marking(net)
    has_succ = {a for a, _, _ in g.edges}
    for i in sorted(g.expanded):
        if i not in has_succ and g.states[i] != done:
            return Verdict("deadlock_freedom", FAIL, _steps(g.trace_to(i)),
                           {"marking": g.states[i].as_dict()})
    return Verdict("deadlock_freedom", UNKNOWN if g.truncated else PASS, None,
                   {"states": len(g.states)})


def check_proper_completion(net: Net, lim: ExploreLimits = ExploreLimits(),
                            graph: ReachGraph | None = None) -> Verdict:
    """From one token in the entry place: completion is reachable (clause a) and
    every marking marking the exit place is exactly the completion marking (clause b)."""
    if net.entry is None or net.exit is None:
        return Verdict("proper_completion", FAIL, None, {"clause": "a", "reason": "net lacks entry or exit"})
    g = graph or reachability_graph(net, {net.entry: 1}, lim)
    done = completion_marking(net)
    reached = None
    for i, m in enumerate(g.states):
        if m == done:
            reached = i if reached is None else reached
        elif m[net.exit] >= 1:
            return Verdict("proper_completion", FAIL, _steps(g.trace_to(i)),
                           {"clause": "b", "marking": m.as_dict()})
    if reached is None:
        if g.truncated:
            return Verdict("proper_completion", UNKNOWN, None, {"clause": "a"})
        return Verdict("proper_completion", FAIL, None,
                       {"clause": "a", "reason": "completion marking unreachable"})
    if g.truncated:
        return Verdict("proper_completion", UNKNOWN, _steps(g.trace_to(reached)), {"clause": "b"})
    return Verdict("proper_completion", PASS, _steps(g.trace_to(reached)), {"states": len(g.states)})


def check_wellformed_workflow(net: Net) -> Verdict:
    """Graph-level workflow-net shape: unique source entry, unique sink exit,
    every node on some entry-to-exit path."""
    problems = []
    entries = [p.id for p in net.places if p.entry]
    exits = [p.id for p in net.places if p.exit]
    if len(entries) != 1:
        problems.append({"code": "NO_UNIQUE_ENTRY", "node": ",".join(entries)})
    if len(exits) != 1:
        problems.append({"code": "NO_UNIQUE_EXIT", "node": ",".join(exits)})
    if problems:
        return Verdict("wellformed_workflow", FAIL, None, {"violations": problems})
    entry, exit_ = entries[0], exits[0]
    if preset(net, entry):
        problems.append({"code": "EMPTY_PRESET_VIOLATION", "node": entry})
    if postset(net, exit_):
        problems.append({"code": "EMPTY_POSTSET_VIOLATION", "node": exit_})

    def closure(start, step):
        seen, todo = {start}, [start]
        while todo:
            for nxt in step(net, todo.pop()):
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
        return seen

    on_path = closure(entry, postset) & closure(exit_, preset)
    for node in sorted([*net.place_ids, *net.transition_ids]):
        if node not in on_path:
            problems.append({"code": "NOT_ON_PATH", "node": node})
    return Verdict("wellformed_workflow", FAIL if problems else PASS, None,
                   {"violations": problems} if problems else {})
