"""Integer-time semantics and schedulability analysis.

Firing rule, for a transition ``t`` and one chosen token per input place
(token ``i`` in place ``p_i``, arrived at ``a_i``)::

    ready     e = max_i (a_i + lo(p_i))
    window    e + lo(t) <= tau <= min(e + hi(t), min_i (a_i + hi(p_i)))

Firing at ``tau`` consumes the inputs at ``tau`` and produces output tokens
arriving at ``tau + TD(t)``. Time never passes the latest firing time of a
fireable transition (strong urgency), and firing times along a run never
decrease.

The state graph stores token ages relative to the instant of the last firing
rather than absolute times, so it stays finite; ages beyond the largest
timing constant that can still influence a firing are saturated. Edges carry
the range of delays that lead to the same successor, and completion bounds
are shortest/longest path lengths to the completion marking.
"""

from __future__ import annotations

import heapq
import itertools
from collections import defaultdict, deque
from dataclasses import dataclass, field

import networkx as nx

from .net import INF, Net, TimeInterval, postset, preset
from .report import TraceStep
from .untimed import ExploreLimits

EMPTY_WINDOW = "EMPTY_WINDOW"
URGENCY = "URGENCY"
TD_OVERSHOOT = "TD_OVERSHOOT"


@dataclass(frozen=True, order=True)
class TimedToken:
    place: str
    arrived: int


@dataclass(frozen=True)
class TimedState:
    """Absolute-time state. Tokens still being produced by a firing with a
    duration carry an arrival time later than ``now``."""

    now: int
    tokens: tuple[TimedToken, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(sorted(self.tokens)))

    def marking(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for tok in self.tokens:
            out[tok.place] = out.get(tok.place, 0) + 1
        return out


@dataclass(frozen=True)
class TimingViolation:
    code: str
    transition: str | None
    place: str | None
    reason: str
    witness: tuple[TraceStep, ...] = ()

    def to_json(self) -> dict:
        return {"code": self.code, "transition": self.transition, "place": self.place,
                "reason": self.reason, "witness": [s.to_json() for s in self.witness]}


@dataclass
class ScheduleReport:
    schedulable: str
    completion: TimeInterval | None
    violations: list[TimingViolation] = field(default_factory=list)
    min_witness: list[TraceStep] | None = None
    max_witness: list[TraceStep] | None = None
    truncated: bool = False
    states: int = 0


class _Compiled:
    def __init__(self, net: Net):
        self.net = net
        self.place_window = {p.id: (p.tc.lo, p.tc.hi) for p in net.places}
        self.consumers = {p: bool(postset(net, p)) for p in net.place_ids}
        self.trans = []
        for t in net.transitions:
            self.trans.append((t.id, preset(net, t.id), postset(net, t.id), t.tc.lo, t.tc.hi, t.duration))
        finite = lambda xs: max([x for x in xs if x != INF], default=0)
        max_place = finite(v for w in self.place_window.values() for v in w)
        max_trans = finite(v for t in self.trans for v in (t[3], t[4]))
        # ages above this value no longer influence any comparison
        self.horizon = max_place + max_trans
        self.saturated = self.horizon + 1
        self.duration = {t[0]: t[5] for t in self.trans}


def _by_place(tokens) -> dict[str, list[int]]:
    groups: dict[str, list[int]] = defaultdict(list)
    for place, age in tokens:
        groups[place].append(age)
    for ages in groups.values():
        ages.sort(reverse=True)
    return groups


def _window(c: _Compiled, t, choice):
    """(start, upper) of transition t for the chosen (place, age) tokens, relative to now."""
    _, inputs, _, lo, hi, _ = t
    e = max((-age + c.place_window[p][0] for p, age in choice), default=0)
    upper = min([e + hi] + [-age + c.place_window[p][1] for p, age in choice])
    return max(0, e + lo), upper


def _analyse(c: _Compiled, tokens):
    """Fireable transitions with their chosen tokens and windows, plus the
    token-enabled transitions that cannot fire at all."""
    groups = _by_place(tokens)
    fireable, stuck = [], []
    for t in c.trans:
        inputs = t[1]
        if any(p not in groups for p in inputs):
            continue
        options = [[(p, age) for age in dict.fromkeys(groups[p])] for p in inputs]
        first = None
        for choice in itertools.product(*options):
            start, upper = _window(c, t, choice)
            if first is None:
                first = (choice, start, upper)
            if start <= upper:
                fireable.append((t, choice, start, upper))
                break
        else:
            stuck.append((t, first))
    return fireable, stuck


def _successor(c: _Compiled, tokens, t, choice, delay, cap):
    rest = list(tokens)
    for tok in choice:
        rest.remove(tok)
    shifted = [(p, age + delay if cap is None else min(age + delay, cap)) for p, age in rest]
    shifted += [(p, -t[5]) for p in t[2]]
    return tuple(sorted(shifted))


def _expand(c: _Compiled, tokens, cap):
    """Yield (transition id, min delay, max delay, successor) edges and the stuck list."""
    fireable, stuck = _analyse(c, tokens)
    deadline = min((f[3] for f in fireable), default=INF)
    pending = max((-age for _, age in tokens), default=0)
    settle = cap + max(0, pending) if cap is not None else None
    edges = []
    for t, choice, start, upper in fireable:
        last = min(upper, deadline)
        if start > last:
            continue
        explicit_end = last if settle is None else min(last, settle - 1)
        if explicit_end == INF:
            raise ValueError(f"transition {t[0]!r} has an unbounded firing window")
        for delay in range(start, int(explicit_end) + 1):
            edges.append((t[0], delay, delay, _successor(c, tokens, t, choice, delay, cap)))
        if settle is not None and last >= settle:
            lo = max(start, settle)
            edges.append((t[0], lo, last, _successor(c, tokens, t, choice, lo, cap)))
    return edges, stuck


# ---------------------------------------------------------------------------
# absolute-time successor relation


def timed_successors(net: Net, s: TimedState, max_delay: int | None = None):
    """All ``(transition, firing time, successor)`` triples from an absolute state.

    ``max_delay`` bounds the enumeration when a firing window is unbounded.
    """
    c = _Compiled(net)
    rel = tuple(sorted((tok.place, s.now - tok.arrived) for tok in s.tokens))
    fireable, _ = _analyse(c, rel)
    deadline = min((f[3] for f in fireable), default=INF)
    out = []
    for t, choice, start, upper in fireable:
        last = min(upper, deadline)
        if last == INF:
            if max_delay is None:
                raise ValueError(f"unbounded firing window for {t[0]!r}; pass max_delay")
            last = max(start, max_delay)
        for delay in range(start, int(last) + 1):
            succ = _successor(c, rel, t, choice, delay, None)
            tau = s.now + delay
            out.append((t[0], tau, TimedState(tau, tuple(TimedToken(p, tau - age) for p, age in succ))))
    return out


# ---------------------------------------------------------------------------
# state graph


@dataclass
class TimedGraph:
    """Relative-time state graph. States are sorted ``(place, age)`` tuples;
    edges are ``(src, transition, min delay, max delay, dst)``."""

    states: list[tuple]
    edges: list[tuple[int, str, int, int | float, int]]
    exit: str | None
    truncated: bool = False
    suspects: list[int] = field(default_factory=list)
    stuck: dict[int, list] = field(default_factory=dict, repr=False)
    parent: dict[int, tuple[int, int]] = field(default_factory=dict, repr=False)

    def marking(self, i: int) -> dict[str, int]:
        out: dict[str, int] = {}
        for p, _ in self.states[i]:
            out[p] = out.get(p, 0) + 1
        return out

    def accepting(self) -> list[int]:
        return [i for i, s in enumerate(self.states) if len(s) == 1 and s[0][0] == self.exit]

    def completion_offset(self, i: int) -> int:
        """Delay between the last firing and the moment the exit token lands."""
        return max(0, -self.states[i][0][1])

    def trace_to(self, i: int) -> list[TraceStep]:
        """Shortest (fewest firings) run to state i, each firing at its earliest time."""
        path = []
        while i in self.parent:
            i, e = self.parent[i]
            path.append(e)
        return _timed_trace(self, path[::-1])


def _timed_trace(g: TimedGraph, edge_ids, pick_max=False) -> list[TraceStep]:
    now, steps = 0, []
    for e in edge_ids:
        _, t, lo, hi, _ = g.edges[e]
        now += hi if pick_max else lo
        steps.append(TraceStep(t, now))
    return steps


def timed_state_graph(net: Net, lim: ExploreLimits = ExploreLimits(), initial=None) -> TimedGraph:
    """Breadth-first exploration from one token in the entry place at time 0
    (or from ``initial``, a place -> count mapping, all tokens arrived at 0)."""
    c = _Compiled(net)
    if initial is None:
        initial = {net.entry: 1}
    start = tuple(sorted((p, 0) for p, n in initial.items() for _ in range(n)))
    index = {start: 0}
    states, edges = [start], []
    parent: dict[int, tuple[int, int]] = {}
    stuck: dict[int, list] = {}
    suspects = []
    truncated = False

    def over_cap(tokens):
        counts = defaultdict(int)
        for p, _ in tokens:
            counts[p] += 1
        return any(n > lim.max_token_bound for n in counts.values())

    queue = deque()
    if over_cap(start):
        suspects.append(0)
        truncated = True
    else:
        queue.append(0)
    while queue:
        i = queue.popleft()
        succ, blocked = _expand(c, states[i], c.saturated)
        if blocked:
            stuck[i] = blocked
        for t, lo, hi, nxt in succ:
            j = index.get(nxt)
            if j is None:
                if len(states) >= lim.max_states:
                    truncated = True
                    queue.clear()
                    break
                j = index[nxt] = len(states)
                states.append(nxt)
                parent[j] = (i, len(edges))
                if over_cap(nxt):
                    suspects.append(j)
                    truncated = True
                else:
                    queue.append(j)
            edges.append((i, t, lo, hi, j))
    return TimedGraph(states, edges, net.exit, truncated, suspects, stuck, parent)


# ---------------------------------------------------------------------------
# completion bounds


def _shortest(g: TimedGraph):
    dist = {0: 0}
    via: dict[int, int] = {}
    out = defaultdict(list)
    for k, (a, _, lo, _, b) in enumerate(g.edges):
        out[a].append((lo, b, k))
    heap = [(0, 0)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for w, v, k in out[u]:
            if d + w < dist.get(v, INF):
                dist[v] = d + w
                via[v] = k
                heapq.heappush(heap, (d + w, v))
    return dist, via


def _path(g: TimedGraph, via, target):
    path = []
    while target in via:
        k = via[target]
        path.append(k)
        target = g.edges[k][0]
    return path[::-1]


def _longest(g: TimedGraph, targets):
    """Longest completion over runs ending in ``targets``; INF on positive cycles."""
    back = defaultdict(list)
    for a, _, _, _, b in g.edges:
        back[b].append(a)
    useful = set(targets)
    todo = list(targets)
    while todo:
        for a in back[todo.pop()]:
            if a not in useful:
                useful.add(a)
                todo.append(a)
    if 0 not in useful:
        return None, None
    graph = nx.DiGraph()
    graph.add_nodes_from(useful)
    best: dict[tuple[int, int], int] = {}
    for k, (a, _, _, hi, b) in enumerate(g.edges):
        if a in useful and b in useful:
            if hi == INF:
                return INF, None
            if (a, b) not in best or hi > g.edges[best[a, b]][3]:
                best[a, b] = k
            graph.add_edge(a, b)
    dag = nx.condensation(graph)
    comp = dag.graph["mapping"]
    for (a, b), k in best.items():
        if comp[a] == comp[b] and g.edges[k][3] > 0:
            return INF, None

    length = {comp[0]: 0}
    entered: dict[int, tuple[int, int]] = {}  # component -> (edge, arrival node)
    for cnode in nx.topological_sort(dag):
        if cnode not in length:
            continue
        for a in dag.nodes[cnode]["members"]:
            for b in graph.successors(a):
                cb = comp[b]
                if cb == cnode:
                    continue
                k = best[a, b]
                cand = length[cnode] + g.edges[k][3]
                if cand > length.get(cb, -1):
                    length[cb] = cand
                    entered[cb] = (k, b)
    scored = [(length[comp[s]] + g.completion_offset(s), s) for s in targets if comp[s] in length]
    value, target = max(scored, key=lambda x: (x[0], -x[1]))

    def inner_path(src, dst):
        # zero-weight path inside one strongly connected component
        if src == dst:
            return []
        prev = {src: None}
        q = deque([src])
        while q:
            u = q.popleft()
            for v in graph.successors(u):
                if comp[v] == comp[src] and v not in prev:
                    prev[v] = u
                    q.append(v)
        hops, v = [], dst
        while prev[v] is not None:
            hops.append(best[prev[v], v])
            v = prev[v]
        return hops[::-1]

    path, node = [], target
    while True:
        cnode = comp[node]
        if cnode in entered:
            k, arrival = entered[cnode]
            path = inner_path(arrival, node) + path
            path.insert(0, k)
            node = g.edges[k][0]
        else:
            path = inner_path(0, node) + path
            break
    return value, path


def _binding_place(c: _Compiled, choice, start) -> str | None:
    """The input place whose window closes first, if it closes before ``start``."""
    limits = [(-age + c.place_window[p][1], p) for p, age in choice]
    return min(limits)[1] if limits and min(limits)[0] < start else None


def _violations(c: _Compiled, g: TimedGraph) -> list[tuple[str, str | None, str | None, str, int, tuple]]:
    found = {}
    for i, state in enumerate(g.states):
        for t, (choice, start, upper) in g.stuck.get(i, []):
            key = (EMPTY_WINDOW, t[0])
            if key not in found:
                found[key] = (EMPTY_WINDOW, t[0], _binding_place(c, choice, start),
                              f"firing window [{start},{upper}] relative to the last firing is empty", i, choice)
        for p, age in state:
            if c.consumers[p] and age > c.place_window[p][1]:
                key = (URGENCY, p)
                if key not in found:
                    found[key] = (URGENCY, None, p, "token outlived its consumable window unconsumed", i, ())
    return sorted(found.values(), key=lambda v: (v[4], v[0], v[1] or "", v[2] or ""))


def check_schedulability(net: Net, deadline: int | None = None,
                         lim: ExploreLimits = ExploreLimits(), graph: TimedGraph | None = None) -> ScheduleReport:
    c = _Compiled(net)
    g = graph or timed_state_graph(net, lim)
    violations = [TimingViolation(code, t, p, reason, tuple(g.trace_to(i)))
                  for code, t, p, reason, i, _ in _violations(c, g)]
    targets = g.accepting()
    report = ScheduleReport("no", None, violations, truncated=g.truncated, states=len(g.states))
    if not targets:
        report.schedulable = "unknown" if g.truncated else "no"
        return report
    dist, via = _shortest(g)
    lo, lo_target = min((dist[s] + g.completion_offset(s), s) for s in targets)
    hi, hi_path = _longest(g, targets)
    report.completion = TimeInterval(int(lo), hi if hi == INF else int(hi))
    report.min_witness = _timed_trace(g, _path(g, via, lo_target))
    if hi_path is not None:
        report.max_witness = _timed_trace(g, hi_path, pick_max=True)
    if deadline is None or lo <= deadline:
        report.schedulable = "yes"
    else:
        report.schedulable = "unknown" if g.truncated else "no"
    return report


def _replay(c: _Compiled, trace: list[TraceStep]):
    """Re-run a witness in absolute time, tracking which firing produced each token."""
    now = 0
    tokens = [(c.net.entry, 0, None)]
    by_id = {t[0]: t for t in c.trans}
    for step in trace:
        t = by_id[step.transition]
        rel = tuple(sorted((p, now - a) for p, a, _ in tokens))
        fireable, _ = _analyse(c, rel)
        choice = next(ch for tt, ch, _, _ in fireable if tt[0] == t[0])
        for p, age in choice:
            match = min((tok for tok in tokens if tok[0] == p and now - tok[1] == age),
                        key=lambda tok: str(tok[2]))
            tokens.remove(match)
        now = step.time
        tokens += [(p, now + t[5], t[0]) for p in t[2]]
    return now, tokens


def check_time_consistency(net: Net, lim: ExploreLimits = ExploreLimits(),
                           graph: TimedGraph | None = None) -> list[TimingViolation]:
    """Per-transition consistency of firing windows against the time actually
    available; empty list means consistent.

    An empty window caused by a firing duration (the window would be open if the
    producing transition took no time) is reported as ``TD_OVERSHOOT`` naming the
    producing transition and the place whose window it overran.
    """
    c = _Compiled(net)
    g = graph or timed_state_graph(net, lim)
    out = []
    for code, t_id, p_id, reason, i, choice in _violations(c, g):
        witness = tuple(g.trace_to(i))
        if code != EMPTY_WINDOW:
            out.append(TimingViolation(code, t_id, p_id, reason, witness))
            continue
        t = next(x for x in c.trans if x[0] == t_id)
        now, tokens = _replay(c, list(witness))
        _, stuck = _analyse(c, tuple(sorted((p, now - a) for p, a, _ in tokens)))
        choice, start, _ = next(first for tt, first in stuck if tt[0] == t_id)
        binding = _binding_place(c, choice, start)
        latest = None
        for p, age in choice:
            ready = -age + c.place_window[p][0]
            if latest is None or ready > latest[0]:
                latest = (ready, p, age)
        producer = None
        if latest is not None:
            _, lp, lage = latest
            cands = sorted((str(tok[2]), tok[2]) for tok in tokens if tok[0] == lp and now - tok[1] == lage)
            producer = cands[0][1] if cands else None
        if producer is not None and c.duration[producer] > 0:
            td = c.duration[producer]
            relieved = tuple((p, age + td) if (p, age) == latest[1:] else (p, age) for p, age in choice)
            start, upper = _window(c, t, relieved)
            if start <= upper:
                out.append(TimingViolation(
                    TD_OVERSHOOT, producer, binding,
                    f"duration {td} of {producer!r} closes the window of {binding!r} before {t_id!r} is ready",
                    witness))
                continue
        out.append(TimingViolation(EMPTY_WINDOW, t_id, binding, reason, witness))
    return out
