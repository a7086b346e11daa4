"""Hierarchical nets: refinement bindings, design-requirement checks, flattening.

A refinable transition stands for a whole subnet. Flattening substitutes the
subnet for the transition, gluing it in with two fresh silent transitions::

    pre(t) -> t@in -> t.<entry> ... t.<exit> -> t@out -> post(t)
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

from .net import Arc, Net, Place, Transition, postset, preset
from .report import FAIL, PASS, Verdict
from .untimed import check_wellformed_workflow

MAX_DEPTH = 32


class HierarchyError(ValueError):
    def __init__(self, code: str, message: str, path: list[str] | None = None):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.path = path or []


class HierarchyWarning(UserWarning):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class HierarchicalNet:
    root: Net
    subnets: dict[str, Net] = field(default_factory=dict)

    @property
    def nets(self) -> dict[str, Net]:
        return {self.root.name: self.root, **self.subnets}

    @property
    def bindings(self) -> dict[tuple[str, str], str]:
        """``(owner net, transition id) -> subnet name`` for every bound transition."""
        return {(name, t.id): t.refine
                for name, net in self.nets.items()
                for t in net.transitions if t.refine is not None}

    def declared_pre(self, owner: str, t: str) -> frozenset[str]:
        return self.nets[owner].transition_map[t].pre_labels

    def declared_post(self, owner: str, t: str) -> frozenset[str]:
        return self.nets[owner].transition_map[t].post_labels

    def find_transition(self, t: str, owner: str | None = None) -> str:
        """Name of the net declaring transition ``t``."""
        if owner is not None:
            if owner not in self.nets or t not in self.nets[owner].transition_map:
                raise HierarchyError("UNKNOWN_TRANSITION", f"{t!r} is not a transition of {owner!r}")
            return owner
        owners = [name for name, net in self.nets.items() if t in net.transition_map]
        if not owners:
            raise HierarchyError("UNKNOWN_TRANSITION", f"no net declares transition {t!r}")
        if len(owners) > 1:
            raise HierarchyError("AMBIGUOUS_TRANSITION", f"{t!r} is declared in {owners}; pass owner=")
        return owners[0]


def refinement_cycle(h: HierarchicalNet) -> list[str] | None:
    """A cycle in the net-level refinement graph as a list of net names, or None."""
    graph: dict[str, list[str]] = {name: [] for name in h.nets}
    for (owner, _), target in sorted(h.bindings.items()):
        if target in graph:
            graph[owner].append(target)
    state: dict[str, int] = {}
    stack: list[str] = []

    def visit(node):
        state[node] = 1
        stack.append(node)
        for nxt in graph[node]:
            if state.get(nxt) == 1:
                return stack[stack.index(nxt):] + [nxt]
            if nxt not in state:
                found = visit(nxt)
                if found:
                    return found
        stack.pop()
        state[node] = 2
        return None

    for name in sorted(graph):
        if name not in state:
            found = visit(name)
            if found:
                return found
    return None


def check_hierarchy(h: HierarchicalNet) -> list[HierarchyError]:
    problems = []
    for (owner, t), target in sorted(h.bindings.items()):
        if target not in h.subnets:
            problems.append(HierarchyError("UNKNOWN_SUBNET", f"{owner}.{t} refines unknown net {target!r}"))
            continue
        sub = h.subnets[target]
        if sub.entry is None or sub.exit is None:
            problems.append(HierarchyError("SUBNET_BOUNDARY", f"subnet {target!r} lacks a unique entry and exit"))
    cycle = refinement_cycle(h)
    if cycle:
        problems.append(HierarchyError("REFINEMENT_CYCLE", " -> ".join(cycle), cycle))
    return problems


def attach_refinement(h: HierarchicalNet, t: str, subnet: str, owner: str | None = None) -> HierarchicalNet:
    owner = h.find_transition(t, owner)
    net = h.nets[owner]
    trans = net.transition_map[t]
    if not trans.refinable:
        raise HierarchyError("NOT_REFINABLE", f"transition {t!r} is not refinable")
    if subnet not in h.subnets:
        raise HierarchyError("UNKNOWN_SUBNET", f"no subnet named {subnet!r}")
    new_net = net.replace(transitions=[replace(x, refine=subnet) if x.id == t else x
                                       for x in net.transitions])
    if owner == h.root.name:
        result = HierarchicalNet(new_net, dict(h.subnets))
    else:
        result = HierarchicalNet(h.root, {**h.subnets, owner: new_net})
    cycle = refinement_cycle(result)
    if cycle:
        raise HierarchyError("REFINEMENT_CYCLE", " -> ".join(cycle), cycle)
    return result


def glue_ids(t: str) -> tuple[str, str]:
    return f"{t}@in", f"{t}@out"


def flatten(h: HierarchicalNet, max_depth: int = MAX_DEPTH) -> Net:
    """Substitute every bound transition by a prefixed copy of its subnet, recursively.

    Emits ``HierarchyWarning`` for unbound refinable transitions and for bound
    transitions whose own timing is dropped in favour of the subnet's.
    """
    problems = check_hierarchy(h)
    if problems:
        raise problems[0]
    return _flatten(h, h.root, 0, max_depth)


def _flatten(h: HierarchicalNet, net: Net, depth: int, max_depth: int) -> Net:
    if depth > max_depth:
        raise HierarchyError("DEPTH_EXCEEDED", f"refinement deeper than {max_depth} levels")
    places = list(net.places)
    transitions = []
    arcs = [a for a in net.arcs]
    for t in net.transitions:
        if t.refine is None:
            if t.refinable:
                warnings.warn(HierarchyWarning("UNBOUND_REFINABLE",
                                               f"refinable transition {t.id!r} has no binding"), stacklevel=3)
            transitions.append(t)
            continue
        sub = h.subnets[t.refine]
        shape = check_wellformed_workflow(sub)
        if not shape.ok:
            raise HierarchyError("NOT_WORKFLOW", f"subnet {t.refine!r} bound to {t.id!r} is not a workflow net: "
                                 f"{shape.details.get('violations')}")
        if t.window is not None or t.duration:
            warnings.warn(HierarchyWarning("TIMING_SHADOWED",
                                           f"timing on {t.id!r} is replaced by subnet {t.refine!r}"), stacklevel=3)
        flat_sub = _flatten(h, sub, depth + 1, max_depth)
        prefix = t.id + "."
        glue_in, glue_out = glue_ids(t.id)
        places += [Place(prefix + p.id, window=p.window) for p in flat_sub.places]
        transitions += [replace(x, id=prefix + x.id) for x in flat_sub.transitions]
        transitions += [Transition(glue_in), Transition(glue_out)]
        arcs = [a for a in arcs if t.id not in (a.source, a.target)]
        arcs += [Arc(prefix + a.source, prefix + a.target) for a in flat_sub.arcs]
        arcs += [Arc(p, glue_in) for p in preset(net, t.id)]
        arcs += [Arc(glue_in, prefix + flat_sub.entry), Arc(prefix + flat_sub.exit, glue_out)]
        arcs += [Arc(glue_out, p) for p in postset(net, t.id)]
    ids = [p.id for p in places] + [t.id for t in transitions]
    if len(ids) != len(set(ids)):
        clash = sorted({i for i in ids if ids.count(i) > 1})
        raise HierarchyError("ID_COLLISION", f"flattening {net.name!r} produced duplicate ids {clash}")
    return Net(net.name, tuple(places), tuple(transitions), tuple(arcs))


def abstract_sequence(h: HierarchicalNet, flat_trace: list[str]) -> list[str]:
    """Map a firing sequence of ``flatten(h)`` back onto the root net.

    A bound root transition ``t`` is reported where its exit glue fires; its
    entry glue and all subnet-internal firings are erased.
    """
    bound = {t.id for t in h.root.transitions if t.refine is not None}
    plain = {t.id for t in h.root.transitions if t.refine is None}
    closers = {glue_ids(t)[1]: t for t in bound}
    out = []
    for x in flat_trace:
        if x in plain:
            out.append(x)
        elif x in closers:
            out.append(closers[x])
    return out


def check_condition_alteration(h: HierarchicalNet, t: str, owner: str | None = None) -> Verdict:
    """Precondition of the refined transition must be at least as strong as the
    subnet's first activity, postcondition at most as strong as its last one.

    Predicates are uninterpreted labels, so strength is approximated by label-set
    inclusion: more labels means a stronger condition.
    """
    owner = h.find_transition(t, owner)
    trans = h.nets[owner].transition_map[t]
    if trans.refine is None or trans.refine not in h.subnets:
        raise HierarchyError("UNBOUND_TRANSITION", f"transition {t!r} has no refinement")
    sub = h.subnets[trans.refine]
    firsts = postset(sub, sub.entry)
    lasts = preset(sub, sub.exit)
    first_pre = frozenset().union(*(sub.transition_map[x].pre_labels for x in firsts))
    # every possible last activity must establish the refined postcondition
    last_post = (frozenset.intersection(*(sub.transition_map[x].post_labels for x in lasts))
                 if lasts else frozenset())
    details = {
        "transition": t,
        "subnet": trans.refine,
        "approximation": "label-set inclusion over uninterpreted predicates",
        "declared_pre": sorted(trans.pre_labels),
        "subnet_pre": sorted(first_pre),
        "declared_post": sorted(trans.post_labels),
        "subnet_post": sorted(last_post),
    }
    failures = []
    if not first_pre <= trans.pre_labels:
        failures.append({"clause": "pre", "extra": sorted(first_pre - trans.pre_labels)})
    if not last_post >= trans.post_labels:
        failures.append({"clause": "post", "missing": sorted(trans.post_labels - last_post)})
    if failures:
        details["failures"] = failures
        return Verdict("condition_alteration", FAIL, None, details)
    if not (trans.pre_labels or trans.post_labels or first_pre or last_post):
        details["note"] = "VACUOUS"
    return Verdict("condition_alteration", PASS, None, details)
