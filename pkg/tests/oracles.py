"""Independent brute-force enumerators used as test oracles.

They share no code with the engines beyond the net data model: markings are
plain dicts, exploration is depth-first, and timed runs are enumerated in
absolute time without any age saturation.
"""

from __future__ import annotations

import itertools
import math


def _pre(net, node):
    return sorted(a.source for a in net.arcs if a.target == node)


def _post(net, node):
    return sorted(a.target for a in net.arcs if a.source == node)


def _key(m):
    return tuple(sorted((p, n) for p, n in m.items() if n))


def untimed_enumerate(net, m0, cap):
    """All markings reachable from m0, expanding only those with every count <= cap.

    Returns (markings, expanded, dead, capped) where ``dead`` holds the expanded
    markings without any enabled transition.
    """
    trans = [(t.id, _pre(net, t.id), _post(net, t.id)) for t in net.transitions]
    start = _key(dict(m0))
    seen = {start}
    expanded, dead = set(), set()
    capped = False
    stack = [start]
    while stack:
        m = stack.pop()
        counts = dict(m)
        if any(n > cap for n in counts.values()):
            capped = True
            continue
        expanded.add(m)
        fired = False
        for _, pre, post in trans:
            if all(counts.get(p, 0) >= 1 for p in pre):
                fired = True
                nxt = dict(counts)
                for p in pre:
                    nxt[p] -= 1
                for p in post:
                    nxt[p] = nxt.get(p, 0) + 1
                k = _key(nxt)
                if k not in seen:
                    seen.add(k)
                    stack.append(k)
        if not fired:
            dead.add(m)
    return seen, expanded, dead, capped


def untimed_verdicts(net, m0, cap):
    """(boundedness k=1, deadlock freedom from m0, proper completion) as pass/fail/unknown."""
    seen, _, dead, capped = untimed_enumerate(net, m0, cap)
    done = ((net.exit, 1),) if net.exit else None

    if any(n > 1 for m in seen for _, n in m):
        bounded = "fail"
    else:
        bounded = "unknown" if capped else "pass"

    if any(m != done for m in dead):
        deadlock = "fail"
    else:
        deadlock = "unknown" if capped else "pass"

    seen, _, _, capped = untimed_enumerate(net, {net.entry: 1}, cap)
    reached = done in seen
    residual = any(dict(m).get(net.exit, 0) >= 1 and m != done for m in seen)
    if residual:
        proper = "fail"
    elif not reached:
        proper = "unknown" if capped else "fail"
    else:
        proper = "unknown" if capped else "pass"
    return bounded, deadlock, proper


def _windows(net):
    place = {p.id: (p.tc.lo, p.tc.hi) for p in net.places}
    trans = {t.id: (t.tc.lo, t.tc.hi, t.duration) for t in net.transitions}
    return place, trans


def _firing(place, now, lo, hi, picked):
    ready = max([arr + place[p][0] for p, arr in picked], default=now)
    return ready + lo, min([ready + hi] + [arr + place[p][1] for p, arr in picked])


def timed_runs(net, horizon):
    """Enumerate every timed run from one entry token at time 0.

    Yields the completion time of each run ending in the completion marking.
    Firings later than ``horizon`` are not explored; ``horizon`` must exceed
    every reachable firing time for the result to be complete (callers use
    acyclic nets and a horizon derived from the sum of all constants).
    """
    place, trans = _windows(net)
    ins = {t: _pre(net, t) for t in trans}
    outs = {t: _post(net, t) for t in trans}
    results = []
    overflow = False

    def options(now, tokens):
        """Fireable (transition, picked tokens, earliest, latest) under the oldest-first choice."""
        found = []
        for t in sorted(trans):
            lo, hi, _ = trans[t]
            per_place = []
            for p in ins[t]:
                arrivals = sorted({arr for q, arr in tokens if q == p})
                if not arrivals:
                    break
                per_place.append([(p, arr) for arr in arrivals])
            else:
                for picked in itertools.product(*per_place):
                    earliest, upper = _firing(place, now, lo, hi, picked)
                    start = max(now, earliest)
                    if start <= upper:
                        found.append((t, picked, start, upper))
                        break
        return found

    def walk(now, tokens):
        nonlocal overflow
        tokens = sorted(tokens)
        if len(tokens) == 1 and tokens[0][0] == net.exit:
            results.append(max(now, tokens[0][1]))
        found = options(now, tokens)
        if not found:
            return
        urgent = min(f[3] for f in found)
        for t, picked, start, upper in found:
            last = min(upper, urgent)
            if last == math.inf or last > horizon:
                overflow = True
                last = horizon
            for tau in range(start, int(last) + 1):
                rest = list(tokens)
                for tok in picked:
                    rest.remove(tok)
                rest += [(p, tau + trans[t][2]) for p in outs[t]]
                walk(tau, rest)

    walk(0, [(net.entry, 0)])
    return results, overflow


def timed_horizon(net):
    """Sum of every finite constant in the net, plus one."""
    total = 0
    for p in net.places:
        total += p.tc.lo + (0 if p.tc.hi == math.inf else p.tc.hi)
    for t in net.transitions:
        total += t.tc.lo + (0 if t.tc.hi == math.inf else t.tc.hi) + t.duration
    return total + 1


def timed_completion(net):
    """(min, max) completion time over all accepting runs, or None if there is none."""
    horizon = timed_horizon(net)
    times, overflow = timed_runs(net, horizon)
    while overflow:
        # some window was cut short; only happens when a transition fires repeatedly
        horizon *= 2
        if horizon > 10_000:
            raise ValueError("firing windows are unbounded for this net")
        times, overflow = timed_runs(net, horizon)
    if not times:
        return None
    return min(times), max(times)


def firing_sequences(net, m0=None):
    """Every firing sequence (prefix-closed) of an untimed net that terminates."""
    m0 = dict(m0 or {net.entry: 1})
    trans = [(t.id, _pre(net, t.id), _post(net, t.id)) for t in net.transitions]
    out = set()

    def walk(counts, seq):
        out.add(tuple(seq))
        for t, pre, post in trans:
            if all(counts.get(p, 0) >= 1 for p in pre):
                nxt = dict(counts)
                for p in pre:
                    nxt[p] -= 1
                for p in post:
                    nxt[p] = nxt.get(p, 0) + 1
                walk(nxt, seq + [t])

    walk(m0, [])
    return out
