"""Small net builders shared by the tests."""

from hpnet.net import Arc, Net, Place, TimeInterval, Transition


def chain(*specs, name="Chain"):
    """p0 -> t1 -> p1 -> ... ; ``specs`` are (transition kwargs) per step."""
    places = [Place("p0", entry=True)]
    transitions, arcs = [], []
    for i, kw in enumerate(specs, start=1):
        transitions.append(Transition(f"t{i}", **kw))
        places.append(Place(f"p{i}", exit=i == len(specs)))
        arcs += [Arc(f"p{i - 1}", f"t{i}"), Arc(f"t{i}", f"p{i}")]
    return Net(name, tuple(places), tuple(transitions), tuple(arcs))


def build(places, transitions, arcs, name="N"):
    """Nets from compact specs: places as ids (``>id`` entry, ``id<`` exit) or Place objects."""
    ps = []
    for p in places:
        if isinstance(p, Place):
            ps.append(p)
        else:
            ps.append(Place(p.strip("><"), entry=p.startswith(">"), exit=p.endswith("<")))
    ts = [t if isinstance(t, Transition) else Transition(t) for t in transitions]
    return Net(name, tuple(ps), tuple(ts), tuple(Arc(*a.split("->")) for a in arcs))


def iv(lo, hi):
    return TimeInterval(lo, hi)
