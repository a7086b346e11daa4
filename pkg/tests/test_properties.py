import dataclasses
import random

from hypothesis import HealthCheck, given, settings, strategies as st

from hpnet.dsl import ParseError, parse_net, parse_pattern, serialize_net
from hpnet.hierarchy import HierarchicalNet
from hpnet.net import INF, Marking, TimeInterval, enabled_transitions, fire, postset, preset, validate_structure
from hpnet.patterns import Loop, interval_add, interval_max, teb_eval
from hpnet.timed import check_schedulability, timed_state_graph
from hpnet.untimed import ExploreLimits, check_deadlock_freedom, reachability_graph

import netgen

ZERO = TimeInterval(0, 0)
SMALL = ExploreLimits(max_states=20_000, max_token_bound=4)
seeds = st.integers(min_value=0, max_value=2**32 - 1)


@st.composite
def intervals(draw, top=20):
    lo = draw(st.integers(0, top))
    hi = draw(st.one_of(st.integers(lo, top), st.just(INF)))
    return TimeInterval(lo, hi)


class TestAlgebra:
    @given(intervals(), intervals(), intervals())
    def test_add_laws(self, a, b, c):
        assert interval_add(a, b) == interval_add(b, a)
        assert interval_add(interval_add(a, b), c) == interval_add(a, interval_add(b, c))
        assert interval_add(a, ZERO) == a

    @given(intervals(), intervals(), intervals())
    def test_max_laws(self, a, b, c):
        assert interval_max(a, b) == interval_max(b, a)
        assert interval_max(interval_max(a, b), c) == interval_max(a, interval_max(b, c))
        assert interval_max(a, a) == a and interval_max(a, ZERO) == a

    @given(seeds, st.integers(1, 5))
    def test_loop_scaling(self, seed, k):
        e = netgen.pattern(random.Random(seed), depth=3, allow_cond=True)
        base = teb_eval(e)
        assert teb_eval(Loop(e, 1)) == base
        looped = teb_eval(Loop(e, k))
        assert looped.lo == k * base.lo
        assert looped.hi == (INF if base.hi == INF else k * base.hi)
        assert base.lo <= base.hi


class TestTokenGame:
    @given(seeds)
    def test_firing_changes_count_by_arc_balance(self, seed):
        net, m0 = netgen.untimed_net(random.Random(seed))
        m = Marking(m0)
        for _ in range(5):
            enabled = enabled_transitions(net, m)
            assert set(enabled) <= set(net.transition_ids)
            if not enabled:
                break
            t = enabled[seed % len(enabled)]
            nxt = fire(net, m, t)
            assert nxt.total() - m.total() == len(postset(net, t)) - len(preset(net, t))
            assert all(n >= 0 for n in nxt.values())
            m = nxt

    @given(seeds)
    def test_validation_is_pure(self, seed):
        net, _ = netgen.untimed_net(random.Random(seed))
        assert validate_structure(net) == validate_structure(net)


class TestUntimed:
    @given(seeds)
    @settings(max_examples=60)
    def test_deadlock_witness_is_minimal(self, seed):
        net, m0 = netgen.untimed_net(random.Random(seed))
        v = check_deadlock_freedom(net, m0, SMALL)
        if v.result != "fail":
            return
        done = Marking({net.exit: 1})

        def dead_within(m, depth):
            enabled = enabled_transitions(net, m)
            if not enabled and m != done:
                return True
            return depth > 0 and any(dead_within(fire(net, m, t), depth - 1) for t in enabled)

        n = len(v.witness)
        assert dead_within(Marking(m0), n)
        assert n == 0 or not dead_within(Marking(m0), n - 1)

    @given(seeds, st.integers(1, 30))
    @settings(max_examples=60)
    def test_more_states_never_flip_definite_verdicts(self, seed, cap):
        net, m0 = netgen.untimed_net(random.Random(seed))
        small = check_deadlock_freedom(net, m0, ExploreLimits(max_states=cap, max_token_bound=4))
        big = check_deadlock_freedom(net, m0, SMALL)
        if small.result != "unknown":
            assert small.result == big.result

    @given(seeds)
    @settings(max_examples=40)
    def test_graph_is_deterministic(self, seed):
        net, m0 = netgen.untimed_net(random.Random(seed))
        a, b = reachability_graph(net, m0, SMALL), reachability_graph(net, m0, SMALL)
        assert (a.states, a.edges, a.truncated) == (b.states, b.edges, b.truncated)


class TestTimed:
    @given(seeds)
    @settings(max_examples=60)
    def test_untimed_defaults_match_untimed_reachability(self, seed):
        net, m0 = netgen.untimed_net(random.Random(seed))
        g = timed_state_graph(net, SMALL, initial=m0)
        u = reachability_graph(net, m0, SMALL)
        if g.truncated or u.truncated:
            return
        timed = {frozenset(g.marking(i).items()) for i in range(len(g.states))}
        assert timed == {frozenset(m.as_dict().items()) for m in u.states}

    @given(seeds, st.data())
    @settings(max_examples=60, suppress_health_check=[HealthCheck.too_slow])
    def test_widening_transition_windows_keeps_schedulability(self, seed, data):
        net = netgen.timed_workflow_net(random.Random(seed))
        before = check_schedulability(net, lim=SMALL)
        if before.schedulable != "yes":
            return
        t = data.draw(st.sampled_from(net.transitions))
        w = t.tc
        wider = TimeInterval(max(0, w.lo - data.draw(st.integers(0, 3))),
                             data.draw(st.sampled_from([w.hi, w.hi + 2, INF])) if w.hi != INF else INF)
        widened = net.replace(transitions=[dataclasses.replace(x, window=wider) if x.id == t.id else x
                                           for x in net.transitions])
        after = check_schedulability(widened, lim=SMALL)
        assert after.schedulable in ("yes", "unknown")
        if after.schedulable == "yes":
            assert after.completion.lo <= before.completion.lo
            assert after.completion.hi >= before.completion.hi

    @given(seeds, st.data())
    @settings(max_examples=60, suppress_health_check=[HealthCheck.too_slow])
    def test_raising_place_upper_bound_keeps_schedulability(self, seed, data):
        net = netgen.timed_workflow_net(random.Random(seed))
        before = check_schedulability(net, lim=SMALL)
        if before.schedulable != "yes":
            return
        p = data.draw(st.sampled_from(net.places))
        wider = TimeInterval(p.tc.lo, data.draw(st.sampled_from([p.tc.hi + 1, INF])))
        widened = net.replace(places=[dataclasses.replace(x, window=wider) if x.id == p.id else x
                                      for x in net.places])
        assert check_schedulability(widened, lim=SMALL).schedulable in ("yes", "unknown")

    @given(seeds)
    @settings(max_examples=30)
    def test_reports_are_deterministic(self, seed):
        net = netgen.timed_workflow_net(random.Random(seed))
        a, b = check_schedulability(net, lim=SMALL), check_schedulability(net, lim=SMALL)
        assert a == b


class TestDSL:
    @given(st.text(alphabet=st.sampled_from(list("net{}place trans arc->;[],0123456789inf\"#\nabc_")), max_size=80))
    def test_parse_is_total(self, text):
        try:
            parse_net(text)
        except ParseError as err:
            assert err.diagnostics
            lines = text.split("\n")
            for d in err.diagnostics:
                assert d.severity == "error"
                assert 1 <= d.line <= len(lines)
                assert 1 <= d.column <= len(lines[d.line - 1]) + 1

    @given(st.text(max_size=40))
    def test_pattern_parse_is_total(self, text):
        try:
            parse_pattern(text)
        except ParseError as err:
            assert err.diagnostics

    @given(seeds)
    @settings(max_examples=100)
    def test_round_trip(self, seed):
        rng = random.Random(seed)
        sub = netgen.named_net(rng, "Sub")
        h = HierarchicalNet(netgen.named_net(rng, "Main", refine_targets=("Sub",)), {"Sub": sub})
        text = serialize_net(h)
        assert parse_net(text) == h
        assert serialize_net(parse_net(text)) == text
