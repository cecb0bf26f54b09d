import math
import random
from collections import deque

import pytest
from hypothesis import given, settings, strategies as st

from vanetlab.aodv import (ACTIVE_ROUTE_TIMEOUT, BUFFER_CAPACITY, TTL_SEQUENCE, AodvAgent,
                           DataPacket, Rerr, Rrep, Rreq, RouteEntry, ring_timeout, seq_inc,
                           seq_max, seq_newer)
from vanetlab.harness import static_trace
from vanetlab.netsim import BROADCAST, Engine, EventLog, Scenario, Simulation
from vanetlab.netsim.mac import Frame


class FakeMac:
    def __init__(self):
        self.upper = None
        self.sent = []

    def send(self, frame):
        self.sent.append(frame)
        return True

    def is_pending(self, frame):
        return False

    def purge(self, next_hop):
        return []

    def kinds(self):
        return [type(f.payload).__name__ for f in self.sent]


def agent(node=0, now=0.0):
    eng = Engine(1000.0, seed=1)
    eng.now = now
    mac = FakeMac()
    log = EventLog()
    return AodvAgent(node, eng, mac, log), eng, mac, log


def settle(eng):
    eng.run(until=eng.now + 1.0)


# -- sequence numbers -------------------------------------------------------

def test_seqno_wraparound_newer():
    stored = 2 ** 31 - 1
    incoming = (1 - 2 ** 31) & 0xFFFFFFFF
    assert seq_newer(incoming, stored)
    assert not seq_newer(stored, incoming)
    assert seq_max(stored, incoming) == incoming


def test_seq_inc_wraps():
    assert seq_inc(0xFFFFFFFF) == 0


@settings(max_examples=200)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 2 ** 31 - 1))
def test_seq_newer_by_signed_difference(a, k):
    b = (a + k) & 0xFFFFFFFF
    assert seq_newer(b, a) and not seq_newer(a, b) and not seq_newer(a, a)


def test_ring_timeouts():
    assert TTL_SEQUENCE == (1, 3, 5, 7, 35, 35)
    assert ring_timeout(1) == pytest.approx(0.24)
    assert ring_timeout(35) == pytest.approx(2.96)


# -- send_data --------------------------------------------------------------

def test_forward_extends_lifetime():
    ag, eng, mac, log = agent(now=10.0)
    ag.routes[5] = RouteEntry(5, 2, 2, 4, True, 10.5)
    assert ag.send_data(DataPacket(1, 0, 5, 512, 10.0)) == "forwarded"
    assert ag.routes[5].lifetime == pytest.approx(10.0 + ACTIVE_ROUTE_TIMEOUT)
    assert mac.sent[0].dst == 2


def test_cold_start_single_flood():
    ag, eng, mac, log = agent()
    assert ag.send_data(DataPacket(1, 0, 5, 512, 0.0)) == "queued_pending_discovery"
    assert ag.send_data(DataPacket(2, 0, 5, 512, 0.0)) == "queued_pending_discovery"
    assert mac.kinds() == ["Rreq"]
    assert mac.sent[0].dst == BROADCAST and mac.sent[0].payload.ttl == 1


def test_buffer_drop_oldest():
    ag, eng, mac, log = agent()
    for uid in range(1, BUFFER_CAPACITY + 2):
        ag.send_data(DataPacket(uid, 0, 5, 512, 0.0))
    q = ag.buffer[5]
    assert len(q) == BUFFER_CAPACITY and q[0].uid == 2
    drops = log.of_kind("APP_DROP")
    assert len(drops) == 1 and drops[0][3] == "buffer-full" and drops[0][5] == 1


# -- RREQ handling ----------------------------------------------------------

def test_destination_replies_with_zero_hops():
    ag, eng, mac, log = agent(node=3)
    res = ag.process_rreq(Rreq(1, 0, 1, 3, None, 1, 5), prev=2)
    assert res == "rrep"
    (f,) = mac.sent
    assert f.dst == 2 and isinstance(f.payload, Rrep) and f.payload.hop_count == 0
    assert ag.routes[0].next_hop == 2 and ag.routes[0].hop_count == 2


def test_destination_adopts_requested_seqno():
    ag, eng, mac, log = agent(node=3)
    ag.process_rreq(Rreq(1, 0, 1, 3, 9, 0, 5), prev=0)
    assert ag.seqno == 9 and mac.sent[0].payload.dest_seqno == 9


def test_duplicate_rreq_dropped():
    ag, eng, mac, log = agent(node=4)
    assert ag.process_rreq(Rreq(1, 0, 1, 3, None, 1, 5), prev=2) == "rebroadcast"
    before = (ag.routes[0].next_hop, ag.routes[0].hop_count)
    assert ag.process_rreq(Rreq(1, 0, 1, 3, None, 1, 5), prev=7) == "dropped"
    assert ag.process_rreq(Rreq(1, 0, 1, 3, None, 4, 5), prev=8) == "dropped"
    assert (ag.routes[0].next_hop, ag.routes[0].hop_count) == before
    settle(eng)
    assert mac.kinds().count("Rreq") == 1
    fwd = mac.sent[0].payload
    assert fwd.hop_count == 2 and fwd.ttl == 4


def test_ttl_exhausted_not_rebroadcast():
    ag, eng, mac, log = agent(node=4)
    assert ag.process_rreq(Rreq(1, 0, 1, 3, None, 0, 1), prev=0) == "expired"
    settle(eng)
    assert mac.sent == []


def test_intermediate_reply_with_fresh_route():
    ag, eng, mac, log = agent(node=4, now=1.0)
    ag.routes[9] = RouteEntry(9, 6, 3, 7, True, 5.0)
    assert ag.process_rreq(Rreq(1, 0, 1, 9, 5, 1, 10), prev=2) == "rrep"
    settle(eng)
    assert mac.kinds() == ["Rrep"]
    rrep = mac.sent[0].payload
    assert rrep.hop_count == 3 and rrep.dest_seqno == 7 and mac.sent[0].dst == 2


def test_stale_route_does_not_reply():
    ag, eng, mac, log = agent(node=4, now=1.0)
    ag.routes[9] = RouteEntry(9, 6, 3, 4, True, 5.0)
    assert ag.process_rreq(Rreq(1, 0, 1, 9, 5, 1, 10), prev=2) == "rebroadcast"


# -- RREP handling ----------------------------------------------------------

def test_rrep_tie_break():
    ag, eng, mac, log = agent(node=0)
    assert ag.process_rrep(Rrep(0, 9, 4, 2, 6.0), prev=1) == "installed"
    assert ag.routes[9].hop_count == 3
    assert ag.process_rrep(Rrep(0, 9, 4, 5, 6.0), prev=2) == "ignored"
    assert ag.routes[9].next_hop == 1
    assert ag.process_rrep(Rrep(0, 9, 4, 0, 6.0), prev=2) == "installed"
    assert ag.routes[9].next_hop == 2 and ag.routes[9].hop_count == 1
    assert ag.process_rrep(Rrep(0, 9, 5, 8, 6.0), prev=3) == "installed"
    assert ag.routes[9].seqno == 5


def test_rrep_forwarded_along_reverse_route():
    ag, eng, mac, log = agent(node=2, now=1.0)
    ag.routes[0] = RouteEntry(0, 1, 2, 3, True, 4.0)
    assert ag.process_rrep(Rrep(0, 9, 4, 0, 6.0), prev=5) == "forwarded"
    (f,) = mac.sent
    assert f.dst == 1 and f.payload.hop_count == 1
    assert 1 in ag.routes[9].precursors


def test_rrep_without_reverse_route_logged():
    ag, eng, mac, log = agent(node=2, now=1.0)
    assert ag.process_rrep(Rrep(0, 9, 4, 0, 6.0), prev=5) == "dropped"
    assert log.of_kind("RT_DROP")


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 8), st.integers(1, 3),
                          st.integers(0, 6)), max_size=40))
def test_route_freshness_and_monotone_seqno(ops):
    ag, eng, mac, log = agent(node=0)
    for dest_off, seq, prev, hops in ops:
        dest = 10 + dest_off
        before = ag.routes.get(dest)
        snap = None if before is None else (before.seqno, before.hop_count, before.valid_seqno)
        own = ag.seqno
        ag.process_rrep(Rrep(0, dest, seq, hops, 6.0), prev)
        ag.process_rreq(Rreq(len(mac.sent) + 1, dest, seq, 0, None, hops, 1), prev)
        assert not seq_newer(own, ag.seqno)
        after = ag.routes[dest]
        if snap is not None and snap[2] and before.valid:
            assert not seq_newer(snap[0], after.seqno)
            if after.seqno == snap[0]:
                assert after.hop_count <= snap[1]


# -- link breaks and RERR ---------------------------------------------------

def test_link_break_without_routes():
    ag, eng, mac, log = agent()
    assert ag.handle_link_break(3) is False
    settle(eng)
    assert mac.sent == []


def test_link_break_invalidates_and_notifies():
    ag, eng, mac, log = agent(now=2.0)
    ag.routes[7] = RouteEntry(7, 3, 2, 4, True, 5.0)
    ag.routes[8] = RouteEntry(8, 3, 3, 1, True, 5.0)
    ag.routes[9] = RouteEntry(9, 4, 2, 1, True, 5.0)
    ag.routes[7].precursors.add(1)
    assert ag.handle_link_break(3) is True
    assert not ag.routes[7].valid and ag.routes[7].seqno == 5
    assert not ag.routes[8].valid and ag.routes[9].valid
    settle(eng)
    (f,) = mac.sent
    assert isinstance(f.payload, Rerr) and sorted(d for d, _ in f.payload.unreachable) == [7, 8]


def test_rerr_only_from_next_hop():
    ag, eng, mac, log = agent(now=2.0)
    ag.routes[7] = RouteEntry(7, 3, 2, 4, True, 5.0)
    assert ag.process_rerr(Rerr(((7, 5),)), prev=2) is False
    assert ag.routes[7].valid
    ag.process_rerr(Rerr(((7, 5),)), prev=3)
    assert not ag.routes[7].valid and ag.routes[7].seqno == 5


# -- purge --------------------------------------------------------------------

def test_purge_rules():
    ag, eng, mac, log = agent()
    ag.routes[1] = RouteEntry(1, 1, 1, 2, True, 0.0 + ACTIVE_ROUTE_TIMEOUT)
    ag.routes[2] = RouteEntry(2, 1, 2, 2, True, 0.0 + ACTIVE_ROUTE_TIMEOUT)
    ag.routes[2].lifetime = 3.4 + ACTIVE_ROUTE_TIMEOUT  # refreshed by recent traffic
    ag.purge_expired(3.5)
    assert not ag.routes[1].valid and ag.routes[1].seqno == 3
    assert ag.routes[2].valid
    ag.purge_expired(3.5 + 6.5)
    assert 1 not in ag.routes


# -- scenarios over the full stack ------------------------------------------

def chain_sim(points, duration=40.0, seed=1):
    return Simulation(Scenario(static_trace(points, duration, (2000, 2000)), [], duration, seed))


def test_adjacent_destination_first_ring():
    sim = chain_sim([(0, 0), (150, 0)])
    sim.at(1.0, sim.send_packet, 0, 1)
    sim.run()
    assert sim.agents[0].originations == 1
    assert len(sim.log.of_kind("APP_RECV")) == 1


def test_unreachable_six_originations_then_flush():
    sim = chain_sim([(0, 0), (1000, 0)])
    for k in range(3):
        sim.at(1.0 + 0.01 * k, sim.send_packet, 0, 1)
    sim.run()
    sends = [r for r in sim.log.of_kind("RT_SEND") if r[2] == 0 and r[3] == "RREQ"]
    assert sim.agents[0].originations == 6 and len(sends) == 6
    gaps = [b[0] - a[0] for a, b in zip(sends, sends[1:])]
    assert gaps == pytest.approx([ring_timeout(t) for t in TTL_SEQUENCE[:-1]], abs=1e-3)
    drops = [r for r in sim.log.of_kind("APP_DROP") if r[3] == "no-route"]
    assert len(drops) == 3 and 1 not in sim.agents[0].buffer
    assert drops[0][0] == pytest.approx(sends[-1][0] + ring_timeout(35), abs=1e-3)


def test_buffered_packets_flushed_in_order():
    sim = chain_sim([(0, 0), (200, 0), (400, 0)])
    for k in range(5):
        sim.at(1.0 + 0.001 * k, sim.send_packet, 0, 2)
    hops = []
    sim.at(2.0, lambda: hops.append(sim.agents[0].routes[2].hop_count))
    sim.run()
    recv = sim.log.of_kind("APP_RECV")
    assert [r[4] for r in recv] == [1, 2, 3, 4, 5]
    assert all(r[6] == 2 for r in recv)
    assert hops == [2]


def moving(points_before, points_after, t_switch, duration):
    from vanetlab.mobility import TraceSet, Waypoint
    vehicles = []
    for (x0, y0), (x1, y1) in zip(points_before, points_after):
        wps = [Waypoint(0.0, x0, y0, 0.0), Waypoint(t_switch, x0, y0, 0.0)]
        if (x1, y1) != (x0, y0):
            wps.append(Waypoint(t_switch, x1, y1, 0.0))
        wps.append(Waypoint(duration, x1, y1, 0.0))
        vehicles.append(wps)
    return TraceSet(3000.0, 3000.0, duration, vehicles, [])


def cbr(sim, src, dst, start, n, interval=0.25):
    for k in range(n):
        sim.at(start + k * interval, sim.send_packet, src, dst)


def test_three_chain_middle_fails_rediscovery():
    before = [(0, 0), (200, 0), (400, 0)]
    after = [(0, 0), (2500, 2500), (400, 0)]
    sim = Simulation(Scenario(moving(before, after, 10.0, 30.0), [], 30.0, 2))
    cbr(sim, 0, 2, 1.0, 40)
    state = []
    sim.at(11.5, lambda: state.append(sim.agents[0].routes[2].valid))
    sim.run()
    assert state == [False]
    assert sim.agents[0].originations >= 2
    late = [r for r in sim.log.of_kind("RT_SEND") if r[2] == 0 and r[3] == "RREQ" and r[0] > 10]
    assert late


def test_rerr_cascade_four_chain():
    # A-B-C-D; C vanishes and E takes its place, so B sees the break
    before = [(0, 0), (200, 0), (400, 0), (600, 0), (2500, 2500)]
    after = [(0, 0), (200, 0), (2500, 0), (600, 0), (400, 0)]
    sim = Simulation(Scenario(moving(before, after, 10.0, 30.0), [], 30.0, 4))
    cbr(sim, 0, 3, 1.0, 80)
    sim.run()
    rerr = [r for r in sim.log.of_kind("RT_SEND") if r[3] == "RERR"]
    assert len(rerr) == 1 and rerr[0][2] == 1  # B, one hop upstream of the break
    late = [r for r in sim.log.of_kind("APP_RECV") if r[0] > 11]
    assert late and all(r[6] == 3 for r in late)


def _assert_loop_free(sim):
    checked = 0
    for ag in sim.agents:
        for dest, rt in ag.routes.items():
            if not rt.valid:
                continue
            seen = {ag.node}
            cur = rt.next_hop
            while cur != dest:
                assert cur not in seen
                seen.add(cur)
                nxt = sim.agents[cur].routes.get(dest)
                if nxt is None or not nxt.valid:
                    break
                cur = nxt.next_hop
            checked += 1
    return checked


def test_flood_termination_and_loop_freedom():
    rng = random.Random(3)
    pts = [(rng.uniform(0, 700), rng.uniform(0, 700)) for _ in range(25)]
    sim = chain_sim(pts, duration=60.0)
    pairs = [(rng.randrange(25), rng.randrange(25)) for _ in range(10)]
    pairs = [(a, b) for a, b in pairs if a != b]
    checked = []
    for k, (a, b) in enumerate(pairs):
        sim.at(1.0 + 5 * k, sim.send_packet, a, b)
        sim.at(3.5 + 5 * k, lambda: checked.append(_assert_loop_free(sim)))
    sim.run()
    assert sum(checked) > 0
    # each node transmits a given (origin, rreq_id) flood at most once
    rreq = [r for r in sim.log.of_kind("RT_SEND") if r[3] == "RREQ"]
    assert len(rreq) <= 25 * sum(ag.originations for ag in sim.agents)
