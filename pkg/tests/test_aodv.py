import pytest

from manetsim.mobility import Position, StaticPlacement
from manetsim.routing.aodv import Aodv, Rerr, Rreq
from manetsim.routing.base import DataPacket, RouteEntry

from conftest import flow, line, static_net


def data(src, dest, t=0.0, seq=0):
    return DataPacket(0, seq, src, dest, 512, t)


def at(net, t, fn, *args):
    net.engine.schedule(t, "test", "timer", fn, *args)


def test_first_discovery_counters_and_retry():
    net = static_net([(0, 0), (1000, 0)])
    net.start()
    a = net.agents[0]
    sent = []
    orig = a.broadcast
    a.broadcast = lambda p: (sent.append(p), orig(p))[1]
    at(net, 0.5, a.send_data, data(0, 1, 0.5))
    net.run(1.6)
    rreqs = [p for p in sent if isinstance(p, Rreq)]
    assert [(r.broadcast_id, r.src_seq, r.ttl) for r in rreqs] == [(1, 1, 35), (2, 2, 35)]


def test_partitioned_destination_drops_after_retries():
    net = static_net([(0, 0), (1000, 0)])
    net.start()
    a = net.agents[0]
    for k in range(3):
        at(net, 0.5 + 0.1 * k, a.send_data, data(0, 1, 0.5 + 0.1 * k, k))
    net.run(20)
    # timeouts at 1, 2 and 4 s: three RREQs, then the buffer is dropped
    assert net.radio.ctrl_frames["RREQ"] == 3
    assert net.metrics.drops["no-route"] == 3
    assert a.buffered() == 0
    assert a.discovery == {}


def test_valid_route_suppresses_rreq():
    net = static_net(line(2))
    net.start()
    a = net.agents[0]
    a.update_route(1, 1, 1, 1)
    assert a.request_route(1) is False
    assert net.radio.ctrl_frames["RREQ"] == 0


def test_three_node_line_discovery():
    net = static_net(line(3), flows=[flow(0, 2, start=1.0, stop=2.0)])
    net.run(3.0)
    a, b = net.agents[0], net.agents[1]
    ra = a.route_lookup(2)
    assert (ra.next_hop, ra.hop_count) == (1, 2)
    rb = b.route_lookup(2)
    assert (rb.next_hop, rb.hop_count) == (2, 1)
    # reverse route at C toward A
    rc = net.agents[2].route_lookup(0)
    assert (rc.next_hop, rc.hop_count) == (1, 2)
    assert len(net.metrics.received) == 4 == len(net.metrics.sent)
    # one RREQ from A, one rebroadcast by B; C (the dest) does not rebroadcast
    assert net.radio.ctrl_frames["RREQ"] == 2
    assert net.radio.ctrl_frames["RREP"] == 2


def test_buffered_packets_flushed_in_order():
    net = static_net(line(3))
    net.metrics.keep_packets = True
    net.start()
    a = net.agents[0]
    for k in range(5):
        at(net, 1.0, a.send_data, data(0, 2, 1.0, k))
    net.run(2.0)
    assert [p.seq for p, _ in net.metrics.deliveries] == [0, 1, 2, 3, 4]


def test_duplicate_rreq_dropped():
    net = static_net(line(3))
    net.start()
    b = net.agents[1]
    rreq = Rreq(src=0, src_seq=1, broadcast_id=1, dest=2, dest_seq_known=0)
    assert b.handle_rreq(rreq, 0) == "rebroadcast"
    assert b.handle_rreq(rreq, 2) == "drop"
    assert net.radio.ctrl_frames["RREQ"] == 1


def test_ttl_exhausted_dropped():
    net = static_net(line(3))
    net.start()
    rreq = Rreq(src=0, src_seq=1, broadcast_id=1, dest=2, dest_seq_known=0, ttl=1)
    assert net.agents[1].handle_rreq(rreq, 0) == "drop"


def test_intermediate_rrep_from_fresh_cache():
    net = static_net(line(4))
    net.start()
    a, b, c = net.agents[:3]
    b.update_route(3, 5, 2, 2)
    c.update_route(3, 5, 1, 3)
    a.routes[3] = RouteEntry(3, 1, 3, seq=3, valid=False)
    at(net, 0.5, a.send_data, data(0, 3, 0.5))
    net.run(1.0)
    r = a.route_lookup(3)
    assert (r.next_hop, r.hop_count, r.seq) == (1, 3, 5)
    # B answered from its cache: only A's RREQ went on the air
    assert net.radio.ctrl_frames["RREQ"] == 1
    assert len(net.metrics.received) == 1


@pytest.mark.parametrize("entry, cand, accepted", [
    (None, (1, 3, 9), True),
    ((4, 3), (4, 2, 9), True),
    ((5, 1), (4, 1, 9), False),
    ((4, 2), (4, 2, 9), False),
    ((4, 2), (5, 6, 9), True),
])
def test_update_route_rule(entry, cand, accepted):
    net = static_net(line(2))
    a = net.agents[0]
    if entry is not None:
        a.routes[7] = RouteEntry(7, 1, entry[1], seq=entry[0], expiry=100.0)
    seq, hops, nh = cand
    assert a.update_route(7, seq, hops, nh) is accepted
    e = a.routes[7]
    if accepted:
        assert (e.seq, e.hop_count, e.next_hop) == cand
        assert e.expiry == pytest.approx(a.now + Aodv.ACTIVE_ROUTE_TIMEOUT)
    else:
        assert (e.seq, e.hop_count) == entry


def test_stale_rrep_leaves_entry():
    net = static_net(line(2))
    a = net.agents[0]
    a.update_route(5, 6, 2, 1)
    a.update_route(5, 4, 1, 1)
    assert a.routes[5].seq == 6 and a.routes[5].hop_count == 2


def test_expired_entry_not_returned():
    net = static_net(line(2))
    a = net.agents[0]
    a.update_route(1, 1, 1, 1)
    assert a.route_lookup(1, t=9.9) is not None
    assert a.route_lookup(1, t=10.0) is None


def test_rerr_requires_matching_next_hop():
    net = static_net(line(3))
    net.start()
    a = net.agents[0]
    a.update_route(2, 3, 2, 1)
    assert a.handle_rerr(Rerr(((2, 4),)), 5) == "drop"
    assert a.route_lookup(2) is not None
    assert a.handle_rerr(Rerr(((2, 4),)), 1) == "rebroadcast"
    e = a.routes[2]
    assert not e.valid and e.seq == 4


def test_neighbor_loss_without_routes_is_silent():
    net = static_net(line(2))
    net.start()
    assert net.agents[0].on_neighbor_lost(1) == []
    assert net.radio.ctrl_frames["RERR"] == 0


class WalkAway:
    """Line A-B-C where C jumps out of range at ``t_leave``."""

    def __init__(self, t_leave):
        self.n = 3
        self.t_leave = t_leave
        self.pos = [Position(0, 0), Position(200, 0), Position(400, 0)]

    def initial_position(self, node):
        return self.pos[node]

    def position_at(self, node, t):
        if node == 2 and t >= self.t_leave:
            return Position(2000, 0)
        return self.pos[node]


def test_rerr_after_walk_away():
    from manetsim.scenario import Network
    base = static_net(line(3))
    net = Network(base.config, mobility=WalkAway(3.0), flows=[flow(0, 2, 1.0, 2.0)])
    net.run(9.0)
    b = net.agents[1]
    assert not b.routes[2].valid
    assert not net.agents[0].routes[2].valid
    assert net.radio.ctrl_frames["RERR"] >= 1


def test_idle_network_sends_no_hellos():
    net = static_net(line(5))
    net.run(130.0)
    stats = net.finalize()
    assert stats.ctrl_frames == {}
    assert stats.control_energy == 0.0


def test_hello_with_active_route_costs_expected():
    net = static_net(line(2))
    net.start()
    a = net.agents[0]
    a.update_route(1, 1, 1, 1)
    a.last_broadcast = -10.0
    before = net.energy.report(0).control_tx
    net.engine.cancel(a._hello_timer)
    at(net, 0.0, a.hello_tick)
    net.run(0.5)
    assert net.radio.ctrl_frames["HELLO"] == 1
    assert net.energy.report(0).control_tx - before == pytest.approx(1.056e-4, rel=1e-12)


def test_hello_suppressed_after_recent_broadcast():
    net = static_net([(0, 0), (1000, 0)])
    net.start()
    a = net.agents[0]
    net.engine.cancel(a._hello_timer)
    a.update_route(1, 1, 1, 1)
    at(net, 1.0, a.broadcast, Rerr(((9, 1),)))
    at(net, 1.3, a.hello_tick)
    net.run(1.5)
    assert net.radio.ctrl_frames["HELLO"] == 0


def test_data_ttl_bounds_a_routing_loop():
    net = static_net([(0, 0), (100, 0), (2000, 0)])
    net.start()
    a, b = net.agents[0], net.agents[1]
    a.routes[2] = RouteEntry(2, 1, 2, seq=1, expiry=100.0)
    b.routes[2] = RouteEntry(2, 0, 2, seq=1, expiry=100.0)
    at(net, 1.0, a.send_data, data(0, 2, 1.0))
    net.run(3.0)
    assert net.radio.data_frames == a.DATA_TTL
    assert net.metrics.drops["ttl-expired"] == 1
