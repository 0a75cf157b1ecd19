import pytest

from manetsim.mobility import Position
from manetsim.routing.dsr import DsrRreq, RouteCache
from manetsim.routing.base import DataPacket
from manetsim.scenario import Network

from conftest import flow, line, static_net


def at(net, t, fn, *args):
    net.engine.schedule(t, "test", "timer", fn, *args)


def spy(agent, method):
    calls = []
    orig = getattr(agent, method)

    def wrapper(*a):
        calls.append(a)
        return orig(*a)

    setattr(agent, method, wrapper)
    return calls


def test_cold_discovery_record_and_full_route():
    net = static_net(line(3), protocol="dsr", flows=[flow(0, 2, 1.0, 2.0)])
    net.metrics.keep_packets = True
    b_rreqs = spy(net.agents[1], "broadcast")
    a_out = spy(net.agents[0], "broadcast")
    net.run(3.0)
    first = a_out[0][0]
    assert (first.route_record, first.request_id) == ((), 1)
    assert b_rreqs[0][0].route_record == (1,)
    assert net.agents[0].cache.lookup(2, 3.0) == (0, 1, 2)
    assert net.agents[0].cache.lookup(1, 3.0) == (0, 1)
    assert net.agents[1].cache.lookup(2, 3.0) == (1, 2)
    assert len(net.metrics.received) == 4
    pkt, _ = net.metrics.deliveries[0]
    assert pkt.route == (0, 1, 2)
    assert pkt.wire_size == 512 + 12


def test_delivered_trail_matches_header():
    net = static_net(line(5), protocol="dsr", flows=[flow(0, 4, 1.0, 3.0)])
    net.metrics.keep_packets = True
    net.run(4.0)
    assert net.metrics.deliveries
    for pkt, _ in net.metrics.deliveries:
        assert tuple(pkt.trail) == pkt.route


def test_loop_and_duplicate_rreq_dropped():
    net = static_net(line(3), protocol="dsr")
    net.start()
    b = net.agents[1]
    assert b.handle_rreq(DsrRreq(0, 1, 2, (1,)), 0) == "drop"
    rreq = DsrRreq(0, 7, 2, ())
    assert b.handle_rreq(rreq, 0) == "rebroadcast"
    assert b.handle_rreq(rreq, 2) == "drop"


def test_partitioned_destination_three_rreqs():
    net = static_net([(0, 0), (1000, 0)], protocol="dsr", flows=[flow(0, 1, 1.0, 1.1)])
    net.run(10.0)
    assert net.radio.ctrl_frames["RREQ"] == 3
    assert net.metrics.drops["no-route"] == 1
    assert net.agents[0].buffered() == 0


def test_cache_hit_skips_discovery():
    net = static_net(line(2), protocol="dsr")
    net.start()
    a = net.agents[0]
    a.cache.add((0, 1), 0.0)
    assert a.send_data(DataPacket(0, 0, 0, 1, 512, 0.0)) == "sent"
    assert net.radio.ctrl_frames == {}


def test_cache_shortest_then_most_recent():
    c = RouteCache(0)
    c.add((0, 1, 2, 3), 0.0)
    c.add((0, 4, 3), 1.0)
    assert c.lookup(3, 2.0) == (0, 4, 3)
    c.add((0, 5, 3), 2.0)
    assert c.lookup(3, 2.0) == (0, 5, 3)
    assert c.lookup(9, 2.0) is None


def test_cache_staleness_and_loops():
    c = RouteCache(0)
    c.add((0, 1, 2), 0.0)
    assert c.lookup(2, 30.0) is not None
    assert c.lookup(2, 31.0) is None
    assert not c.add((0, 1, 0), 0.0)
    assert not c.add((3, 1), 0.0)


def test_cache_capacity_evicts_oldest():
    c = RouteCache(0, capacity=3)
    for k in range(1, 5):
        c.add((0, k), float(k))
    assert [p for p, _ in c.paths] == [(0, 2), (0, 3), (0, 4)]


def test_remove_link_drops_paths_using_it():
    c = RouteCache(0)
    c.add((0, 1, 2, 3), 0.0)
    c.add((0, 1, 4), 0.0)
    assert c.remove_link(1, 2) == 1
    assert c.lookup(3, 0.0) is None
    assert c.lookup(4, 0.0) == (0, 1, 4)


class BreakLink:
    """Line A-B-C; C jumps away at ``t_leave``."""

    n = 3

    def __init__(self, t_leave):
        self.t_leave = t_leave

    def initial_position(self, node):
        return Position(200.0 * node, 0)

    def position_at(self, node, t):
        if node == 2 and t >= self.t_leave:
            return Position(2000, 0)
        return Position(200.0 * node, 0)


def test_rerr_travels_back_and_source_purges():
    base = static_net(line(3), protocol="dsr")
    net = Network(base.config, mobility=BreakLink(1.6), flows=[flow(0, 2, 1.0, 2.6)])
    rerrs = spy(net.agents[0], "handle_rerr")
    net.run(5.0)
    assert net.radio.ctrl_frames["RERR"] == 1
    (rerr, sender), = rerrs
    assert rerr.broken == (1, 2)
    assert rerr.path == (1, 0)
    assert rerr.size == 20 + 8
    assert sender == 1
    assert net.agents[0].cache.lookup(2, 5.0) is None
    assert net.agents[1].cache.lookup(2, 5.0) is None
    # the source went back to discovery after the break
    assert net.radio.ctrl_frames["RREQ"] > 2
    assert net.metrics.drops["link-break"] == 1


def test_silence_at_rest():
    net = static_net(line(6), protocol="dsr")
    net.run(130.0)
    stats = net.finalize()
    assert net.radio.tx_count == 0
    assert stats.control_energy == 0.0
    assert stats.total_energy == pytest.approx(sum(l.idle for l in stats.ledgers))


def test_reply_from_cache_flag():
    from dataclasses import replace
    base = static_net(line(4), protocol="dsr")
    cfg = replace(base.config, dsr_cache_replies=True)
    from manetsim.mobility import StaticPlacement
    net = Network(cfg, mobility=StaticPlacement(line(4)), flows=[])
    net.start()
    net.agents[1].cache.add((1, 2, 3), 0.0)
    at(net, 0.5, net.agents[0].send_data, DataPacket(0, 0, 0, 3, 512, 0.5))
    net.metrics.offered(DataPacket(0, 0, 0, 3, 512, 0.5))
    net.run(2.0)
    assert net.agents[0].cache.lookup(3, 2.0) == (0, 1, 2, 3)
    assert len(net.metrics.received) == 1
