"""Ad-hoc On-Demand Distance Vector routing."""

import math
from dataclasses import dataclass, replace
from typing import ClassVar

from manetsim.energy import CONTROL
from manetsim.routing.base import RouteEntry, RoutingAgent


@dataclass(frozen=True)
class Rreq:
    kind: ClassVar[str] = "RREQ"
    cls: ClassVar[str] = CONTROL
    size: ClassVar[int] = 24

    src: int
    src_seq: int
    broadcast_id: int
    dest: int
    dest_seq_known: int
    hop_count: int = 0
    ttl: int = 35


@dataclass(frozen=True)
class Rrep:
    kind: ClassVar[str] = "RREP"
    cls: ClassVar[str] = CONTROL
    size: ClassVar[int] = 20

    src: int
    dest: int
    dest_seq: int
    hop_count: int
    lifetime: float


@dataclass(frozen=True)
class Rerr:
    kind: ClassVar[str] = "RERR"
    cls: ClassVar[str] = CONTROL

    unreachable: tuple  # ((dest, dest_seq), ...)

    def __post_init__(self):
        if not self.unreachable:
            raise ValueError("RERR needs at least one unreachable destination")

    @property
    def size(self):
        return 12 + 8 * len(self.unreachable)


@dataclass(frozen=True)
class AodvHello:
    kind: ClassVar[str] = "HELLO"
    cls: ClassVar[str] = CONTROL
    size: ClassVar[int] = 16

    src: int
    seq: int


class _Discovery:
    __slots__ = ("retries", "timer")

    def __init__(self):
        self.retries = 0
        self.timer = None


class Aodv(RoutingAgent):
    name = "aodv"
    HANDLERS = {"RREQ": "handle_rreq", "RREP": "handle_rrep", "RERR": "handle_rerr",
                "HELLO": "handle_hello"}

    HELLO_INTERVAL = 1.0
    NEIGHBOR_TIMEOUT = 3.0
    ACTIVE_ROUTE_TIMEOUT = 10.0
    SEEN_EXPIRY = 5.0
    RREQ_TIMEOUT = 1.0
    RREQ_RETRIES = 2
    NET_DIAMETER = 35

    def __init__(self, node, net):
        super().__init__(node, net)
        self.own_seq = 0
        self.next_broadcast_id = 0
        self.routes = {}
        self.seen = {}
        self.neighbors = {}
        self.discovery = {}
        self.last_broadcast = -math.inf
        self._hello_timer = None

    def start(self):
        phase = self.rng().uniform(0.0, self.HELLO_INTERVAL)
        self._hello_timer = self.engine.schedule_in(phase, self.id, "aodv-hello", self.hello_tick)

    def broadcast(self, payload):
        self.last_broadcast = self.now
        return super().broadcast(payload)

    # -- route table --------------------------------------------------------

    def _entry(self, dest, t=None):
        """Table entry for ``dest`` with lifetime expiry applied at ``t``."""
        e = self.routes.get(dest)
        if e is not None and e.valid:
            if (self.now if t is None else t) >= e.expiry:
                self._invalidate(e)
        return e

    def _invalidate(self, e):
        e.valid = False
        e.seq += 1
        self._changed(e.dest)

    def _changed(self, dest):
        obs = self.net.route_observer
        if obs is not None:
            obs(self.id, dest, self.now)

    def route_lookup(self, dest, t=None):
        e = self._entry(dest, t)
        if e is not None and e.valid:
            return e
        return None

    def has_active_route(self, t=None):
        t = self.now if t is None else t
        return any(e.valid and e.expiry > t for e in self.routes.values())

    def update_route(self, dest, seq, hops, next_hop, t=None):
        """Install or refresh ``dest`` if the candidate is fresher.

        A stored invalid entry still carries its (bumped) sequence number,
        and a candidate older than that is refused.
        """
        t = self.now if t is None else t
        e = self._entry(dest, t)
        if e is not None:
            if seq < e.seq:
                return False
            if seq == e.seq and e.valid and hops >= e.hop_count:
                return False
            e.next_hop = next_hop
            e.hop_count = hops
            e.seq = seq
            e.valid = True
        else:
            e = self.routes[dest] = RouteEntry(dest, next_hop, hops, seq)
        e.expiry = t + self.ACTIVE_ROUTE_TIMEOUT
        self._changed(dest)
        return True

    def _refresh(self, e):
        e.expiry = max(e.expiry, self.now + self.ACTIVE_ROUTE_TIMEOUT)

    # -- discovery ----------------------------------------------------------

    def request_route(self, dest):
        if dest in self.discovery or self.route_lookup(dest) is not None:
            return False
        self.discovery[dest] = _Discovery()
        self.originate_rreq(dest)
        return True

    def originate_rreq(self, dest):
        st = self.discovery[dest]
        self.own_seq += 1
        self.next_broadcast_id += 1
        e = self._entry(dest)
        rreq = Rreq(src=self.id, src_seq=self.own_seq, broadcast_id=self.next_broadcast_id,
                    dest=dest, dest_seq_known=e.seq if e is not None else 0,
                    hop_count=0, ttl=self.NET_DIAMETER)
        self.seen[(self.id, rreq.broadcast_id)] = self.now + self.SEEN_EXPIRY
        self.broadcast(rreq)
        st.timer = self.engine.schedule_in(self.RREQ_TIMEOUT * 2 ** st.retries, self.id,
                                           "aodv-rreq-timeout", self._rreq_timeout, dest)
        return rreq

    def _rreq_timeout(self, dest):
        st = self.discovery.get(dest)
        if st is None or not self.alive:
            return
        if self.route_lookup(dest) is not None:
            del self.discovery[dest]
            self.flush(dest)
        elif st.retries < self.RREQ_RETRIES:
            st.retries += 1
            self.originate_rreq(dest)
        else:
            del self.discovery[dest]
            self.drop_buffer(dest)

    def _heard(self, nbr):
        self.neighbors[nbr] = self.now

    def _purge_seen(self):
        t = self.now
        if len(self.seen) > 256:
            self.seen = {k: v for k, v in self.seen.items() if v > t}

    def handle_rreq(self, rreq, sender):
        self._heard(sender)
        key = (rreq.src, rreq.broadcast_id)
        exp = self.seen.get(key)
        if exp is not None and exp > self.now:
            return "drop"
        self._purge_seen()
        self.seen[key] = self.now + self.SEEN_EXPIRY
        self.update_route(rreq.src, rreq.src_seq, rreq.hop_count + 1, sender)
        if rreq.dest == self.id:
            self.own_seq = max(self.own_seq, rreq.dest_seq_known)
            rrep = Rrep(src=rreq.src, dest=self.id, dest_seq=self.own_seq, hop_count=0,
                        lifetime=self.ACTIVE_ROUTE_TIMEOUT)
            return "reply" if self._send_rrep(rrep) else "drop"
        e = self.route_lookup(rreq.dest)
        if e is not None and e.seq >= rreq.dest_seq_known:
            rrep = Rrep(src=rreq.src, dest=rreq.dest, dest_seq=e.seq, hop_count=e.hop_count,
                        lifetime=e.expiry - self.now)
            return "reply" if self._send_rrep(rrep) else "drop"
        if rreq.ttl <= 1:
            return "drop"
        self.broadcast(replace(rreq, hop_count=rreq.hop_count + 1, ttl=rreq.ttl - 1))
        return "rebroadcast"

    def _send_rrep(self, rrep):
        rev = self.route_lookup(rrep.src)
        if rev is None:
            return False
        self._refresh(rev)
        return self.unicast(rev.next_hop, rrep)

    def handle_rrep(self, rrep, sender):
        self._heard(sender)
        self.update_route(rrep.dest, rrep.dest_seq, rrep.hop_count + 1, sender)
        if rrep.src == self.id:
            st = self.discovery.get(rrep.dest)
            if st is not None and self.route_lookup(rrep.dest) is not None:
                self.engine.cancel(st.timer)
                del self.discovery[rrep.dest]
            self.flush(rrep.dest)
            return "consume"
        if self._send_rrep(replace(rrep, hop_count=rrep.hop_count + 1)):
            return "forward"
        return "drop"

    # -- maintenance --------------------------------------------------------

    def on_neighbor_lost(self, nbr):
        self.neighbors.pop(nbr, None)
        lost = []
        for dest in sorted(self.routes):
            e = self._entry(dest)
            if e.valid and e.next_hop == nbr:
                self._invalidate(e)
                lost.append((dest, e.seq))
        if lost:
            self.broadcast(Rerr(tuple(lost)))
        return lost

    def handle_rerr(self, rerr, sender):
        self._heard(sender)
        lost = []
        for dest, seq in rerr.unreachable:
            e = self._entry(dest)
            if e is not None and e.valid and e.next_hop == sender:
                e.valid = False
                e.seq = max(e.seq + 1, seq)
                self._changed(dest)
                lost.append((dest, e.seq))
        if lost:
            self.broadcast(Rerr(tuple(lost)))
            return "rebroadcast"
        return "drop"

    def handle_hello(self, hello, sender):
        self._heard(sender)
        return "consume"

    def hello_tick(self):
        if not self.alive:
            return
        t = self.now
        for nbr, last in sorted(self.neighbors.items()):
            if t - last > self.NEIGHBOR_TIMEOUT:
                self.on_neighbor_lost(nbr)
        if t - self.last_broadcast >= self.HELLO_INTERVAL and self.has_active_route(t):
            self.broadcast(AodvHello(self.id, self.own_seq))
        self._hello_timer = self.engine.schedule_in(self.HELLO_INTERVAL, self.id, "aodv-hello",
                                                    self.hello_tick)

    # -- data ---------------------------------------------------------------

    def handle_data(self, pkt, sender):
        self._heard(sender)
        back = self.route_lookup(pkt.src)
        if back is not None:
            self._refresh(back)
        return super().handle_data(pkt, sender)

    def forward_data(self, pkt):
        e = self.route_lookup(pkt.dest)
        if e is None:
            return False
        self._refresh(e)
        return self.unicast(e.next_hop, pkt)

    def no_route_for(self, pkt):
        super().no_route_for(pkt)
        e = self.routes.get(pkt.dest)
        self.broadcast(Rerr(((pkt.dest, e.seq if e is not None else 0),)))

    def link_failed(self, frame):
        pkt = frame.payload
        self.on_neighbor_lost(frame.dest)
        if pkt.kind != "DATA":
            return
        if pkt.src == self.id:
            self.enqueue(pkt)
            if not self.request_route(pkt.dest):
                self.flush(pkt.dest)
        else:
            self.metrics.drop("link-break")
