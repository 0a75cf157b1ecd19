"""Shared routing-agent machinery: dispatch, send buffering, forwarding."""

from collections import deque
from dataclasses import dataclass, field
from typing import ClassVar

from manetsim.energy import CONTROL, DATA
from manetsim.radio import BROADCAST, Frame


@dataclass
class RouteEntry:
    dest: int
    next_hop: int
    hop_count: int
    seq: int = 0
    expiry: float = float("inf")
    path: tuple = ()
    valid: bool = True


@dataclass(eq=False)
class DataPacket:
    kind: ClassVar[str] = "DATA"
    cls: ClassVar[str] = DATA

    flow: int
    seq: int
    src: int
    dest: int
    size: int
    created: float
    # DSR source route; empty for hop-by-hop protocols
    route: tuple = ()
    cursor: int = 0
    trail: list = field(default_factory=list)

    @property
    def wire_size(self):
        return self.size + 4 * len(self.route)


class RoutingAgent:
    """One node's routing process.

    Subclasses fill in ``HANDLERS`` (packet kind -> method name) and the
    route discovery / lookup hooks.
    """

    name = "base"
    proactive = False
    HANDLERS: ClassVar[dict] = {}
    BUFFER_CAP = 64
    BUFFER_HOLD = 30.0
    # hop limit for data; transient next-hop loops would otherwise bounce a
    # packet every few milliseconds until the tables heal
    DATA_TTL = 64

    def __init__(self, node, net):
        self.id = node
        self.net = net
        self.engine = net.engine
        self.radio = net.radio
        self.metrics = net.metrics
        self.buffer = {}

    @property
    def now(self):
        return self.engine.now

    @property
    def alive(self):
        return self.net.energy.alive(self.id)

    def rng(self):
        return self.engine.rng_stream(self.name, self.id)

    def start(self):
        pass

    def on_death(self):
        pass

    # -- radio side ---------------------------------------------------------

    def broadcast(self, payload):
        return self.radio.transmit(Frame(self.id, BROADCAST, payload, payload.size, CONTROL))

    def unicast(self, next_hop, payload):
        if payload.cls == DATA:
            return self.radio.transmit(Frame(self.id, next_hop, payload, payload.wire_size, DATA))
        return self.radio.transmit(Frame(self.id, next_hop, payload, payload.size, CONTROL))

    def receive(self, frame):
        pkt = frame.payload
        if pkt.kind == "DATA":
            pkt.trail.append(self.id)
            return self.handle_data(pkt, frame.src)
        name = self.HANDLERS.get(pkt.kind)
        if name is None:
            self.metrics.malformed += 1
            return "drop"
        return getattr(self, name)(pkt, frame.src)

    def link_failed(self, frame):
        """The radio could not reach ``frame.dest``."""

    # -- application side ---------------------------------------------------

    def send_data(self, packet):
        """Originate ``packet``: returns ``"sent"``, ``"queued"`` or ``"dropped"``."""
        if not packet.trail:
            packet.trail.append(self.id)
        if self.forward_data(packet):
            return "sent"
        if self.proactive:
            self.metrics.drop("no-route")
            return "dropped"
        self.enqueue(packet)
        self.request_route(packet.dest)
        return "queued"

    def handle_data(self, pkt, sender):
        if pkt.dest == self.id:
            self.metrics.record_delivery(pkt.flow, pkt.seq, pkt.created, self.now, pkt)
            return "deliver"
        if len(pkt.trail) > self.DATA_TTL:
            self.metrics.drop("ttl-expired")
            return "drop"
        if self.forward_data(pkt):
            return "forward"
        self.no_route_for(pkt)
        return "drop"

    def forward_data(self, pkt):
        """Transmit ``pkt`` one hop closer to its destination if a route exists."""
        route = self.route_lookup(pkt.dest)
        if route is None:
            return False
        return self.unicast(route.next_hop, pkt)

    def no_route_for(self, pkt):
        self.metrics.drop("no-route")

    def route_lookup(self, dest, t=None):
        raise NotImplementedError

    def request_route(self, dest):
        raise NotImplementedError

    # -- send buffer --------------------------------------------------------

    def enqueue(self, packet):
        q = self.buffer.get(packet.dest)
        if q is None:
            q = self.buffer[packet.dest] = deque()
        self._expire(q)
        if len(q) >= self.BUFFER_CAP:
            q.popleft()
            self.metrics.drop("no-route")
        q.append(packet)

    def _expire(self, q):
        horizon = self.now - self.BUFFER_HOLD
        while q and q[0].created < horizon:
            q.popleft()
            self.metrics.drop("buffer-timeout")

    def flush(self, dest):
        q = self.buffer.get(dest)
        if not q:
            return 0
        self._expire(q)
        sent = 0
        while q:
            if not self.forward_data(q[0]):
                break
            q.popleft()
            sent += 1
        if not q:
            del self.buffer[dest]
        return sent

    def drop_buffer(self, dest, reason="no-route"):
        q = self.buffer.pop(dest, None)
        if q:
            for _ in q:
                self.metrics.drop(reason)
        return len(q) if q else 0

    def buffered(self, dest=None):
        if dest is not None:
            return len(self.buffer.get(dest, ()))
        return sum(len(q) for q in self.buffer.values())
