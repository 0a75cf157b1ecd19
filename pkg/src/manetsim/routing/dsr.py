"""Dynamic Source Routing: on-demand discovery, path cache, source routes."""

from dataclasses import dataclass
from typing import ClassVar

from manetsim.energy import CONTROL
from manetsim.routing.base import RouteEntry, RoutingAgent


@dataclass(frozen=True)
class DsrRreq:
    kind: ClassVar[str] = "RREQ"
    cls: ClassVar[str] = CONTROL

    src: int
    request_id: int
    dest: int
    route_record: tuple = ()

    @property
    def size(self):
        return 16 + 4 * len(self.route_record)


@dataclass(frozen=True)
class DsrRrep:
    kind: ClassVar[str] = "RREP"
    cls: ClassVar[str] = CONTROL

    src: int
    dest: int
    full_route: tuple

    @property
    def size(self):
        return 16 + 4 * len(self.full_route)


@dataclass(frozen=True)
class DsrRerr:
    """Broken link ``broken`` reported back along ``path`` (source-routed)."""

    kind: ClassVar[str] = "RERR"
    cls: ClassVar[str] = CONTROL

    broken: tuple
    path: tuple
    cursor: int

    @property
    def size(self):
        return 20 + 4 * len(self.path)


class RouteCache:
    """Loop-free paths starting at the owner; any prefix is a usable route."""

    def __init__(self, owner, capacity=64, lifetime=30.0):
        self.owner = owner
        self.capacity = capacity
        self.lifetime = lifetime
        self.paths = []  # [(path, inserted_at)], oldest first

    def __len__(self):
        return len(self.paths)

    def add(self, path, t):
        path = tuple(path)
        if len(path) < 2 or path[0] != self.owner or len(set(path)) != len(path):
            return False
        self.paths = [(p, ts) for p, ts in self.paths if p != path]
        self.paths.append((path, t))
        if len(self.paths) > self.capacity:
            del self.paths[: len(self.paths) - self.capacity]
        return True

    def purge(self, t):
        if self.paths and t - self.paths[0][1] > self.lifetime:
            self.paths = [(p, ts) for p, ts in self.paths if t - ts <= self.lifetime]

    def lookup(self, dest, t):
        self.purge(t)
        best = None
        for p, _ in reversed(self.paths):
            if dest in p:
                cand = p[: p.index(dest) + 1]
                if best is None or len(cand) < len(best):
                    best = cand
        return best

    def remove_link(self, a, b):
        def has_link(p):
            return any(p[i] == a and p[i + 1] == b for i in range(len(p) - 1))

        before = len(self.paths)
        self.paths = [(p, ts) for p, ts in self.paths if not has_link(p)]
        return before - len(self.paths)


class _Discovery:
    __slots__ = ("retries", "timer")

    def __init__(self):
        self.retries = 0
        self.timer = None


class Dsr(RoutingAgent):
    name = "dsr"
    HANDLERS = {"RREQ": "handle_rreq", "RREP": "handle_rrep", "RERR": "handle_rerr"}

    RREQ_TIMEOUT = 0.5
    RREQ_RETRIES = 2
    SEEN_EXPIRY = 5.0
    reply_from_cache = False

    def __init__(self, node, net):
        super().__init__(node, net)
        self.cache = RouteCache(node)
        self.next_request_id = 0
        self.seen = {}
        self.discovery = {}
        self.reply_from_cache = getattr(net.config, "dsr_cache_replies", False)

    def route_lookup(self, dest, t=None):
        path = self.cache.lookup(dest, self.now if t is None else t)
        if path is None:
            return None
        return RouteEntry(dest, path[1], len(path) - 1, path=path)

    # -- discovery ----------------------------------------------------------

    def request_route(self, dest):
        if dest in self.discovery or self.route_lookup(dest) is not None:
            return False
        self.discovery[dest] = _Discovery()
        self.originate_discovery(dest)
        return True

    def originate_discovery(self, dest):
        st = self.discovery[dest]
        self.next_request_id += 1
        rreq = DsrRreq(self.id, self.next_request_id, dest, ())
        self.seen[(self.id, rreq.request_id)] = self.now + self.SEEN_EXPIRY
        self.broadcast(rreq)
        st.timer = self.engine.schedule_in(self.RREQ_TIMEOUT * 2 ** st.retries, self.id,
                                           "dsr-rreq-timeout", self._rreq_timeout, dest)
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
            self.originate_discovery(dest)
        else:
            del self.discovery[dest]
            self.drop_buffer(dest)

    def handle_rreq(self, rreq, sender):
        me = self.id
        key = (rreq.src, rreq.request_id)
        exp = self.seen.get(key)
        if (exp is not None and exp > self.now) or me == rreq.src or me in rreq.route_record:
            return "drop"
        if len(self.seen) > 256:
            t = self.now
            self.seen = {k: v for k, v in self.seen.items() if v > t}
        self.seen[key] = self.now + self.SEEN_EXPIRY
        if me == rreq.dest:
            full = (rreq.src,) + rreq.route_record + (me,)
            self.unicast(full[-2], DsrRrep(rreq.src, me, full))
            return "reply"
        self.cache.add((me,) + rreq.route_record[::-1] + (rreq.src,), self.now)
        if self.reply_from_cache:
            cached = self.cache.lookup(rreq.dest, self.now)
            if cached is not None:
                full = (rreq.src,) + rreq.route_record + cached
                if len(set(full)) == len(full):
                    self.unicast(full[full.index(me) - 1], DsrRrep(rreq.src, rreq.dest, full))
                    return "reply"
        self.broadcast(DsrRreq(rreq.src, rreq.request_id, rreq.dest, rreq.route_record + (me,)))
        return "rebroadcast"

    def handle_rrep(self, rrep, sender):
        full = rrep.full_route
        if self.id not in full:
            self.metrics.malformed += 1
            return "drop"
        i = full.index(self.id)
        self.cache.add(full[i:], self.now)
        if i == 0:
            st = self.discovery.pop(rrep.dest, None)
            if st is not None:
                self.engine.cancel(st.timer)
            self.flush(rrep.dest)
            return "consume"
        self.unicast(full[i - 1], rrep)
        return "forward"

    # -- forwarding ---------------------------------------------------------

    def forward_data(self, pkt):
        if pkt.src == self.id and pkt.cursor == 0:
            path = self.cache.lookup(pkt.dest, self.now)
            if path is None:
                return False
            pkt.route = path
        return self.forward_source_routed(pkt)

    def forward_source_routed(self, pkt):
        route, i = pkt.route, pkt.cursor
        if i + 1 >= len(route) or route[i] != self.id:
            self.metrics.malformed += 1
            return False
        pkt.cursor = i + 1
        return self.unicast(route[i + 1], pkt)

    def handle_data(self, pkt, sender):
        route, i = pkt.route, pkt.cursor
        if i >= len(route) or route[i] != self.id:
            self.metrics.malformed += 1
            return "drop"
        if i == len(route) - 1:
            self.metrics.record_delivery(pkt.flow, pkt.seq, pkt.created, self.now, pkt)
            return "deliver"
        return "forward" if self.forward_source_routed(pkt) else "drop"

    def link_failed(self, frame):
        me, nxt = self.id, frame.dest
        self.cache.remove_link(me, nxt)
        pkt = frame.payload
        if pkt.kind != "DATA":
            return
        if pkt.src == me:
            pkt.route, pkt.cursor = (), 0
            self.enqueue(pkt)
            if not self.request_route(pkt.dest):
                self.flush(pkt.dest)
            return
        self.metrics.drop("link-break")
        back = pkt.route[: pkt.cursor][::-1]  # me ... src
        self.unicast(back[1], DsrRerr((me, nxt), back, 1))

    def handle_rerr(self, rerr, sender):
        self.cache.remove_link(*rerr.broken)
        path, i = rerr.path, rerr.cursor
        if i >= len(path) or path[i] != self.id:
            self.metrics.malformed += 1
            return "drop"
        if i == len(path) - 1:
            return "consume"
        self.unicast(path[i + 1], DsrRerr(rerr.broken, path, i + 1))
        return "forward"
