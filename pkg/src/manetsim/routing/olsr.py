"""Optimized Link State Routing: HELLO link sensing, MPR selection,
MPR-restricted TC flooding and hop-count shortest paths."""

import math
from collections import deque
from dataclasses import dataclass
from typing import ClassVar

from manetsim.energy import CONTROL
from manetsim.routing.base import RouteEntry, RoutingAgent

WILL_DEFAULT = 3


@dataclass(frozen=True)
class Hello:
    """One-hop HELLO. The advertised neighbor list is carried as sets:
    ``heard`` (asymmetric links), ``symmetric`` and the originator's MPRs
    (a subset of ``symmetric``)."""

    kind: ClassVar[str] = "HELLO"
    cls: ClassVar[str] = CONTROL

    originator: int
    heard: frozenset
    symmetric: frozenset
    mprs: frozenset
    willingness: int = WILL_DEFAULT

    @property
    def size(self):
        return 16 + 8 * (len(self.heard) + len(self.symmetric))


@dataclass(frozen=True)
class Tc:
    kind: ClassVar[str] = "TC"
    cls: ClassVar[str] = CONTROL

    originator: int
    advertised: frozenset
    ansn: int
    msg_seq: int

    @property
    def size(self):
        return 12 + 4 * len(self.advertised)


def strict_two_hop(node, neighbors, two_hop):
    reach = set()
    for n in neighbors:
        reach |= two_hop.get(n, frozenset())
    reach -= set(neighbors)
    reach.discard(node)
    return reach


def select_mprs(node, neighbors, two_hop):
    """Greedy MPR selection.

    ``neighbors`` are the symmetric one-hop neighbors, ``two_hop`` maps each
    of them to its own symmetric neighbors. Sole covers are taken first, then
    the neighbor covering most still-uncovered nodes (lowest id on ties).
    """
    neighbors = sorted(neighbors)
    targets = strict_two_hop(node, neighbors, two_hop)
    if not targets:
        return frozenset()
    cover = {n: two_hop.get(n, frozenset()) & targets for n in neighbors}
    mprs = set()
    for x in sorted(targets):
        via = [n for n in neighbors if x in cover[n]]
        if len(via) == 1:
            mprs.add(via[0])
    covered = set()
    for m in mprs:
        covered |= cover[m]
    while covered != targets:
        best = min((n for n in neighbors if n not in mprs),
                   key=lambda n: (-len(cover[n] - covered), n))
        mprs.add(best)
        covered |= cover[best]
    return frozenset(mprs)


def shortest_paths(source, adjacency):
    """BFS over ``adjacency`` (node -> iterable of nodes).

    Returns ``{dest: (next_hop, hops)}``. Visiting neighbors in ascending id
    order makes every chosen path the lexicographically smallest among the
    shortest ones, so ties go to the lower next hop, then lower
    intermediates.
    """
    out = {}
    for v in sorted(adjacency.get(source, ())):
        if v != source:
            out[v] = (v, 1)
    q = deque(out)
    while q:
        u = q.popleft()
        nh, hops = out[u]
        hops += 1
        for v in sorted(adjacency.get(u, ())):
            if v not in out and v != source:
                out[v] = (nh, hops)
                q.append(v)
    return out


class Olsr(RoutingAgent):
    name = "olsr"
    proactive = True
    HANDLERS = {"HELLO": "process_hello", "TC": "forward_tc"}

    HELLO_INTERVAL = 2.0
    TC_INTERVAL = 5.0
    NEIGHB_HOLD = 3 * HELLO_INTERVAL
    TOP_HOLD = 3 * TC_INTERVAL
    DUP_HOLD = 30.0

    def __init__(self, node, net):
        super().__init__(node, net)
        self.links = {}          # nbr -> [symmetric, expiry]
        self.two_hop = {}        # sym nbr -> [frozenset, expiry]
        self.selectors = {}      # nbr -> expiry
        self.topology = {}       # originator -> [ansn, frozenset, expiry]
        self.forwarded = {}      # (originator, msg_seq) -> time
        self.mpr_set = frozenset()
        self.ansn = 0
        self.msg_seq = 0
        self.tc_rebroadcasts = 0
        self._advertised = frozenset()
        self._next_purge = math.inf
        self._version = 0
        self._table_version = -1
        self._table = {}

    def start(self):
        rng = self.rng()
        self.engine.schedule_in(rng.uniform(0.0, self.HELLO_INTERVAL), self.id, "olsr-hello",
                                self.emit_hello)
        self.engine.schedule_in(rng.uniform(0.0, self.TC_INTERVAL), self.id, "olsr-tc",
                                self.emit_tc)

    # -- databases ----------------------------------------------------------

    def _expires(self, when):
        if when < self._next_purge:
            self._next_purge = when

    def purge(self, t=None):
        t = self.now if t is None else t
        if t < self._next_purge:
            return
        nxt = math.inf
        dead = [n for n, (_, exp) in self.links.items() if exp <= t]
        for n in dead:
            del self.links[n]
            self.two_hop.pop(n, None)
            self.selectors.pop(n, None)
        changed = bool(dead)
        for n, (_, exp) in list(self.two_hop.items()):
            if exp <= t:
                del self.two_hop[n]
                changed = True
        for n, exp in list(self.selectors.items()):
            if exp <= t:
                del self.selectors[n]
        for o, rec in list(self.topology.items()):
            if rec[2] <= t:
                del self.topology[o]
                changed = True
        if len(self.forwarded) > 512:
            self.forwarded = {k: v for k, v in self.forwarded.items() if t - v < self.DUP_HOLD}
        for _, exp in self.links.values():
            nxt = min(nxt, exp)
        for _, exp in self.two_hop.values():
            nxt = min(nxt, exp)
        for exp in self.selectors.values():
            nxt = min(nxt, exp)
        for rec in self.topology.values():
            nxt = min(nxt, rec[2])
        self._next_purge = nxt
        if changed:
            self._version += 1

    def symmetric_neighbors(self):
        return frozenset(n for n, (sym, _) in self.links.items() if sym)

    def two_hop_map(self):
        return {n: s for n, (s, _) in self.two_hop.items()}

    def compute_mprs(self):
        self.purge()
        self.mpr_set = select_mprs(self.id, self.symmetric_neighbors(), self.two_hop_map())
        audit = self.net.mpr_observer
        if audit is not None:
            audit(self)
        return self.mpr_set

    def mpr_selector_set(self):
        self.purge()
        return frozenset(self.selectors)

    # -- HELLO --------------------------------------------------------------

    def emit_hello(self):
        if not self.alive:
            return
        self.compute_mprs()
        heard = frozenset(n for n, (sym, _) in self.links.items() if not sym)
        self.broadcast(Hello(self.id, heard, self.symmetric_neighbors(), self.mpr_set))
        self.engine.schedule_in(self.HELLO_INTERVAL, self.id, "olsr-hello", self.emit_hello)

    def process_hello(self, hello, sender):
        t = self.now
        me = self.id
        self.purge(t)
        exp = t + self.NEIGHB_HOLD
        sym = me in hello.symmetric or me in hello.heard
        link = self.links.get(sender)
        if link is None or link[0] != sym:
            self._version += 1
        self.links[sender] = [sym, exp]
        if sym:
            reach = hello.symmetric - {me} if me in hello.symmetric else hello.symmetric
            old = self.two_hop.get(sender)
            if old is None or old[0] != reach:
                self._version += 1
            self.two_hop[sender] = [reach, exp]
            if me in hello.mprs:
                self.selectors[sender] = exp
            else:
                self.selectors.pop(sender, None)
        else:
            if self.two_hop.pop(sender, None) is not None:
                self._version += 1
            self.selectors.pop(sender, None)
        self._expires(exp)
        return "consume"

    # -- TC -----------------------------------------------------------------

    def emit_tc(self):
        if not self.alive:
            return
        sel = self.mpr_selector_set()
        if sel != self._advertised:
            self.ansn += 1
            self._advertised = sel
        if sel:
            self.msg_seq += 1
            self.forwarded[(self.id, self.msg_seq)] = self.now
            self.broadcast(Tc(self.id, sel, self.ansn, self.msg_seq))
        self.engine.schedule_in(self.TC_INTERVAL, self.id, "olsr-tc", self.emit_tc)

    def forward_tc(self, tc, sender):
        t = self.now
        self.purge(t)
        link = self.links.get(sender)
        if link is None or not link[0] or tc.originator == self.id:
            return "drop"
        rec = self.topology.get(tc.originator)
        if rec is None or tc.ansn >= rec[0]:
            if rec is None or rec[0] != tc.ansn or rec[1] != tc.advertised:
                self._version += 1
            exp = t + self.TOP_HOLD
            self.topology[tc.originator] = [tc.ansn, tc.advertised, exp]
            self._expires(exp)
        key = (tc.originator, tc.msg_seq)
        if sender in self.selectors and key not in self.forwarded:
            self.forwarded[key] = t
            self.tc_rebroadcasts += 1
            self.broadcast(tc)
            return "rebroadcast"
        return "drop"

    # -- routes -------------------------------------------------------------

    def adjacency(self):
        adj = {self.id: self.symmetric_neighbors()}
        for n, (reach, _) in self.two_hop.items():
            adj[n] = reach
        for o, (_, adv, _) in self.topology.items():
            have = adj.get(o)
            adj[o] = adv if have is None else have | adv
        return adj

    def compute_routing_table(self):
        self.purge()
        if self._table_version != self._version:
            self._table = shortest_paths(self.id, self.adjacency())
            self._table_version = self._version
        return self._table

    def route_lookup(self, dest, t=None):
        hit = self.compute_routing_table().get(dest)
        if hit is None:
            return None
        return RouteEntry(dest, hit[0], hit[1])

    def request_route(self, dest):
        return False

    def link_failed(self, frame):
        nbr = frame.dest
        if self.links.pop(nbr, None) is not None:
            self.two_hop.pop(nbr, None)
            self.selectors.pop(nbr, None)
            self._version += 1
        if frame.payload.kind == "DATA":
            self.metrics.drop("link-break")
