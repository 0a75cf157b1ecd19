"""Constant-bit-rate traffic sources."""

from dataclasses import dataclass

from manetsim.routing.base import DataPacket


@dataclass(frozen=True)
class WorkloadConfig:
    flows: int = 10
    interval: float = 0.25
    packet_size: int = 512
    start_min: float = 5.0
    start_max: float = 15.0
    stop: float = 125.0

    def __post_init__(self):
        if self.flows < 0:
            raise ValueError("workload.flows must be non-negative")
        if not self.interval > 0:
            raise ValueError("workload.interval must be positive")
        if self.packet_size < 1:
            raise ValueError("workload.packet_size must be at least 1 byte")
        if not 0 <= self.start_min <= self.start_max:
            raise ValueError("workload.start_min must lie in [0, workload.start_max]")
        if not self.start_max < self.stop:
            raise ValueError("workload.stop must exceed workload.start_max")


@dataclass(frozen=True)
class CbrFlow:
    flow_id: int
    src: int
    dest: int
    packet_size: int
    interval: float
    start: float
    stop: float

    def __post_init__(self):
        if self.src == self.dest:
            raise ValueError("flow source and destination must differ")
        if not self.start < self.stop:
            raise ValueError("flow must start before it stops")

    def offered(self):
        """Number of packets the flow will offer over its window."""
        k = 0
        while self.start + k * self.interval < self.stop:
            k += 1
        return k


def make_flows(n, cfg, rng):
    """Draw ``cfg.flows`` distinct (src, dest) pairs with staggered starts."""
    pairs = set()
    flows = []
    count = min(cfg.flows, n * (n - 1))
    while len(flows) < count:
        src, dest = rng.randrange(n), rng.randrange(n)
        if src == dest or (src, dest) in pairs:
            continue
        pairs.add((src, dest))
        start = rng.uniform(cfg.start_min, cfg.start_max)
        flows.append(CbrFlow(len(flows), src, dest, cfg.packet_size, cfg.interval, start, cfg.stop))
    return flows


class CbrSource:
    """Drives one flow: one packet per tick handed to the source's agent."""

    def __init__(self, flow, net):
        self.flow = flow
        self.net = net
        self.k = 0

    def start(self):
        self.net.engine.schedule(self.flow.start, self.flow.src, "flow-tick", self.tick)

    def tick(self):
        f = self.flow
        net = self.net
        if not net.energy.alive(f.src):
            return None
        t = net.engine.now
        pkt = DataPacket(f.flow_id, self.k, f.src, f.dest, f.packet_size, t)
        self.k += 1
        net.metrics.offered(pkt)
        result = net.agents[f.src].send_data(pkt)
        net.metrics.note_send_result(pkt, result)
        nxt = f.start + self.k * f.interval
        if nxt < f.stop:
            net.engine.schedule(nxt, f.src, "flow-tick", self.tick)
        return result
