"""Unit-disk radio channel.

No collisions and no carrier sense: a frame reaches every alive node within
``range`` of the sender at send time. Unicast to a node out of range is
reported back to the sender as a link failure, standing in for missing
link-layer acknowledgements.
"""

from collections import Counter
from dataclasses import dataclass

from manetsim.energy import CONTROL

BROADCAST = None


@dataclass(frozen=True)
class RadioConfig:
    range: float = 250.0
    bandwidth: float = 2e6
    propagation_delay: float = 1e-6
    broadcast_jitter_max: float = 0.01
    loss_probability: float = 0.0

    def __post_init__(self):
        if not self.range > 0:
            raise ValueError("radio.range must be positive")
        if not self.bandwidth > 0:
            raise ValueError("radio.bandwidth must be positive")
        if self.propagation_delay < 0:
            raise ValueError("radio.propagation_delay must be non-negative")
        if self.broadcast_jitter_max < 0:
            raise ValueError("radio.broadcast_jitter_max must be non-negative")
        if not 0.0 <= self.loss_probability <= 1.0:
            raise ValueError("radio.loss_probability must lie in [0, 1]")


@dataclass(frozen=True)
class Frame:
    src: int
    dest: object  # node id, or BROADCAST
    payload: object
    size: int
    cls: str = CONTROL

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("frame size must be at least 1 byte")

    @property
    def is_broadcast(self):
        return self.dest is BROADCAST


def tx_duration(size, bandwidth):
    if size < 1:
        raise ValueError("frame size must be at least 1 byte")
    return size * 8 / bandwidth


class Radio:
    def __init__(self, engine, mobility, energy, config=None, log_frames=False):
        self.engine = engine
        self.mobility = mobility
        self.energy = energy
        self.config = config or RadioConfig()
        self.n = mobility.n
        self._range_sq = self.config.range ** 2
        self._pos_t = None
        self._pos = None
        self._rngs = {}
        self.receive = None        # receive(node, frame)
        self.link_failed = None    # link_failed(node, frame)
        self.frame_log = [] if log_frames else None
        self.ctrl_frames = Counter()
        self.data_frames = 0
        self.tx_count = 0

    def _rng(self, node):
        rng = self._rngs.get(node)
        if rng is None:
            rng = self._rngs[node] = self.engine.rng_stream("radio", node)
        return rng

    def positions(self, t):
        if self._pos_t != t:
            pos = self.mobility.position_at
            self._pos = [pos(i, t) for i in range(self.n)]
            self._pos_t = t
        return self._pos

    def in_range(self, a, b, t):
        pos = self.positions(t)
        pa, pb = pos[a], pos[b]
        dx, dy = pa.x - pb.x, pa.y - pb.y
        return dx * dx + dy * dy <= self._range_sq

    def neighbors(self, node, t):
        """Ids within range of ``node`` at ``t`` (alive or not), ascending."""
        pos = self.positions(t)
        p = pos[node]
        x, y, r2 = p.x, p.y, self._range_sq
        out = []
        for j, q in enumerate(pos):
            if j != node:
                dx, dy = q.x - x, q.y - y
                if dx * dx + dy * dy <= r2:
                    out.append(j)
        return out

    def tx_duration(self, size):
        return tx_duration(size, self.config.bandwidth)

    def transmit(self, frame):
        """Put ``frame`` on the air now. Returns False if the sender is dead."""
        src = frame.src
        eng = self.engine
        t = eng.now
        energy = self.energy
        # idle accrual up to now may itself exhaust the sender
        energy.accrue_idle(src, t)
        if not energy.alive(src):
            return False
        energy.charge_tx(src, frame.size, frame.cls, t)
        self.tx_count += 1
        if frame.cls == CONTROL:
            self.ctrl_frames[frame.payload.kind] += 1
        else:
            self.data_frames += 1
        if self.frame_log is not None:
            self.frame_log.append(("tx", t, src, frame.size, frame.cls))
        cfg = self.config
        delay = self.tx_duration(frame.size) + cfg.propagation_delay
        if frame.dest is BROADCAST:
            receivers = self.neighbors(src, t)
            if cfg.loss_probability > 0.0:
                rng = self._rng(src)
                receivers = [r for r in receivers if rng.random() >= cfg.loss_probability]
            if cfg.broadcast_jitter_max > 0.0:
                delay += self._rng(src).uniform(0.0, cfg.broadcast_jitter_max)
            if receivers:
                eng.schedule(t + delay, src, "deliver", self._deliver, frame, receivers)
        else:
            dest = frame.dest
            if not self.in_range(src, dest, t):
                eng.schedule(t + self.tx_duration(frame.size), src, "link-fail",
                             self._fail, frame)
            elif cfg.loss_probability > 0.0 and self._rng(src).random() < cfg.loss_probability:
                pass
            else:
                eng.schedule(t + delay, dest, "deliver", self._deliver, frame, (dest,))
        return True

    def _deliver(self, frame, receivers):
        energy = self.energy
        t = self.engine.now
        log = self.frame_log
        for r in receivers:
            energy.accrue_idle(r, t)
            if not energy.alive(r):
                continue
            energy.charge_rx(r, frame.size, frame.cls, t)
            if log is not None:
                log.append(("rx", t, r, frame.size, frame.cls))
            if energy.alive(r):
                self.receive(r, frame)

    def _fail(self, frame):
        if self.energy.alive(frame.src):
            self.link_failed(frame.src, frame)
