"""Random Waypoint mobility with lazily generated legs."""

import bisect
import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def distance(self, other):
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Area:
    width: float = 500.0
    height: float = 500.0

    def contains(self, p):
        return 0.0 <= p.x <= self.width and 0.0 <= p.y <= self.height


@dataclass(frozen=True)
class MobilityLeg:
    """Pause at ``origin`` from ``pause_start`` until ``depart_at``, then move
    in a straight line to ``destination`` at constant ``speed``."""

    origin: Position
    destination: Position
    speed: float
    pause_start: float
    depart_at: float
    travel_time: float = field(init=False, repr=False)
    arrive_at: float = field(init=False, repr=False)

    def __post_init__(self):
        tt = self.origin.distance(self.destination) / self.speed
        object.__setattr__(self, "travel_time", tt)
        object.__setattr__(self, "arrive_at", self.depart_at + tt)

    @property
    def pause_until(self):
        return self.depart_at

    def position_at(self, t):
        if t <= self.depart_at:
            return self.origin
        if t >= self.arrive_at:
            return self.destination
        frac = (t - self.depart_at) / self.travel_time
        o, d = self.origin, self.destination
        return Position(o.x + frac * (d.x - o.x), o.y + frac * (d.y - o.y))


def uniform_position(area, rng):
    return Position(rng.uniform(0.0, area.width), rng.uniform(0.0, area.height))


def init_positions(n, area, rng):
    """Draw ``n`` independent uniform positions from one stream."""
    if n < 1:
        raise ValueError("need at least one node")
    return [uniform_position(area, rng) for _ in range(n)]


def next_leg(origin, now, rng, area, speed_min, speed_max, pause):
    dest = uniform_position(area, rng)
    speed = rng.uniform(speed_min, speed_max)
    return MobilityLeg(origin, dest, speed, now, now + pause)


class RandomWaypoint:
    """Per-node Random Waypoint trajectories.

    Each node draws its start position and all later legs from its own
    stream, so trajectories do not depend on the node count or on anything
    the routing layer does with randomness.
    """

    def __init__(self, n, streams, area=None, speed_min=1.0, speed_max=20.0, pause=10.0,
                 horizon=math.inf):
        if not 0.0 < speed_min <= speed_max:
            raise ValueError("need 0 < speed_min <= speed_max")
        if pause < 0:
            raise ValueError("pause must be non-negative")
        self.n = n
        self.area = area or Area()
        self.speed_min = speed_min
        self.speed_max = speed_max
        self.pause = pause
        self.horizon = horizon
        self._rngs = [streams(i) for i in range(n)]
        self._legs = []
        self._starts = []
        self._cursor = [0] * n
        for i, rng in enumerate(self._rngs):
            start = uniform_position(self.area, rng)
            leg = next_leg(start, 0.0, rng, self.area, speed_min, speed_max, pause)
            self._legs.append([leg])
            self._starts.append([0.0])

    def initial_position(self, node):
        return self._legs[node][0].origin

    def _extend(self, node, t):
        legs = self._legs[node]
        starts = self._starts[node]
        rng = self._rngs[node]
        while legs[-1].arrive_at < t:
            last = legs[-1]
            leg = next_leg(last.destination, last.arrive_at, rng, self.area,
                           self.speed_min, self.speed_max, self.pause)
            legs.append(leg)
            starts.append(leg.pause_start)

    def leg_at(self, node, t):
        if t < 0 or t > self.horizon:
            raise ValueError(f"t={t!r} outside the simulated horizon [0, {self.horizon}]")
        legs = self._legs[node]
        if legs[-1].arrive_at < t:
            self._extend(node, t)
        i = self._cursor[node]
        leg = legs[i]
        if not (leg.pause_start <= t <= leg.arrive_at):
            i = bisect.bisect_right(self._starts[node], t) - 1
            self._cursor[node] = i
            leg = legs[i]
        return leg

    def position_at(self, node, t):
        return self.leg_at(node, t).position_at(t)

    def leg(self, node, i):
        """The ``i``-th leg of ``node`` (0 starts at t=0)."""
        legs = self._legs[node]
        while len(legs) <= i:
            self._extend(node, legs[-1].arrive_at + 1e-9)
        return legs[i]

    def legs_until(self, node, t):
        """All legs whose pause begins at or before ``t``."""
        self._extend(node, t)
        legs = self._legs[node]
        return legs[:bisect.bisect_right(self._starts[node], t)]


class StaticPlacement:
    """Fixed positions; same query interface as RandomWaypoint."""

    def __init__(self, positions, horizon=math.inf):
        self._pos = [p if isinstance(p, Position) else Position(*p) for p in positions]
        self.n = len(self._pos)
        self.horizon = horizon
        self.speed_max = 0.0

    def initial_position(self, node):
        return self._pos[node]

    def position_at(self, node, t):
        if t < 0 or t > self.horizon:
            raise ValueError(f"t={t!r} outside the simulated horizon [0, {self.horizon}]")
        return self._pos[node]

    def legs_until(self, node, t):
        return []
