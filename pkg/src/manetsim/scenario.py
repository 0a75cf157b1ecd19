"""Scenario configuration and single-run assembly."""

import os
from dataclasses import dataclass, field, fields

from manetsim.energy import EnergyModel, EnergyParams
from manetsim.engine import SYSTEM, Engine
from manetsim.metrics import Metrics, write_csv
from manetsim.mobility import Area, RandomWaypoint
from manetsim.radio import Radio, RadioConfig
from manetsim.routing import PROTOCOLS
from manetsim.workload import CbrSource, WorkloadConfig, make_flows


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class OutputError(OSError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    protocol: str = "aodv"
    nodes: int = 50
    seed: int = 1
    duration: float = 130.0
    pause: float = 10.0
    speed_max: float = 20.0
    speed_min: float = 1.0
    area_width: float = 500.0
    area_height: float = 500.0
    radio: RadioConfig = field(default_factory=RadioConfig)
    energy: EnergyParams = field(default_factory=EnergyParams)
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    dsr_cache_replies: bool = False
    output_dir: str = "results"

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError("protocol", f"unknown protocol {self.protocol!r} "
                                          f"(choose from {', '.join(sorted(PROTOCOLS))})")
        if self.nodes < 1:
            raise ConfigError("nodes", "need at least one node")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed", "must be a 64-bit unsigned integer")
        if not self.duration > 0:
            raise ConfigError("duration", "must be positive")
        if self.pause < 0:
            raise ConfigError("pause", "must be non-negative")
        if not self.speed_min > 0:
            raise ConfigError("speed_min", "must be positive")
        if self.speed_max < self.speed_min:
            raise ConfigError("speed_max", "must be at least speed_min")
        if not self.area_width > 0:
            raise ConfigError("area_width", "must be positive")
        if not self.area_height > 0:
            raise ConfigError("area_height", "must be positive")
        if self.radio.bandwidth != self.energy.bandwidth:
            raise ConfigError("radio.bandwidth", "must equal energy.bandwidth (airtime is shared)")
        if self.workload.stop > self.duration:
            raise ConfigError("workload.stop", "flows must stop within the run duration")

    @property
    def area(self):
        return Area(self.area_width, self.area_height)

    @property
    def tag(self):
        return f"{self.protocol}_n{self.nodes}_s{self.seed}"


class Network:
    """Everything one run needs: engine, mobility, radio, energy, agents, flows."""

    def __init__(self, config, mobility=None, flows=None, trace=None, mobility_trace=None,
                 log_frames=False, route_observer=None, mpr_observer=None):
        self.config = config
        self.n = config.nodes
        self.engine = Engine(config.seed, trace=trace)
        if mobility is None:
            mobility = RandomWaypoint(
                config.nodes, lambda i: self.engine.rng_stream("mobility", i),
                area=config.area, speed_min=config.speed_min, speed_max=config.speed_max,
                pause=config.pause, horizon=config.duration)
        if mobility.n != config.nodes:
            raise ValueError("mobility model covers a different number of nodes")
        self.mobility = mobility
        self.mobility_trace = mobility_trace
        self.energy = EnergyModel(config.nodes, config.energy, on_death=self._on_death)
        self.radio = Radio(self.engine, mobility, self.energy, config.radio, log_frames)
        self.radio.receive = self._receive
        self.radio.link_failed = self._link_failed
        self.metrics = Metrics()
        self.route_observer = route_observer
        self.mpr_observer = mpr_observer
        agent_cls = PROTOCOLS[config.protocol]
        self.agents = [agent_cls(i, self) for i in range(config.nodes)]
        if flows is None:
            flows = make_flows(config.nodes, config.workload, self.engine.rng_stream("workload", SYSTEM))
        self.flows = list(flows)
        self.sources = [CbrSource(f, self) for f in self.flows]
        self.deaths = {}
        self._started = False

    def _receive(self, node, frame):
        self.agents[node].receive(frame)

    def _link_failed(self, node, frame):
        self.agents[node].link_failed(frame)

    def _on_death(self, node, t):
        self.deaths[node] = t
        self.agents[node].on_death()

    def start(self):
        if self._started:
            return
        self._started = True
        if self.mobility_trace is not None:
            for i in range(self.n):
                p = self.mobility.initial_position(i)
                self.mobility_trace(f"t={0.0:.9f} node={i} x={p.x:.6f} y={p.y:.6f}")
        if hasattr(self.mobility, "leg"):
            for i in range(self.n):
                self._schedule_leg(i, 0)
        for agent in self.agents:
            agent.start()
        for src in self.sources:
            src.start()

    def _schedule_leg(self, node, i):
        leg = self.mobility.leg(node, i)
        if leg.depart_at <= self.config.duration:
            self.engine.schedule(leg.depart_at, node, "mobility-leg", self._leg_departs, node, i)

    def _leg_departs(self, node, i):
        if self.mobility_trace is not None:
            p = self.mobility.leg(node, i).origin
            self.mobility_trace(f"t={self.engine.now:.9f} node={node} x={p.x:.6f} y={p.y:.6f}")
        self._schedule_leg(node, i + 1)

    def run(self, until=None):
        self.start()
        until = self.config.duration if until is None else until
        self.engine.run(until)
        return until

    def finalize(self):
        t_end = self.engine.now
        self.energy.flush(t_end)
        return self.metrics.finalize(self.config.protocol, self.config.nodes, self.config.seed,
                                     t_end, self.energy, self.radio.ctrl_frames)


def simulate(config, **kwargs):
    """Run one scenario to completion and return ``(RunStats, Network)``."""
    net = Network(config, **kwargs)
    net.run()
    return net.finalize(), net


def run_scenario(config, write=True, trace=False, mobility_trace=False):
    """Run ``config`` end to end; optionally write CSVs (and traces) to
    ``config.output_dir``. Returns the RunStats."""
    events, legs = [], []
    stats, _ = simulate(config,
                        trace=events.append if trace else None,
                        mobility_trace=legs.append if mobility_trace else None)
    if write:
        out = config.output_dir
        prefix = config.tag + "_"
        try:
            write_csv(stats, out, prefix=prefix)
            if trace:
                _write_lines(os.path.join(out, prefix + "events.trace"), events)
            if mobility_trace:
                _write_lines(os.path.join(out, prefix + "mobility.trace"), legs)
        except OSError as exc:
            raise OutputError(f"cannot write results to {out!r}: {exc}") from exc
    return stats


def _write_lines(path, lines):
    with open(path, "w") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def config_keys():
    """Flat and dotted keys accepted by the config file and ``--set``."""
    keys = {}
    for f in fields(ScenarioConfig):
        if f.name in ("radio", "energy", "workload"):
            sub = {"radio": RadioConfig, "energy": EnergyParams, "workload": WorkloadConfig}[f.name]
            for g in fields(sub):
                keys[f"{f.name}.{g.name}"] = g.type
        else:
            keys[f.name] = f.type
    return keys
