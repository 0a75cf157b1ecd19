import math
import random
import sys
from collections import deque
from dataclasses import replace

import pytest

from manetsim.mobility import StaticPlacement
from manetsim.radio import RadioConfig
from manetsim.scenario import Network, ScenarioConfig
from manetsim.workload import CbrFlow, WorkloadConfig

NO_FLOWS = WorkloadConfig(flows=0)


def static_net(positions, protocol="aodv", flows=(), jitter=0.0, duration=130.0, **kw):
    cfg = ScenarioConfig(protocol=protocol, nodes=len(positions), duration=duration,
                         radio=RadioConfig(broadcast_jitter_max=jitter), workload=NO_FLOWS,
                         seed=kw.pop("seed", 1))
    return Network(cfg, mobility=StaticPlacement(positions), flows=list(flows), **kw)


def line(n, spacing=200.0):
    return [(i * spacing, 0.0) for i in range(n)]


def flow(src, dest, start=1.0, stop=2.0, interval=0.25, fid=0):
    return CbrFlow(fid, src, dest, 512, interval, start, stop)


def unit_disk_adjacency(positions, rng=250.0):
    adj = {i: set() for i in range(len(positions))}
    for i, a in enumerate(positions):
        for j, b in enumerate(positions):
            if i != j and math.dist(a, b) <= rng:
                adj[i].add(j)
    return adj


def bfs_dist(adj, src):
    dist = {src: 0}
    q = deque([src])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


def random_connected_topology(seed, max_nodes=15, side=600.0, rng_m=250.0):
    """Rejection-sample a connected unit-disk placement of 3..max_nodes nodes."""
    r = random.Random(seed)
    while True:
        n = r.randint(3, max_nodes)
        pos = [(r.uniform(0, side), r.uniform(0, side)) for _ in range(n)]
        adj = unit_disk_adjacency(pos, rng_m)
        if len(bfs_dist(adj, 0)) == n:
            return pos, adj


@pytest.fixture
def make_static():
    return static_net


# acceptance verdicts, echoed again in the terminal summary
ACCEPTANCE = []


def record(criterion, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE.append(line)
    sys.__stdout__.write("\n" + line + "\n")
    sys.__stdout__.flush()
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
