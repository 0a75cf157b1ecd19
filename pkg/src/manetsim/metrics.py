"""Run statistics collection and CSV export."""

import csv
import os
from collections import Counter
from dataclasses import dataclass, field

SUMMARY_FIELDS = ["protocol", "nodes", "seed", "duration_s", "control_energy_J",
                  "total_energy_J", "data_sent", "data_recv", "pdr", "mean_delay_s",
                  "ctrl_frames", "dead_nodes"]
NODE_FIELDS = ["protocol", "nodes", "seed", "node_id", "residual_J", "control_tx_J",
               "control_rx_J", "data_tx_J", "data_rx_J", "idle_J", "alive_at_end"]
MEAN_FIELDS = ["protocol", "nodes", "mean_control_energy_J", "stddev"]


def fmt(x):
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return format(x, ".9g")
    return str(x)


class Metrics:
    def __init__(self):
        self.sent = {}           # (flow, seq) -> sent_at
        self.send_result = {}    # (flow, seq) -> "sent" | "queued" | "dropped"
        self.received = {}       # (flow, seq) -> received_at
        self.delay_sum = 0.0
        self.duplicates = 0
        self.malformed = 0
        self.drops = Counter()
        self.deliveries = []     # (packet, received_at), kept when keep_packets
        self.keep_packets = False

    def offered(self, pkt):
        self.sent[(pkt.flow, pkt.seq)] = pkt.created

    def note_send_result(self, pkt, result):
        self.send_result[(pkt.flow, pkt.seq)] = result

    def drop(self, reason):
        self.drops[reason] += 1

    def record_delivery(self, flow, seq, sent_at, received_at, pkt=None):
        if received_at < sent_at:
            raise ValueError("delivery before send")
        key = (flow, seq)
        if key in self.received:
            self.duplicates += 1
            return False
        self.received[key] = received_at
        self.delay_sum += received_at - sent_at
        if self.keep_packets and pkt is not None:
            self.deliveries.append((pkt, received_at))
        return True

    @property
    def pdr(self):
        return len(self.received) / len(self.sent) if self.sent else 1.0

    def finalize(self, protocol, nodes, seed, t_end, energy, ctrl_frames):
        ledgers = tuple(energy.report(i) for i in range(len(energy)))
        sent = len(self.sent)
        recv = len(self.received)
        return RunStats(
            protocol=protocol,
            nodes=nodes,
            seed=seed,
            duration=t_end,
            ledgers=ledgers,
            control_energy=sum(l.control_energy for l in ledgers),
            total_energy=sum(l.consumed for l in ledgers),
            data_sent=sent,
            data_recv=recv,
            pdr=recv / sent if sent else 1.0,
            no_traffic=sent == 0,
            mean_delay=self.delay_sum / recv if recv else 0.0,
            ctrl_frames=dict(sorted(ctrl_frames.items())),
            dead_nodes=sum(1 for l in ledgers if not l.alive),
            drops=dict(sorted(self.drops.items())),
            duplicates=self.duplicates,
            malformed=self.malformed,
        )


@dataclass(frozen=True)
class RunStats:
    protocol: str
    nodes: int
    seed: int
    duration: float
    ledgers: tuple
    control_energy: float
    total_energy: float
    data_sent: int
    data_recv: int
    pdr: float
    no_traffic: bool
    mean_delay: float
    ctrl_frames: dict = field(default_factory=dict)
    dead_nodes: int = 0
    drops: dict = field(default_factory=dict)
    duplicates: int = 0
    malformed: int = 0

    @property
    def ctrl_frame_total(self):
        return sum(self.ctrl_frames.values())

    def summary_row(self):
        return [self.protocol, self.nodes, self.seed, float(self.duration),
                self.control_energy, self.total_energy, self.data_sent, self.data_recv,
                float(self.pdr), self.mean_delay, self.ctrl_frame_total, self.dead_nodes]

    def node_rows(self):
        for l in self.ledgers:
            yield [self.protocol, self.nodes, self.seed, l.node, l.residual, l.control_tx,
                   l.control_rx, l.data_tx, l.data_rx, l.idle, l.alive]


def _write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_csv(stats, directory, prefix=""):
    """Write ``<prefix>summary.csv`` and ``<prefix>nodes.csv`` for one or more runs.

    Rows are ordered by (protocol, nodes, seed) and node id.
    """
    runs = [stats] if isinstance(stats, RunStats) else list(stats)
    runs.sort(key=lambda s: (s.protocol, s.nodes, s.seed))
    os.makedirs(directory, exist_ok=True)
    summary = os.path.join(directory, f"{prefix}summary.csv")
    nodes = os.path.join(directory, f"{prefix}nodes.csv")
    _write(summary, SUMMARY_FIELDS, (s.summary_row() for s in runs))
    _write(nodes, NODE_FIELDS, (row for s in runs for row in s.node_rows()))
    return summary, nodes


def write_means(rows, path):
    """``rows``: iterable of (protocol, nodes, mean, stddev)."""
    _write(path, MEAN_FIELDS, sorted(rows))
    return path
