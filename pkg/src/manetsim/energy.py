"""Per-node energy ledgers.

A packet of ``size`` bytes costs ``power * size * 8 / bandwidth`` joules to
send or receive. Idle listening power accrues over wall-clock time on top of
the per-packet charges.
"""

from dataclasses import dataclass, fields

CONTROL = "control"
DATA = "data"
CATEGORIES = ("control_tx", "control_rx", "data_tx", "data_rx", "idle")


@dataclass(frozen=True)
class EnergyParams:
    initial: float = 100.0
    idle_power: float = 0.2818
    rx_power: float = 1.1
    tx_power: float = 1.65
    transition_power: float = 0.6
    sleep_power: float = 0.001
    transition_time: float = 0.005
    bandwidth: float = 2e6

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"energy.{f.name} must be positive")

    def airtime(self, size):
        return size * 8 / self.bandwidth

    def tx_energy(self, size):
        return self.tx_power * size * 8 / self.bandwidth

    def rx_energy(self, size):
        return self.rx_power * size * 8 / self.bandwidth


@dataclass(frozen=True)
class LedgerSnapshot:
    node: int
    initial: float
    residual: float
    control_tx: float
    control_rx: float
    data_tx: float
    data_rx: float
    idle: float
    alive: bool
    last_idle_accrual_at: float

    @property
    def control_energy(self):
        return self.control_tx + self.control_rx

    @property
    def consumed(self):
        return self.control_tx + self.control_rx + self.data_tx + self.data_rx + self.idle


class _Ledger:
    __slots__ = ("residual", "control_tx", "control_rx", "data_tx", "data_rx", "idle",
                 "alive", "last_idle_accrual_at", "sleeping")

    def __init__(self, initial):
        self.residual = initial
        self.control_tx = self.control_rx = self.data_tx = self.data_rx = self.idle = 0.0
        self.alive = True
        self.last_idle_accrual_at = 0.0
        self.sleeping = False


class EnergyModel:
    """Energy ledgers for nodes ``0..n-1``.

    Charges against a dead node are no-ops returning 0. A charge that
    crosses zero is applied in full (residual may go slightly negative) and
    the node dies; idle accrual stops exactly at exhaustion instead.
    """

    def __init__(self, n, params=None, on_death=None):
        self.params = params or EnergyParams()
        self._ledgers = [_Ledger(self.params.initial) for _ in range(n)]
        self.on_death = on_death

    def __len__(self):
        return len(self._ledgers)

    def alive(self, node):
        return self._ledgers[node].alive

    def residual(self, node):
        return self._ledgers[node].residual

    def _debit(self, node, led, category, joules, t):
        setattr(led, category, getattr(led, category) + joules)
        led.residual -= joules
        if led.residual <= 0.0 and led.alive:
            led.alive = False
            if self.on_death is not None:
                self.on_death(node, t)

    def accrue_idle(self, node, up_to):
        led = self._ledgers[node]
        if up_to < led.last_idle_accrual_at:
            raise ValueError(f"idle accrual for node {node} would move backwards to t={up_to!r}")
        if not led.alive:
            led.last_idle_accrual_at = up_to
            return 0.0
        p = self.params
        power = p.sleep_power if led.sleeping else p.idle_power
        joules = min(power * (up_to - led.last_idle_accrual_at), led.residual)
        led.last_idle_accrual_at = up_to
        if joules > 0.0:
            self._debit(node, led, "idle", joules, up_to)
        return joules

    def charge_tx(self, node, size, cls, t=None):
        led = self._ledgers[node]
        if t is not None:
            self.accrue_idle(node, t)
        if not led.alive:
            return 0.0
        joules = self.params.tx_energy(size)
        self._debit(node, led, "control_tx" if cls == CONTROL else "data_tx", joules, t)
        return joules

    def charge_rx(self, node, size, cls, t=None):
        led = self._ledgers[node]
        if t is not None:
            self.accrue_idle(node, t)
        if not led.alive:
            return 0.0
        joules = self.params.rx_energy(size)
        self._debit(node, led, "control_rx" if cls == CONTROL else "data_rx", joules, t)
        return joules

    def sleep(self, node, t):
        """Enter low-power sleep; idle accrual switches to ``sleep_power``."""
        self.accrue_idle(node, t)
        self._ledgers[node].sleeping = True

    def wake(self, node, t):
        """Leave sleep, paying one radio transition (booked as idle energy)."""
        led = self._ledgers[node]
        self.accrue_idle(node, t)
        if led.sleeping and led.alive:
            led.sleeping = False
            p = self.params
            self._debit(node, led, "idle", p.transition_power * p.transition_time, t)
        led.sleeping = False

    def report(self, node):
        led = self._ledgers[node]
        return LedgerSnapshot(
            node=node,
            initial=self.params.initial,
            residual=led.residual,
            control_tx=led.control_tx,
            control_rx=led.control_rx,
            data_tx=led.data_tx,
            data_rx=led.data_rx,
            idle=led.idle,
            alive=led.alive,
            last_idle_accrual_at=led.last_idle_accrual_at,
        )

    def flush(self, t):
        for node in range(len(self._ledgers)):
            self.accrue_idle(node, t)
