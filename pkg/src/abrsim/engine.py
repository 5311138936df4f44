"""Deterministic discrete-event engine: clock, event queue, cells and links.

Simulated time is held as integer nanoseconds so that tie-breaking and
replayability are exact; floating-point time would drift over the 10^7-10^8
events of a full run.
"""

from __future__ import annotations

import heapq

# One ATM cell: 53 bytes on the wire, 48 of them payload.
CELL_BYTES = 53
CELL_BITS = CELL_BYTES * 8  # 424
CELL_PAYLOAD_BYTES = 48

# Default line rate (payload rate of an OC-3c style link).
DEFAULT_LINK_RATE_BPS = 149.76e6

# Standard fiber propagation figure: 5 us per km.
PROP_NS_PER_KM = 5_000

NS_PER_S = 1_000_000_000
NS_PER_MS = 1_000_000
NS_PER_US = 1_000

# Cell service classes and kinds.
ABR = 0
VBR = 1
DATA = 0
RM = 1
FORWARD = 0
BACKWARD = 1


def link_cell_rate(rate_bps: float = DEFAULT_LINK_RATE_BPS) -> float:
    """Cells per second carried by a link of the given bit rate."""
    return rate_bps / CELL_BITS


class Cell:
    """A 53-byte ATM cell, data or RM, tagged with its VC and service class.

    Identical data cells of one VC are interchangeable, so callers may share a
    single instance across many transmissions; RM cells are mutated in flight
    (switches rewrite ER) and must be one instance each.
    """

    __slots__ = ("vc", "service", "kind", "direction", "er", "ccr", "payload")

    def __init__(self, vc, service, kind=DATA, direction=FORWARD,
                 er=0.0, ccr=0.0, payload=None):
        self.vc = vc
        self.service = service
        self.kind = kind
        self.direction = direction
        self.er = er  # cells/s, RM cells only
        self.ccr = ccr  # cells/s, RM cells only
        self.payload = payload

    def __repr__(self):
        svc = "VBR" if self.service == VBR else "ABR"
        kind = "RM" if self.kind == RM else "DATA"
        return f"Cell(vc={self.vc}, {svc}, {kind})"


def make_brm(frm: Cell) -> Cell:
    """Turn a forward RM cell around at the destination, fields preserved."""
    if frm.kind != RM or frm.direction != FORWARD:
        raise ValueError("turnaround requires a forward RM cell")
    return Cell(frm.vc, frm.service, RM, BACKWARD, er=frm.er, ccr=frm.ccr)


class SchedulingError(Exception):
    """An event was scheduled in the past."""


class Simulator:
    """Time-ordered event queue with FIFO tie-break at equal timestamps."""

    def __init__(self):
        self.now = 0  # ns
        self._queue = []
        self._seq = 0

    def schedule(self, at: int, fn, arg=None) -> None:
        """Run ``fn(arg)`` at simulated time ``at`` (ns)."""
        if at < self.now:
            raise SchedulingError(f"schedule at t={at} ns before now={self.now} ns")
        heapq.heappush(self._queue, (at, self._seq, fn, arg))
        self._seq += 1

    def run_until(self, t_end: int) -> None:
        """Dispatch every event with time <= t_end, then set the clock to t_end."""
        if t_end < self.now:
            raise SchedulingError(f"run_until t={t_end} ns before now={self.now} ns")
        queue = self._queue
        pop = heapq.heappop
        while queue and queue[0][0] <= t_end:
            t, _, fn, arg = pop(queue)
            self.now = t
            fn(arg)
        self.now = t_end

    def pending(self) -> int:
        return len(self._queue)


class Link:
    """Point-to-point FIFO link: per-cell serialization plus propagation.

    The link serializes cells one at a time; a transmit requested while the
    link is busy starts when the previous cell's last bit has left.
    """

    __slots__ = ("rate_bps", "prop_ns", "ser_ns", "busy_until")

    def __init__(self, rate_bps: float = DEFAULT_LINK_RATE_BPS, prop_ns: int = 0):
        if rate_bps <= 0:
            raise ValueError("link rate must be positive")
        if prop_ns < 0:
            raise ValueError("propagation delay must be non-negative")
        self.rate_bps = rate_bps
        self.prop_ns = int(prop_ns)
        self.ser_ns = round(CELL_BITS * NS_PER_S / rate_bps)
        self.busy_until = 0

    def transmit(self, at: int) -> int:
        """Queue one cell for transmission at time ``at``; return its arrival
        time at the far end."""
        start = at if at > self.busy_until else self.busy_until
        done = start + self.ser_ns
        self.busy_until = done
        return done + self.prop_ns
