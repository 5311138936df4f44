"""Output-queued ATM switch port: strict VBR-over-ABR priority plus the
ERICA+ explicit-rate computation for ABR feedback.

Per averaging interval (500 ABR input cells or 5 ms, whichever first) the
port measures VBR output and ABR input, scales the leftover capacity by a
queue-control function targeting a fixed queueing delay, and allocates
per-VC explicit rates written into backward RM cells.
"""

from __future__ import annotations

from dataclasses import dataclass

from .engine import (ABR, BACKWARD, FORWARD, NS_PER_MS, NS_PER_S, NS_PER_US,
                     RM, VBR, Cell, Link, Simulator, link_cell_rate)

# Overload factor used when the measured target capacity is effectively zero:
# drives every VCShare to ~0 without a division fault.
Z_SENTINEL = 1e12

_TARGET_FLOOR = 1.0  # cells/s


@dataclass(frozen=True)
class EricaParams:
    """ERICA+ switch parameters (defaults as used in the experiments)."""

    interval_cells: int = 500
    interval_time_ns: int = 5 * NS_PER_MS
    t0_ns: int = 500 * NS_PER_US  # target queueing delay
    a: float = 1.15
    b: float = 1.05
    qdlf: float = 0.5

    def __post_init__(self):
        if self.a <= 1.0 or self.b <= 1.0:
            raise ValueError("curve parameters a, b must exceed 1")
        if not 0.0 < self.qdlf <= 1.0:
            raise ValueError("QDLF must be in (0, 1]")
        if self.interval_cells < 1 or self.interval_time_ns <= 0:
            raise ValueError("invalid averaging interval")


def queue_control_fraction(q: float, q0: float, params: EricaParams) -> float:
    """Capacity scaling as a function of the current ABR queue length.

    Two rectangular hyperbolas meeting at (q0, 1): above 1 for queues below
    the target (let the queue fill toward the target delay), decaying below 1
    for queues above it (reserve capacity to drain), floored at QDLF.
    """
    if q0 <= 0:
        raise ValueError("target queue length must be positive")
    if q < 0:
        raise ValueError("queue length must be >= 0")
    if q <= q0:
        g = params.b * q0 / ((params.b - 1.0) * q + q0)
    else:
        g = params.a * q0 / ((params.a - 1.0) * q + q0)
    return max(params.qdlf, g)


class EricaPort:
    """One output port: VBR/ABR FIFOs, priority scheduler, ERICA+ state.

    ``forward(cell, now_ns)`` is called when a cell's last bit leaves the
    port; the owner wires it to the downstream arrival.
    """

    def __init__(self, sim: Simulator, link: Link, params: EricaParams = EricaParams(),
                 name: str = "port", forward=None, trace=None):
        self.sim = sim
        self.link = link
        self.params = params
        self.name = name
        self.forward = forward
        self.trace = trace  # callable(t_ns, dict) per completed interval

        self.vbr_fifo = []
        self.abr_fifo = []
        self._vbr_head = 0  # pop index; lists beat deques for bulk growth
        self._abr_head = 0
        self.max_abr_depth_seen = 0
        self._busy = False

        cell_rate = link_cell_rate(link.rate_bps)
        self.link_cell_rate = cell_rate
        # Constant target queue: target delay worth of cells at line rate.
        self.q0 = params.t0_ns / NS_PER_S * cell_rate

        # Measurement counters for the running interval.
        self.abr_input_cells = 0
        self.vbr_output_cells = 0
        self.active_vcs = set()
        self.last_ccr = {}
        self._interval_start = 0
        self._epoch = 0

        # Allocation state from the last completed interval.
        self.target_capacity = 0.0
        self.fair_share = 0.0
        self.z = 1.0
        self.n_active = 1
        self._have_interval = False

        # Cumulative departure counters (measurement, not control).
        self.abr_tx_cells = 0
        self.vbr_tx_cells = 0

        sim.schedule(sim.now + params.interval_time_ns,
                     self._interval_timer, self._epoch)

    # -- queueing ---------------------------------------------------------

    @property
    def abr_depth(self) -> int:
        return len(self.abr_fifo) - self._abr_head

    @property
    def vbr_depth(self) -> int:
        return len(self.vbr_fifo) - self._vbr_head

    def receive(self, cell: Cell) -> None:
        """Classify and enqueue an arriving cell; run ERICA measurement."""
        if cell.service == VBR:
            self.vbr_fifo.append(cell)
        else:
            self.abr_fifo.append(cell)
            depth = len(self.abr_fifo) - self._abr_head
            if depth > self.max_abr_depth_seen:
                self.max_abr_depth_seen = depth
            self.abr_input_cells += 1
            self.active_vcs.add(cell.vc)
            if cell.kind == RM and cell.direction == FORWARD:
                self.last_ccr[cell.vc] = cell.ccr
            if self.abr_input_cells >= self.params.interval_cells:
                self.end_of_interval()
        if not self._busy:
            self._start_tx()

    def dequeue_next(self):
        """Head-of-line cell under strict VBR-over-ABR priority, or None."""
        if self._vbr_head < len(self.vbr_fifo):
            cell = self.vbr_fifo[self._vbr_head]
            self._vbr_head += 1
            if self._vbr_head > 4096:
                del self.vbr_fifo[: self._vbr_head]
                self._vbr_head = 0
            return cell
        if self._abr_head < len(self.abr_fifo):
            cell = self.abr_fifo[self._abr_head]
            self._abr_head += 1
            if self._abr_head > 4096:
                del self.abr_fifo[: self._abr_head]
                self._abr_head = 0
            return cell
        return None

    def _start_tx(self) -> None:
        cell = self.dequeue_next()
        if cell is None:
            self._busy = False
            return
        self._busy = True
        done = self.sim.now + self.link.ser_ns
        self.link.busy_until = done
        self.sim.schedule(done, self._tx_done, cell)

    def _tx_done(self, cell: Cell) -> None:
        if cell.service == VBR:
            self.vbr_output_cells += 1
            self.vbr_tx_cells += 1
        else:
            self.abr_tx_cells += 1
        if self.forward is not None:
            self.forward(cell, self.sim.now)
        self._start_tx()

    # -- ERICA+ -----------------------------------------------------------

    def _interval_timer(self, epoch: int) -> None:
        if epoch != self._epoch:
            return  # interval already ended on the cell-count trigger
        self.end_of_interval()

    def end_of_interval(self) -> None:
        """Close the averaging interval: measure, allocate, reset."""
        now = self.sim.now
        elapsed_ns = now - self._interval_start
        if elapsed_ns > 0:
            # Rates are only measurable over a non-degenerate interval; a
            # zero-length interval resets the counters but keeps the previous
            # allocation state.
            elapsed_s = elapsed_ns / NS_PER_S
            vbr_rate = self.vbr_output_cells / elapsed_s
            abr_capacity = max(0.0, self.link_cell_rate - vbr_rate)
            q = self.abr_depth
            f = queue_control_fraction(q, self.q0, self.params)
            target = f * abr_capacity
            abr_input_rate = self.abr_input_cells / elapsed_s
            if target < _TARGET_FLOOR:
                target = 0.0
                z = Z_SENTINEL
            else:
                z = max(abr_input_rate / target, 1e-9)
            n_active = max(1, len(self.active_vcs))

            self.target_capacity = target
            self.z = z
            self.n_active = n_active
            self.fair_share = target / n_active
            self._have_interval = True

            if self.trace is not None:
                self.trace(now, {
                    "port": self.name,
                    "q_cells": q,
                    "vbr_rate_cps": vbr_rate,
                    "target_capacity_cps": target,
                    "z": z,
                    "fairshare_cps": self.fair_share,
                })

        self.abr_input_cells = 0
        self.vbr_output_cells = 0
        self.active_vcs = set()
        self._interval_start = now
        self._epoch += 1
        self.sim.schedule(now + self.params.interval_time_ns,
                          self._interval_timer, self._epoch)

    def process_backward_rm(self, rm: Cell) -> Cell:
        """Write this port's explicit-rate allocation into a backward RM cell.

        ER only ever decreases: a switch never raises a tighter bottleneck's
        feedback.
        """
        if rm.kind != RM or rm.direction != BACKWARD:
            raise ValueError("expected a backward RM cell")
        if not self._have_interval:
            return rm  # no measurement yet; pass through unchanged
        ccr = self.last_ccr.get(rm.vc)
        if ccr is None:
            er_calc = self.fair_share
        else:
            er_calc = max(self.fair_share, ccr / self.z)
        er_calc = min(er_calc, self.target_capacity)
        if er_calc < rm.er:
            rm.er = er_calc
        return rm
