"""ABR end-system behavior: rate-paced source with in-rate forward RM
insertion, and destination RM turnaround.

The source is explicit-rate only: on every backward RM cell it adopts the
carried ER directly (clamped to [MCR, PCR]); there is no additive-increase /
multiplicative-decrease ramping.
"""

from __future__ import annotations

from .engine import (ABR, DATA, FORWARD, NS_PER_S, RM, Cell, Simulator,
                     make_brm)

NRM_DEFAULT = 32


class AbrSource:
    """Paced ABR source for one VC.

    Cells are emitted at 1/ACR spacing; every Nrm-th in-rate cell is a
    forward RM cell stamped with the current rate (CCR = ACR, ER = PCR).
    ``send(cell, t_ns)`` is supplied by the owner and puts the cell on the
    access path.
    """

    def __init__(self, sim: Simulator, vc, pcr: float, send,
                 icr: float | None = None, mcr: float = 0.0,
                 nrm: int = NRM_DEFAULT, on_emit=None):
        if pcr <= 0:
            raise ValueError("PCR must be positive")
        if not 0.0 <= mcr <= pcr:
            raise ValueError("need 0 <= MCR <= PCR")
        self.sim = sim
        self.vc = vc
        self.pcr = pcr
        self.mcr = mcr
        self.nrm = nrm
        self.acr = icr if icr is not None else pcr / 32.0
        if not mcr <= self.acr <= pcr:
            raise ValueError("ICR must lie in [MCR, PCR]")
        self.send = send
        self.on_emit = on_emit  # optional hook(cell, t_ns), for traces/tests

        self.cells_since_frm = 0
        # Pending data: segments as [cells_left, final_payload].
        self._pending = []
        self._pending_head = 0
        self._last_emit = None  # ns of last emission
        self._running = False
        self._slot_epoch = 0
        # Shared immutable filler for non-final data cells of this VC.
        self._data_cell = Cell(vc, ABR, DATA)

    # -- data interface ---------------------------------------------------

    @property
    def pending_cells(self) -> int:
        total = 0
        for i in range(self._pending_head, len(self._pending)):
            total += self._pending[i][0]
        return total

    def push_segment(self, n_cells: int, final_payload) -> None:
        """Queue one upper-layer PDU worth of cells; the last cell carries
        the payload reference."""
        if n_cells < 1:
            raise ValueError("segment must occupy at least one cell")
        self._pending.append([n_cells, final_payload])
        if not self._running:
            self._resume()

    def clear_pending(self) -> None:
        """Drop all queued-but-unsent data (used on TCP timeout rollback)."""
        self._pending = []
        self._pending_head = 0

    # -- pacing -----------------------------------------------------------

    def _gap_ns(self) -> int:
        return max(1, round(NS_PER_S / self.acr))

    def _resume(self) -> None:
        if self.acr <= 0.0:
            return
        self._running = True
        self._slot_epoch += 1
        at = self.sim.now
        if self._last_emit is not None:
            at = max(at, self._last_emit + self._gap_ns())
        self.sim.schedule(at, self._slot, self._slot_epoch)

    def on_brm(self, er: float) -> None:
        """Adopt the network's explicit rate, clamped to [MCR, PCR]."""
        was_stalled = self.acr <= 0.0
        self.acr = min(max(er, self.mcr), self.pcr)
        if was_stalled and self.acr > 0.0 and not self._running:
            if self._pending_head < len(self._pending) or self._frm_due():
                self._resume()

    def _frm_due(self) -> bool:
        return self.cells_since_frm == self.nrm - 1

    def _slot(self, epoch: int) -> None:
        if epoch != self._slot_epoch or not self._running:
            return
        if self.acr <= 0.0:
            self._running = False
            return
        now = self.sim.now
        # Re-check pacing: ACR may have dropped after this slot was scheduled.
        if self._last_emit is not None:
            earliest = self._last_emit + self._gap_ns()
            if now < earliest:
                self.sim.schedule(earliest, self._slot, epoch)
                return

        if self._frm_due():
            cell = Cell(self.vc, ABR, RM, FORWARD, er=self.pcr, ccr=self.acr)
            self.cells_since_frm = 0
        elif self._pending_head < len(self._pending):
            seg = self._pending[self._pending_head]
            seg[0] -= 1
            if seg[0] == 0:
                cell = Cell(self.vc, ABR, DATA, payload=seg[1])
                self._pending_head += 1
                if self._pending_head > 4096:
                    del self._pending[: self._pending_head]
                    self._pending_head = 0
            else:
                cell = self._data_cell
            self.cells_since_frm += 1
        else:
            # Idle: nothing in rate to send; pacing resumes on the next push.
            self._running = False
            return

        self._last_emit = now
        if self.on_emit is not None:
            self.on_emit(cell, now)
        self.send(cell, now)
        self.sim.schedule(now + self._gap_ns(), self._slot, epoch)


def dest_turnaround(frm: Cell) -> Cell:
    """Destination behavior for a forward RM cell: return it as a backward
    RM cell with ER and CCR preserved, sent immediately on the reverse path."""
    return make_brm(frm)
