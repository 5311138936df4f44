"""Simplified TCP over one ABR VC: slow start + congestion avoidance with
timeout-only recovery (no fast retransmit/recovery), AAL5-style segmentation
into cells, cumulative per-segment ACKs.

The sender hands whole segments to its ABR source, which paces them onto the
wire; the receiver delivers in order and ACKs every segment.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .engine import CELL_PAYLOAD_BYTES, NS_PER_MS, NS_PER_S, Simulator

TCPIP_HEADER_BYTES = 40
AAL5_TRAILER_BYTES = 8

RTO_INITIAL_NS = 3 * NS_PER_S
RTO_GRANULARITY_NS = 100 * NS_PER_MS


class ProtocolError(Exception):
    """An ACK acknowledged data that was never sent."""


def segment_to_cells(mss: int) -> int:
    """Number of 53-byte cells carrying one max-size segment: the TCP payload
    plus a 40-byte TCP/IP header and 8-byte AAL5 trailer, padded to whole
    48-byte cell payloads."""
    if mss < 1:
        raise ValueError("MSS must be >= 1")
    pdu = mss + TCPIP_HEADER_BYTES + AAL5_TRAILER_BYTES
    return -(-pdu // CELL_PAYLOAD_BYTES)


@dataclass
class _SentSegment:
    seq_end: int
    sent_at: int
    retransmit: bool


class TcpSender:
    """Infinite-file TCP sender bound to one ABR source.

    ``abr_source`` must provide push_segment(n_cells, payload) and
    clear_pending(); the final cell of each segment carries
    (receiver, seq_start, seq_end) so the far end can deliver and ACK.
    """

    def __init__(self, sim: Simulator, abr_source, receiver, mss: int,
                 rwnd: int = 16 << 20, iss: int = 0):
        self.sim = sim
        self.abr = abr_source
        self.receiver = receiver
        self.mss = mss
        self.rwnd = rwnd
        self.cells_per_segment = segment_to_cells(mss)

        self.snd_una = iss
        self.snd_nxt = iss
        self.cwnd = mss
        self.ssthresh = rwnd
        self.srtt = None
        self.rttvar = 0.0
        self.rto = RTO_INITIAL_NS
        self.retransmission_count = 0
        self.dupacks = 0

        self._sent = deque()  # _SentSegment in send order
        self._next_is_retransmit = False
        self._timer_epoch = 0
        self._timer_armed = False

    # -- sending ----------------------------------------------------------

    @property
    def flight(self) -> int:
        return self.snd_nxt - self.snd_una

    @property
    def send_window(self) -> int:
        return min(self.cwnd, self.rwnd)

    def start(self, _arg=None) -> None:
        self.fill_window()

    def fill_window(self) -> None:
        while self.flight + self.mss <= self.send_window:
            self._send_segment()

    def _send_segment(self) -> None:
        seq_start = self.snd_nxt
        seq_end = seq_start + self.mss
        self.abr.push_segment(
            self.cells_per_segment, (self.receiver, seq_start, seq_end))
        self._sent.append(_SentSegment(seq_end, self.sim.now,
                                       self._next_is_retransmit))
        self._next_is_retransmit = False
        self.snd_nxt = seq_end
        if not self._timer_armed:
            self._arm_timer()

    # -- ACK clock --------------------------------------------------------

    def on_ack(self, ack_seq: int) -> None:
        if ack_seq > self.snd_nxt:
            raise ProtocolError(
                f"ACK {ack_seq} beyond snd_nxt {self.snd_nxt}")
        if ack_seq <= self.snd_una:
            self.dupacks += 1  # duplicate ACK: no action without fast retransmit
            return
        # RTT sample from the newest acked, never-retransmitted segment.
        sample = None
        while self._sent and self._sent[0].seq_end <= ack_seq:
            seg = self._sent.popleft()
            if not seg.retransmit:
                sample = self.sim.now - seg.sent_at
        if sample is not None:
            self.rto_update(sample)
        self.snd_una = ack_seq
        self.dupacks = 0
        if self.cwnd < self.ssthresh:
            self.cwnd += self.mss
        else:
            self.cwnd += max(1, self.mss * self.mss // self.cwnd)
        if self.flight > 0:
            self._arm_timer()
        else:
            self._timer_armed = False
            self._timer_epoch += 1
        self.fill_window()

    def rto_update(self, rtt_sample_ns: int) -> None:
        """Standard SRTT/RTTVAR estimator with gains 1/8 and 1/4."""
        if self.srtt is None:
            self.srtt = float(rtt_sample_ns)
            self.rttvar = rtt_sample_ns / 2.0
        else:
            err = abs(self.srtt - rtt_sample_ns)
            self.rttvar = 0.75 * self.rttvar + 0.25 * err
            self.srtt = 0.875 * self.srtt + 0.125 * rtt_sample_ns
        self.rto = int(self.srtt + max(RTO_GRANULARITY_NS, 4.0 * self.rttvar))

    # -- timeout recovery -------------------------------------------------

    def _arm_timer(self) -> None:
        self._timer_epoch += 1
        self._timer_armed = True
        self.sim.schedule(self.sim.now + self.rto, self._timer_fired,
                          self._timer_epoch)

    def _timer_fired(self, epoch: int) -> None:
        if epoch != self._timer_epoch or not self._timer_armed:
            return
        self.on_timeout()

    def on_timeout(self) -> None:
        """Tahoe-style timeout: halve, collapse to one segment, go back to
        the last cumulative ACK. A no-op with nothing outstanding."""
        if self.flight == 0:
            return
        self.ssthresh = max(self.flight // 2, 2 * self.mss)
        self.cwnd = self.mss
        self.retransmission_count += 1
        self.rto = min(self.rto * 2, 64 * NS_PER_S)
        # Roll the send state back to snd_una and resend from there.
        self.abr.clear_pending()
        self._sent.clear()
        self.snd_nxt = self.snd_una
        self._next_is_retransmit = True
        self._arm_timer()
        self.fill_window()


class TcpReceiver:
    """Cumulative-ACK receiver; ACKs every segment, holds out-of-order PDUs
    until the gap fills (no SACK)."""

    def __init__(self, irs: int = 0):
        self.rcv_nxt = irs
        self.delivered_bytes = 0
        self._out_of_order = {}  # seq_start -> seq_end

    def deliver(self, seq_start: int, seq_end: int) -> int:
        """Accept one reassembled segment; return the cumulative ACK value."""
        if seq_end <= seq_start:
            raise ValueError("empty segment")
        if seq_start == self.rcv_nxt:
            self.delivered_bytes += seq_end - seq_start
            self.rcv_nxt = seq_end
            while self.rcv_nxt in self._out_of_order:
                nxt = self._out_of_order.pop(self.rcv_nxt)
                self.delivered_bytes += nxt - self.rcv_nxt
                self.rcv_nxt = nxt
        elif seq_start > self.rcv_nxt:
            self._out_of_order[seq_start] = seq_end
        # Segments below rcv_nxt are duplicates: ACK restates the edge.
        return self.rcv_nxt
