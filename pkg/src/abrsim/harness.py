"""Experiment harness: the three benchmark topologies, end-to-end runs, derived
metrics (efficiency, feedback-delay queue equivalents), and CSV reports.

All three configurations share one bottleneck: the first switch's output
port, where N TCP-over-ABR sources meet the multiplexed VBR video stream.
Downstream of the bottleneck every VC has a dedicated line-rate link, so the
far-side switch can never queue and is modeled as a constant-delay stage;
likewise the reverse (ACK/BRM) path is uncongested and modeled as pure delay
with an explicit-rate hook where backward RM cells pass the bottleneck
switch.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

from .abr import AbrSource, dest_turnaround
from .engine import (ABR, CELL_BITS, CELL_BYTES, DEFAULT_LINK_RATE_BPS,
                     NS_PER_MS, NS_PER_S, PROP_NS_PER_KM, RM, VBR, Cell, Link,
                     Simulator, link_cell_rate)
from .fgn import RateBounds
from .switch import EricaParams, EricaPort
from .tcp import TcpReceiver, TcpSender, segment_to_cells
from .video import make_mux

WAN = "wan"
SAT_SHORT_FB = "sat-short"
SAT_LONG_FB = "sat-long"
SCENARIOS = (WAN, SAT_SHORT_FB, SAT_LONG_FB)

# Reporting convention for queue-to-delay conversion.
REPORT_CELLS_PER_MS = 367.0

_DEFAULT_DURATION_S = {WAN: 10.0, SAT_SHORT_FB: 170.0, SAT_LONG_FB: 170.0}


class ConfigError(ValueError):
    """Invalid scenario configuration."""


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = WAN
    n_tcp: int = 15
    n_video: int = 9
    video_mean: float = 5.0
    video_sigma: float = 5.0
    hurst: float = 0.8
    mss: int = 512
    duration_s: float | None = None  # per-scenario default when None
    seed: int = 1
    erica: EricaParams = field(default_factory=EricaParams)
    sat_one_way_ms: float = 270.0
    link_rate_bps: float = DEFAULT_LINK_RATE_BPS
    rwnd_bytes: int = 16 << 20
    tcp_start_spacing_ns: int | None = None  # default: max(10 ms, RTT / n_tcp)
    video_bounds: RateBounds = field(default_factory=RateBounds)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; "
                              f"expected one of {SCENARIOS}")
        if self.n_tcp < 1 or self.n_video < 0:
            raise ConfigError("need n_tcp >= 1 and n_video >= 0")
        if self.duration_s is not None and self.duration_s <= 0:
            raise ConfigError("duration must be positive")
        if self.mss < 1:
            raise ConfigError("MSS must be >= 1")

    @property
    def effective_duration_s(self) -> float:
        if self.duration_s is not None:
            return self.duration_s
        return _DEFAULT_DURATION_S[self.scenario]


@dataclass(frozen=True)
class Topology:
    """Propagation structure: source --SW1-- bottleneck --SW2-- destination."""

    scenario: str
    access_prop_ns: int       # source to SW1
    bottleneck_prop_ns: int   # SW1 to SW2 (the shared link)
    dest_prop_ns: int         # SW2 to destination
    link_rate_bps: float

    @property
    def one_way_delay_ns(self) -> int:
        return self.access_prop_ns + self.bottleneck_prop_ns + self.dest_prop_ns

    @property
    def rtt_ns(self) -> int:
        return 2 * self.one_way_delay_ns

    @property
    def feedback_delay_ns(self) -> int:
        """Bottleneck feedback to the sources and the new load back."""
        return 2 * self.access_prop_ns

    @property
    def nominal_feedback_delay_ns(self) -> int:
        """Feedback delay as quoted in reports: 10 ms terrestrial-feedback,
        550 ms when the feedback path crosses the satellite."""
        if self.scenario == SAT_LONG_FB:
            return 550 * NS_PER_MS
        return 10 * NS_PER_MS


def build_topology(config: ScenarioConfig) -> Topology:
    sat_ns = int(config.sat_one_way_ms * NS_PER_MS)
    km = PROP_NS_PER_KM
    if config.scenario == WAN:
        access, bneck, dest = 1000 * km, 1000 * km, 1000 * km
    elif config.scenario == SAT_SHORT_FB:
        access, bneck, dest = 1000 * km, sat_ns, 1 * km
    elif config.scenario == SAT_LONG_FB:
        access, bneck, dest = sat_ns, 1 * km, 1 * km
    else:
        raise ConfigError(f"unknown scenario {config.scenario!r}")
    return Topology(config.scenario, access, bneck, dest, config.link_rate_bps)


def max_tcp_fraction(mss: int) -> float:
    """Best-case TCP goodput per unit of ABR wire capacity: payload bytes per
    53-byte cell times the 31-in-32 data-cell fraction (one FRM per Nrm)."""
    cells = segment_to_cells(mss)
    return (mss / (CELL_BYTES * cells)) * (31.0 / 32.0)


def efficiency(tcp_throughput_mbps: float, vbr_mean_mbps: float, mss: int,
               link_rate_mbps: float = DEFAULT_LINK_RATE_BPS / 1e6) -> float:
    """Measured TCP throughput as a percentage of the best possible over the
    mean ABR capacity (link rate minus mean VBR rate)."""
    if vbr_mean_mbps >= link_rate_mbps:
        raise ValueError("mean VBR rate at or above the link rate")
    best = (link_rate_mbps - vbr_mean_mbps) * max_tcp_fraction(mss)
    return 100.0 * tcp_throughput_mbps / best


def feedback_delay_cells(delay_ns: int) -> float:
    """Queue size equivalent of a delay, at the 367 cells/ms reporting
    convention."""
    if delay_ns < 0:
        raise ValueError("delay must be >= 0")
    return delay_ns / NS_PER_MS * REPORT_CELLS_PER_MS


@dataclass
class MetricsReport:
    config: ScenarioConfig
    vbr_mean_mbps: float
    total_tcp_throughput_mbps: float
    abr_throughput_mbps: float
    max_abr_queue_cells: int
    queue_in_fb_delays: float
    efficiency_pct: float
    retransmissions: int
    per_vc_goodput_mbps: tuple


def run_experiment(config: ScenarioConfig, interval_trace: list | None = None,
                   acr_trace: list | None = None) -> MetricsReport:
    """Build the topology, run for the configured duration, measure.

    Fully deterministic: identical (config, seed) gives an identical report.
    ``interval_trace`` (a list, if given) collects one entry per completed
    ERICA averaging interval at the bottleneck; ``acr_trace`` collects
    (t_ns, vc, acr_cells_per_s) at every backward-RM arrival.
    """
    topo = build_topology(config)
    duration_ns = int(round(config.effective_duration_s * NS_PER_S))
    sim = Simulator()

    trace_cb = None
    if interval_trace is not None:
        trace_cb = lambda t, entry: interval_trace.append((t, entry))

    port = EricaPort(
        sim,
        Link(config.link_rate_bps, prop_ns=topo.bottleneck_prop_ns),
        params=config.erica, name="sw1-bottleneck", trace=trace_cb,
    )
    ser = port.link.ser_ns

    # Constant tail from bottleneck departure to destination arrival: the
    # bottleneck link's propagation, the far switch's per-VC line-rate port
    # (which can never queue), and the last hop.
    fwd_tail_ns = topo.bottleneck_prop_ns + ser + topo.dest_prop_ns
    # Reverse path: dedicated mirrored links, uncongested (ACKs and BRMs are
    # a few percent of line rate), so pure serialization + propagation.
    rev_dest_to_sw1_ns = 2 * ser + topo.dest_prop_ns + topo.bottleneck_prop_ns
    rev_sw1_to_src_ns = ser + topo.access_prop_ns
    access_ns = ser + topo.access_prop_ns

    pcr = link_cell_rate(config.link_rate_bps)
    sources: list[AbrSource] = []
    receivers: list[TcpReceiver] = []
    senders: list[TcpSender] = []

    def access_send(cell, t):
        sim.schedule(t + access_ns, port.receive, cell)

    def deliver_segment(payload):
        receiver, seq_start, seq_end = payload
        ack = receiver.deliver(seq_start, seq_end)
        sender = senders[receiver.conn_index]
        sim.schedule(sim.now + rev_dest_to_sw1_ns + rev_sw1_to_src_ns,
                     sender.on_ack, ack)

    def brm_at_source(brm):
        sources[brm.vc].on_brm(brm.er)
        if acr_trace is not None:
            acr_trace.append((sim.now, brm.vc, sources[brm.vc].acr))

    def brm_at_sw1(brm):
        port.process_backward_rm(brm)
        sim.schedule(sim.now + rev_sw1_to_src_ns, brm_at_source, brm)

    def turnaround(frm):
        sim.schedule(sim.now + rev_dest_to_sw1_ns, brm_at_sw1,
                     dest_turnaround(frm))

    def bottleneck_forward(cell, now):
        if cell.service == VBR:
            return
        if cell.kind == RM:
            sim.schedule(now + fwd_tail_ns, turnaround, cell)
        elif cell.payload is not None:
            sim.schedule(now + fwd_tail_ns, deliver_segment, cell.payload)

    port.forward = bottleneck_forward

    for i in range(config.n_tcp):
        receiver = TcpReceiver()
        receiver.conn_index = i
        src = AbrSource(sim, vc=i, pcr=pcr, send=access_send)
        sender = TcpSender(sim, src, receiver, mss=config.mss,
                           rwnd=config.rwnd_bytes)
        sources.append(src)
        receivers.append(receiver)
        senders.append(sender)

    # VBR: N video sources merged onto one VC, over its own access link.
    vbr_rx_cells = 0
    if config.n_video > 0:
        mux = make_mux(config.n_video, config.video_mean, config.video_sigma,
                       config.hurst, config.seed, bounds=config.video_bounds)
        vbr_cell = Cell("vbr", VBR)
        vbr_link = Link(config.link_rate_bps, prop_ns=topo.access_prop_ns)

        def vbr_emit(_):
            nonlocal vbr_rx_cells
            vbr_rx_cells += 1
            sim.schedule(vbr_link.transmit(sim.now), port.receive, vbr_cell)
            nxt = mux.next_cell()
            if nxt is not None and nxt[0] <= duration_ns:
                sim.schedule(nxt[0], vbr_emit, None)

        first = mux.next_cell()
        if first is not None and first[0] <= duration_ns:
            sim.schedule(first[0], vbr_emit, None)

    # Connections open staggered (deterministic): real transfers never start
    # in lockstep, and synchronized slow starts inflate the startup queue
    # spike well beyond anything steady state produces. Spreading the starts
    # across about one RTT also desynchronizes the window-doubling epochs,
    # which otherwise stay aligned on long-RTT paths.
    spacing = config.tcp_start_spacing_ns
    if spacing is None:
        spacing = max(10 * NS_PER_MS, topo.rtt_ns // config.n_tcp)
    for i, sender in enumerate(senders):
        sim.schedule(i * spacing, sender.start, None)

    sim.run_until(duration_ns)

    duration_s = duration_ns / NS_PER_S
    # VBR offered load is independent of the ABR side (strict priority, no
    # loss): count cells arriving at the bottleneck within the horizon.
    vbr_mean = vbr_rx_cells * CELL_BITS / duration_s / 1e6
    per_vc = tuple(r.delivered_bytes * 8 / duration_s / 1e6 for r in receivers)
    total_tcp = sum(per_vc)
    abr_tp = port.abr_tx_cells * CELL_BITS / duration_s / 1e6
    max_q = port.max_abr_depth_seen
    topo_nominal_fb = topo.nominal_feedback_delay_ns

    return MetricsReport(
        config=config,
        vbr_mean_mbps=vbr_mean,
        total_tcp_throughput_mbps=total_tcp,
        abr_throughput_mbps=abr_tp,
        max_abr_queue_cells=max_q,
        queue_in_fb_delays=max_q / feedback_delay_cells(topo_nominal_fb),
        efficiency_pct=efficiency(total_tcp, vbr_mean, config.mss,
                                  config.link_rate_bps / 1e6),
        retransmissions=sum(s.retransmission_count for s in senders),
        per_vc_goodput_mbps=per_vc,
    )


REPORT_COLUMNS = [
    "scenario", "mss", "video_mean", "video_sigma", "hurst", "seed",
    "duration_s", "vbr_mean_mbps", "tcp_throughput_mbps", "max_queue_cells",
    "queue_in_fb_delays", "efficiency_pct", "retransmissions",
]


def report_row(report: MetricsReport) -> dict:
    cfg = report.config
    return {
        "scenario": cfg.scenario,
        "mss": cfg.mss,
        "video_mean": cfg.video_mean,
        "video_sigma": cfg.video_sigma,
        "hurst": cfg.hurst,
        "seed": cfg.seed,
        "duration_s": cfg.effective_duration_s,
        "vbr_mean_mbps": round(report.vbr_mean_mbps, 4),
        "tcp_throughput_mbps": round(report.total_tcp_throughput_mbps, 4),
        "max_queue_cells": report.max_abr_queue_cells,
        "queue_in_fb_delays": round(report.queue_in_fb_delays, 4),
        "efficiency_pct": round(report.efficiency_pct, 2),
        "retransmissions": report.retransmissions,
    }


def emit_report(report: MetricsReport, destination: str) -> None:
    """Append one CSV row (header written on first use of the file)."""
    new_file = not os.path.exists(destination) or os.path.getsize(destination) == 0
    with open(destination, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
        if new_file:
            writer.writeheader()
        writer.writerow(report_row(report))
