"""Figure rendering for experiment traces.

Renders PNG files next to the delimited output: bottleneck ABR queue depth
against feedback-delay reference lines, the measured VBR rate, source ACRs,
and the per-connection goodput split.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .engine import CELL_BITS, NS_PER_S
from .harness import MetricsReport, build_topology, feedback_delay_cells


def _finish(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_queue_depth(interval_trace, report: MetricsReport, path: str) -> str:
    """ABR queue depth at the bottleneck over time, with the queue sizes
    equivalent to one and three feedback delays drawn for scale."""
    t = np.array([e[0] for e in interval_trace]) / NS_PER_S
    q = np.array([e[1]["q_cells"] for e in interval_trace])
    fb_cells = feedback_delay_cells(
        build_topology(report.config).nominal_feedback_delay_ns)

    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(t, q, lw=0.7, color="tab:blue")
    for k, style in ((1, "--"), (3, ":")):
        ax.axhline(k * fb_cells, ls=style, color="tab:red", lw=1,
                   label=f"{k}x feedback delay")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("ABR queue (cells)")
    ax.set_title(f"Bottleneck ABR queue — {report.config.scenario}, "
                 f"max {report.max_abr_queue_cells} cells")
    ax.legend(loc="upper right", fontsize=8)
    return _finish(fig, path)


def plot_vbr_rate(interval_trace, report: MetricsReport, path: str) -> str:
    """Measured VBR output rate per averaging interval, in Mbps."""
    t = np.array([e[0] for e in interval_trace]) / NS_PER_S
    rate = np.array([e[1]["vbr_rate_cps"] for e in interval_trace])
    rate_mbps = rate * CELL_BITS / 1e6

    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(t, rate_mbps, lw=0.7, color="tab:green")
    ax.axhline(report.vbr_mean_mbps, ls="--", color="k", lw=1,
               label=f"mean {report.vbr_mean_mbps:.1f} Mbps")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("VBR rate (Mbps)")
    ax.set_title("Video background load at the bottleneck")
    ax.legend(loc="upper right", fontsize=8)
    return _finish(fig, path)


def plot_acr(acr_trace, report: MetricsReport, path: str) -> str:
    """Allowed cell rate of each source as explicit-rate feedback arrives."""
    fig, ax = plt.subplots(figsize=(8, 4))
    by_vc = {}
    for t_ns, vc, acr in acr_trace:
        by_vc.setdefault(vc, []).append((t_ns / NS_PER_S, acr * CELL_BITS / 1e6))
    for vc in sorted(by_vc):
        pts = np.array(by_vc[vc])
        ax.plot(pts[:, 0], pts[:, 1], lw=0.5)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("ACR (Mbps)")
    ax.set_title(f"Per-source allowed cell rates ({len(by_vc)} connections)")
    return _finish(fig, path)


def plot_goodput(report: MetricsReport, path: str) -> str:
    """Per-connection goodput bars; fairness shows up as a level profile."""
    goodputs = report.per_vc_goodput_mbps
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(range(len(goodputs)), goodputs, color="tab:blue")
    ax.axhline(np.mean(goodputs), ls="--", color="k", lw=1,
               label=f"mean {np.mean(goodputs):.2f} Mbps")
    ax.set_xlabel("connection")
    ax.set_ylabel("goodput (Mbps)")
    ax.set_title("Per-connection TCP goodput")
    ax.legend(loc="lower right", fontsize=8)
    return _finish(fig, path)


def render_all(report: MetricsReport, interval_trace, acr_trace,
               out_dir: str) -> list[str]:
    """Write every available figure into ``out_dir``; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    stem = f"{report.config.scenario}-mss{report.config.mss}-seed{report.config.seed}"
    written = []
    if interval_trace:
        written.append(plot_queue_depth(
            interval_trace, report, os.path.join(out_dir, f"{stem}-queue.png")))
        written.append(plot_vbr_rate(
            interval_trace, report, os.path.join(out_dir, f"{stem}-vbr.png")))
    if acr_trace:
        written.append(plot_acr(
            acr_trace, report, os.path.join(out_dir, f"{stem}-acr.png")))
    written.append(plot_goodput(
        report, os.path.join(out_dir, f"{stem}-goodput.png")))
    return written
