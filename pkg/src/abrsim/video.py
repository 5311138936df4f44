"""Piecewise-CBR MPEG-2 SPTS cell sources and their VBR multiplex.

Each source holds its rate constant between program-clock updates; update
spacing is uniform on [20 ms, 100 ms] and the per-interval rates come from a
REJECT-bounded fGn stream, so the rate sequence is long-range dependent while
every rate stays inside the leaky-bucket peak.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .engine import CELL_BITS, NS_PER_MS, NS_PER_S
from .fgn import BoundedRateStream, BoundingMode, FgnParams, RateBounds


@dataclass(frozen=True)
class SptsSourceConfig:
    """One video source: fGn parameters plus MPCR spacing bounds."""

    fgn: FgnParams
    bounds: RateBounds = RateBounds(0.0, 15.0)
    mpcr_min_ns: int = 20 * NS_PER_MS
    mpcr_max_ns: int = 100 * NS_PER_MS

    def __post_init__(self):
        if not 0 < self.mpcr_min_ns <= self.mpcr_max_ns:
            raise ValueError("need 0 < mpcr_min <= mpcr_max")
        if self.bounds.hi > 15.0:
            raise ValueError("peak rate above the 15 Mbps leaky-bucket bound")


def interval_cell_budget(rate_mbps: float, duration_s: float,
                         credit_in: float) -> tuple[int, float]:
    """Whole cells emitted in one constant-rate interval, with fractional
    carry so the long-run mean is preserved exactly."""
    if rate_mbps < 0 or duration_s <= 0:
        raise ValueError("need rate >= 0 and duration > 0")
    if not 0.0 <= credit_in < 1.0:
        raise ValueError("credit must be in [0, 1)")
    budget = rate_mbps * 1e6 * duration_s / CELL_BITS + credit_in
    n = math.floor(budget)
    return n, budget - n


def emit_interval_cells(rate_mbps: float, duration_s: float,
                        credit_in: float = 0.0) -> tuple[np.ndarray, float]:
    """Emission times (seconds from the interval origin) of one interval.

    Cells are uniformly spaced at 424 bits / rate starting at the origin; a
    zero rate emits nothing and carries the credit unchanged.
    """
    n, credit_out = interval_cell_budget(rate_mbps, duration_s, credit_in)
    if n == 0:
        return np.empty(0), credit_out
    gap = CELL_BITS / (rate_mbps * 1e6)
    return np.arange(n) * gap, credit_out


class SptsSource:
    """One SPTS as an iterator of cell emission times (integer ns)."""

    def __init__(self, config: SptsSourceConfig, trace=None, index: int = 0):
        self.config = config
        self.index = index
        self._rates = BoundedRateStream(
            hurst=config.fgn.hurst, mean=config.fgn.mean,
            sigma=config.fgn.sigma, seed=config.fgn.seed,
            bounds=config.bounds, mode=BoundingMode.REJECT,
        )
        # MPCR spacing gets its own stream so interval draws never perturb
        # the rate sequence.
        self._mpcr_rng = np.random.default_rng((config.fgn.seed, 0x4D50))
        self._trace = trace
        self._credit = 0.0
        self._t = 0  # current interval origin, ns

    def next_mpcr_interval(self) -> int:
        """Next inter-MPCR interval in ns, uniform on [mpcr_min, mpcr_max]."""
        lo, hi = self.config.mpcr_min_ns, self.config.mpcr_max_ns
        if lo == hi:
            return lo
        return int(self._mpcr_rng.uniform(lo, hi))

    def next_interval_rate(self) -> float:
        """Next piecewise-constant rate in Mbps from the bounded fGn stream."""
        return self._rates.next()

    def cell_times(self):
        """Generator of emission times (ns), interval by interval."""
        while True:
            duration = self.next_mpcr_interval()
            rate = self.next_interval_rate()
            if self._trace is not None:
                self._trace(self._t, self.index, "MPCR", rate)
            n, self._credit = interval_cell_budget(
                rate, duration / NS_PER_S, self._credit)
            if n > 0:
                gap = CELL_BITS * 1e3 / rate  # ns; rate in Mbps
                origin = self._t
                for k in range(n):
                    yield origin + round(k * gap)
            self._t += duration


class VbrMux:
    """Time-ordered merge of N SPTS sources onto a single VBR VC.

    Pull interface: next_cell() returns (time_ns, vc_id) for the earliest
    pending cell across all sources, ties broken by source index.
    """

    def __init__(self, sources: list[SptsSource], vc_id="vbr"):
        if not sources:
            raise ValueError("mux needs at least one source")
        self.sources = sources
        self.vc_id = vc_id
        self._heap = []
        for i, src in enumerate(sources):
            gen = src.cell_times()
            t = next(gen, None)
            if t is not None:
                self._heap.append((t, i, gen))
        heapq.heapify(self._heap)

    def next_cell(self):
        """Earliest (time_ns, vc_id) across all sources, or None if exhausted."""
        if not self._heap:
            return None
        t, i, gen = self._heap[0]
        t_next = next(gen, None)
        if t_next is None:
            heapq.heappop(self._heap)
        else:
            heapq.heapreplace(self._heap, (t_next, i, gen))
        return t, self.vc_id


def make_mux(n_sources: int, mean: float, sigma: float, hurst: float,
             seed: int, bounds: RateBounds = RateBounds(0.0, 15.0),
             trace=None, vc_id="vbr") -> VbrMux:
    """Build N independent, reproducible sources: source i is seeded with
    seed XOR i so streams are independent yet a run is replayable."""
    sources = []
    for i in range(n_sources):
        cfg = SptsSourceConfig(
            fgn=FgnParams(hurst=hurst, mean=mean, sigma=sigma,
                          length=1 << 16, seed=seed ^ i),
            bounds=bounds,
        )
        sources.append(SptsSource(cfg, trace=trace, index=i))
    return VbrMux(sources, vc_id=vc_id)
