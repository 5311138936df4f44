"""Fractional Gaussian noise rate sequences: synthesis, bounding, validation.

Synthesis uses exact circulant embedding (Davies-Harte) of the fGn
autocovariance via FFT, so the generated process has the target covariance
structure exactly rather than approximately.

Refs:
    Davies, R. B. and Harte, D. S., "Tests for Hurst effect",
    Biometrika 74, 1, pp. 95-101 (1987).
    Dieker, A., "Simulation of fractional Brownian motion", PhD thesis,
    University of Amsterdam (2006).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm


class DegenerateSequenceError(Exception):
    """Bounding or estimation produced no usable values."""


class SynthesisSizeError(ValueError):
    """The requested length cannot be synthesized; use the suggested size."""


@dataclass(frozen=True)
class FgnParams:
    """Target parameters for one fGn rate sequence (rates in Mbps)."""

    hurst: float
    mean: float
    sigma: float
    length: int
    seed: int

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"hurst must be in (0, 1), got {self.hurst}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.length < 1:
            raise ValueError(f"length must be >= 1, got {self.length}")


@dataclass(frozen=True)
class RateBounds:
    """Valid rate range in Mbps; default is the 15 Mbps video peak."""

    lo: float = 0.0
    hi: float = 15.0

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")


class BoundingMode(enum.Enum):
    """How out-of-range raw samples are mapped into the valid rate range."""

    EXPONENTIATE = "exponentiate"
    CLIP_ZERO = "clip-zero"
    CLIP_COMPENSATE = "clip-compensate"
    REJECT = "reject"


@dataclass
class RateSequence:
    """Bounded per-interval rates plus the moments actually achieved."""

    values: np.ndarray
    achieved_mean: float
    achieved_sigma: float

    def __len__(self):
        return len(self.values)


def fgn_autocovariance(lag: int, hurst: float, sigma: float = 1.0) -> float:
    """Exact autocovariance of fGn at the given lag (Mbps^2)."""
    if lag < 0:
        raise ValueError("lag must be >= 0")
    h2 = 2.0 * hurst
    k = float(lag)
    return 0.5 * sigma * sigma * (
        abs(k + 1.0) ** h2 - 2.0 * abs(k) ** h2 + abs(k - 1.0) ** h2
    )


def _synthesize_unit(rng: np.random.Generator, n: int, hurst: float) -> np.ndarray:
    """One zero-mean, unit-variance fGn realization of length n."""
    if n == 1:
        return rng.standard_normal(1)
    # First row of the 2n x 2n circulant embedding of the covariance matrix.
    k = np.arange(1, n, dtype=float)
    h2 = 2.0 * hurst
    gamma = 0.5 * ((k + 1.0) ** h2 - 2.0 * k ** h2 + (k - 1.0) ** h2)
    row = np.empty(2 * n)
    row[0] = 1.0
    row[1:n] = gamma
    row[n] = 0.0
    row[n + 1:] = gamma[::-1]
    eig = np.fft.fft(row).real
    if eig.min() < -1e-8:
        raise SynthesisSizeError(
            f"circulant embedding not positive semi-definite for length {n} at "
            f"H={hurst}; use a larger length (powers of two such as "
            f"{1 << max(10, n.bit_length())} are safe)"
        )
    eig = np.clip(eig, 0.0, None)

    z = np.empty(2 * n, dtype=complex)
    z[0] = rng.standard_normal()
    z[n] = rng.standard_normal()
    v = rng.standard_normal((n - 1, 2))
    z[1:n] = (v[:, 0] + 1j * v[:, 1]) / math.sqrt(2.0)
    z[n + 1:] = np.conj(z[1:n][::-1])
    return math.sqrt(2 * n) * np.fft.ifft(np.sqrt(eig) * z).real[:n]


def generate_fgn(params: FgnParams) -> np.ndarray:
    """Raw (unbounded) fGn samples with the requested mean and sigma.

    Deterministic for a fixed seed: the same params always give a
    bit-identical array.
    """
    rng = np.random.default_rng(params.seed)
    if params.sigma == 0.0:
        return np.full(params.length, params.mean)
    raw = _synthesize_unit(rng, params.length, params.hurst)
    return params.mean + params.sigma * raw


def bound_sequence(raw, mode: BoundingMode,
                   bounds: RateBounds = RateBounds()) -> RateSequence:
    """Map raw samples into [bounds.lo, bounds.hi] under the chosen mode.

    REJECT drops out-of-range values (order preserved); CLIP_ZERO clamps both
    ends; CLIP_COMPENSATE carries the clipped negative deficit into later
    values; EXPONENTIATE maps x -> round(e^x) clamped above at hi.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.size == 0:
        raise ValueError("raw sequence must be non-empty")
    lo, hi = bounds.lo, bounds.hi

    if mode is BoundingMode.REJECT:
        out = raw[(raw >= lo) & (raw <= hi)]
        if out.size == 0:
            raise DegenerateSequenceError(
                f"every sample fell outside [{lo}, {hi}]; "
                "mean/sigma are degenerate for these bounds"
            )
    elif mode is BoundingMode.CLIP_ZERO:
        out = np.clip(raw, lo, hi)
    elif mode is BoundingMode.CLIP_COMPENSATE:
        out = np.empty_like(raw)
        deficit = 0.0
        for i, x in enumerate(raw):
            x = min(x, hi) - deficit
            if x < lo:
                deficit = lo - x
                x = lo
            else:
                deficit = 0.0
            out[i] = x
    elif mode is BoundingMode.EXPONENTIATE:
        out = np.minimum(np.rint(np.exp(raw)), hi)
    else:
        raise ValueError(f"unknown bounding mode {mode!r}")

    return RateSequence(
        values=out,
        achieved_mean=float(out.mean()),
        achieved_sigma=float(out.std()),
    )


def estimate_hurst(values) -> float:
    """Variance-time estimate of the Hurst parameter.

    Aggregates the series at block sizes m = 2..256 and regresses
    log Var(block means) on log m; the slope s of that line satisfies
    s = 2H - 2 for a self-similar process, so H = 1 + s/2.
    """
    x = np.asarray(values, dtype=float)
    if x.size < 1 << 10:
        raise ValueError(f"need at least 2^10 samples, got {x.size}")
    if x.std() == 0.0:
        raise DegenerateSequenceError("constant sequence has no defined Hurst estimate")
    block_sizes = [1 << j for j in range(1, 9)]
    log_m, log_var = [], []
    for m in block_sizes:
        nblocks = x.size // m
        agg = x[: nblocks * m].reshape(nblocks, m).mean(axis=1)
        v = agg.var()
        if v <= 0.0:
            continue
        log_m.append(math.log(m))
        log_var.append(math.log(v))
    if len(log_m) < 2:
        raise DegenerateSequenceError("not enough variance across block sizes")
    slope = np.polyfit(log_m, log_var, 1)[0]
    return 1.0 + slope / 2.0


def truncated_normal_mean(mean: float, sigma: float,
                          bounds: RateBounds = RateBounds()) -> float:
    """Mean of Normal(mean, sigma^2) conditioned on [bounds.lo, bounds.hi].

    This is the analytic long-run mean of a REJECT-bounded Gaussian stream.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0.0:
        return mean
    alpha = (bounds.lo - mean) / sigma
    beta = (bounds.hi - mean) / sigma
    mass = norm.cdf(beta) - norm.cdf(alpha)
    if mass < 1e-12:
        raise DegenerateSequenceError(
            f"interval [{bounds.lo}, {bounds.hi}] has negligible mass under "
            f"Normal({mean}, {sigma}^2)"
        )
    return mean + sigma * (norm.pdf(alpha) - norm.pdf(beta)) / mass


class BoundedRateStream:
    """Lazy, seeded stream of bounded fGn rates for one video source.

    Rates are synthesized in blocks (default 2^16 samples) from one
    persistent RNG, bounded on demand, and handed out one at a time, so a
    long run never pre-materializes its full rate sequence.
    """

    def __init__(self, hurst: float, mean: float, sigma: float, seed: int,
                 bounds: RateBounds = RateBounds(),
                 mode: BoundingMode = BoundingMode.REJECT,
                 block: int = 1 << 16):
        # Parameter validation via the dataclass invariants.
        FgnParams(hurst=hurst, mean=mean, sigma=sigma, length=block, seed=seed)
        self.hurst = hurst
        self.mean = mean
        self.sigma = sigma
        self.bounds = bounds
        self.mode = mode
        self.block = block
        self._rng = np.random.default_rng(seed)
        self._buf = None
        self._pos = 0

    def _refill(self):
        for _ in range(8):
            if self.sigma == 0.0:
                raw = np.full(self.block, self.mean)
            else:
                raw = self.mean + self.sigma * _synthesize_unit(
                    self._rng, self.block, self.hurst)
            try:
                self._buf = bound_sequence(raw, self.mode, self.bounds).values
            except DegenerateSequenceError:
                continue
            self._pos = 0
            return
        raise DegenerateSequenceError(
            "bounding rejected every sample across 8 consecutive blocks"
        )

    def next(self) -> float:
        if self._buf is None or self._pos >= len(self._buf):
            self._refill()
        value = float(self._buf[self._pos])
        self._pos += 1
        return value
