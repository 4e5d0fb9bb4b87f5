"""Diversity-multiplexing behaviour of the relay protocols.

At multiplexing gain ``mux`` the rate scales with the plain SNR ``S~`` as
``K = mux * ln(1 + S~)``.  The outage slope of ``-ln P`` against ``ln S~``
then estimates the diversity order, which for both half-duplex protocols is
``2 (1 - mux)`` asymptotically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fading import db_to_linear
from .outage import Protocol, mc_event_counts

MIN_EVENTS = 100
MIN_SPAN_DB = 15.0


class InsufficientEventsError(RuntimeError):
    """Some grid point saw too few outages for a reliable slope."""


@dataclass(frozen=True)
class DmtPoint:
    protocol: Protocol
    multiplexing_gain: float
    snr_db_grid: tuple[float, ...]
    outage: tuple[float, ...]
    events: tuple[int, ...]
    fitted_slope: float
    slope_stderr: float

    def __post_init__(self):
        if not 0 < self.multiplexing_gain < 1:
            raise ValueError("multiplexing gain must lie strictly inside (0, 1)")
        if len(self.snr_db_grid) < 4:
            raise ValueError("a slope needs at least 4 grid points")

    @property
    def nominal(self) -> float:
        """Asymptotic diversity order ``2 (1 - mux)`` of the half-duplex protocols."""
        return 2.0 * (1.0 - self.multiplexing_gain)


def rnsnr_from_snr(snr_tilde: float, mux: float) -> tuple[float, float]:
    """``(S, K)`` induced by plain SNR ``snr_tilde`` at multiplexing gain ``mux``.

    ``mux = 1`` is accepted here (it gives ``S = 1``); fits reject it.
    """
    if not snr_tilde > 0:
        raise ValueError("SNR must be positive")
    if not 0 < mux <= 1:
        raise ValueError("multiplexing gain must lie in (0, 1]")
    k = mux * math.log1p(snr_tilde)
    return snr_tilde / math.expm1(k), k


def weighted_slope(x, y, w) -> tuple[float, float]:
    """Weighted least-squares slope of ``y`` on ``x`` and its standard error."""
    x, y, w = (np.asarray(v, dtype=float) for v in (x, y, w))
    sw = w.sum()
    xm = (w * x).sum() / sw
    ym = (w * y).sum() / sw
    sxx = (w * (x - xm) ** 2).sum()
    slope = (w * (x - xm) * (y - ym)).sum() / sxx
    return float(slope), float(math.sqrt(1.0 / sxx))


def diversity_fits(
    protocols,
    mux: float,
    snr_db_grid,
    n_samples: int,
    seed: int,
    workers: int = 1,
    min_events: int = MIN_EVENTS,
) -> list[DmtPoint]:
    """Fit the outage slope at multiplexing gain ``mux`` for several protocols.

    Each grid point has its own rate, so every point is a separate
    single-threshold job; all jobs share one gain sample.  Weights are
    inverse variances of ``-ln P`` (``~ 1/events``).
    """
    protocols = [Protocol(p) for p in protocols]
    if not 0 < mux < 1:
        raise ValueError("multiplexing gain must lie strictly inside (0, 1)")
    db = np.asarray(snr_db_grid, dtype=float)
    if len(db) < 4 or db.max() - db.min() < MIN_SPAN_DB:
        raise ValueError(f"grid needs >= 4 points spanning >= {MIN_SPAN_DB} dB")
    points = [rnsnr_from_snr(float(st), mux) for st in db_to_linear(db)]
    jobs = [(p, k, np.array([s])) for p in protocols for s, k in points]
    flat = np.array([int(c[0]) for c in mc_event_counts(jobs, n_samples, seed, workers)])
    out = []
    for i, protocol in enumerate(protocols):
        counts = flat[i * len(db):(i + 1) * len(db)]
        if counts.min() < min_events:
            raise InsufficientEventsError(
                f"{protocol.value}: only {counts.min()} outage events at {db[counts.argmin()]:.1f} dB "
                f"(need {min_events}); raise n_samples"
            )
        p = counts / n_samples
        var = (1.0 - p) / counts  # delta method for -ln P
        slope, se = weighted_slope(np.log(db_to_linear(db)), -np.log(p), 1.0 / var)
        out.append(DmtPoint(protocol, mux, tuple(float(v) for v in db), tuple(float(v) for v in p),
                            tuple(int(c) for c in counts), slope, se))
    return out


def diversity_fit(protocol, mux: float, snr_db_grid, n_samples: int, seed: int, workers: int = 1,
                  min_events: int = MIN_EVENTS) -> DmtPoint:
    """Single-protocol form of :func:`diversity_fits`."""
    return diversity_fits([protocol], mux, snr_db_grid, n_samples, seed, workers, min_events)[0]
