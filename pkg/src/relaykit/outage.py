"""Outage probabilities: closed-form bounds and seeded Monte Carlo curves.

The outage event at rate K and RNSNR S is ``S <= B`` where ``B`` is the
protocol's threshold for the current fading state.  The analytic bounds are
functions of ``u = 1/S`` only.  They are written so that no step subtracts
two numbers close to one, which keeps relative accuracy down to ``S ~ 1e8``.

Monte Carlo estimates reuse one gain sample for every point of the S grid
(common random numbers).  For HDP at finite rate the exact threshold is
bracketed by its zero- and infinite-rate limits; the flow program is solved
only for samples whose bracket straddles a grid point.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import flow
from .fading import CHUNK_SIZE, GainArrays, chunk_sizes, db_to_linear, draw_gains, stream
from .fullduplex import b_df_array, b_lb_array
from .special import integrate, one_minus_xk1_decay, xk1_decay

Z_95 = 1.959963984540054
WILSON_BELOW = 30
MIN_SAMPLES = 10_000


class Protocol(str, enum.Enum):
    LB = "FullDuplexLB"
    DF = "FullDuplexDF"
    HDP1 = "HDP1"
    HDP2 = "HDP2"
    DIRECT = "Direct"


class RateTag(str, enum.Enum):
    ZERO = "ZeroLimit"
    INF = "InfLimit"


Rate = Union[float, RateTag]


# ---------------------------------------------------------------------------
# Closed forms


def claim1(x: float, z: float = 0.0) -> float:
    """``Pr(1/Z12 + 1/(Z23 + z) >= 1/x)`` for unit-mean exponential gains."""
    if not x > 0:
        raise ValueError("x must be positive")
    if not 0 <= z <= x:
        raise ValueError("need 0 <= z <= x")
    val = 1.0 - xk1_decay(2.0 * x) * math.exp(z)
    return min(max(val, 0.0), 1.0)


def direct_outage(s):
    """Outage of direct transmission, ``Pr(Z13 <= 1/S) = 1 - e^{-1/S}``."""
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0)):
        raise ValueError("RNSNR must be positive")
    out = -np.expm1(-1.0 / s)
    return float(out) if out.ndim == 0 else out


def _u_minus_one_minus_exp(u):
    # u - (1 - e^{-u}) >= 0; the series avoids cancellation for small u
    if u < 1e-3:
        return u * u * (0.5 - u / 6.0 + u * u / 24.0)
    return u + math.expm1(-u)


def _relay_tail(u: float, damped: bool) -> float:
    """Shared integral pair of the HDP upper bounds.

    ``damped`` selects the HDP1 variant (extra ``e^{-z}`` weights).
    """
    w = (lambda z: np.exp(-z)) if damped else (lambda z: np.ones_like(z))
    tol = dict(abs_tol=1e-6 * u * u * 1e-9, rel_tol=1e-12, max_intervals=4000)

    # first term: (1 - e^{-u}) - int_0^u f(2z) w(z) dz, rewritten without the unit part
    def first(v):  # z = e^v
        z = np.exp(v)
        return one_minus_xk1_decay(2.0 * z) * w(z) * z

    lo = math.log(u) - 40.0  # the neglected head is below u^2 e^-80
    head = integrate(first, lo, math.log(u), **tol).value
    if not damped:
        # int_0^u 1 dz = u overshoots 1 - e^{-u}
        head -= _u_minus_one_minus_exp(u)

    # second term: int_0^{sqrt2 u} [f(2z) - f(4u^2/z)] w(z) dz
    c = 4.0 * u * u

    def second(z):
        return (one_minus_xk1_decay(c / z) - one_minus_xk1_decay(2.0 * z)) * w(z)

    def second_log(v):
        z = np.exp(v)
        return second(z) * z

    top = math.sqrt(2.0) * u
    cut = min(c / 60.0, top)  # below this f(4u^2/z) < e^{-100}
    near = integrate(second, 0.0, cut, **tol).value
    far = integrate(second_log, math.log(cut), math.log(top), **tol).value
    return head + near + far


def thm4_bound(part: int, s: float) -> float:
    """Analytic outage bounds at RNSNR ``s``.

    1: cut-set lower bound on full-duplex outage.
    2: lower bound on decode-and-forward outage.
    3, 4: upper and lower bound on HDP1 outage (4 is tight as K -> 0).
    5, 6: upper and lower bound on HDP2 outage (6 is tight as K -> 0).
    """
    if part not in (1, 2, 3, 4, 5, 6):
        raise ValueError(f"part must be 1..6, got {part!r}")
    if not s > 0:
        raise ValueError("RNSNR must be positive")
    u = 1.0 / s
    if part == 1:
        val = math.expm1(-u) ** 2
    elif part == 2:
        # 1 - e^{-u} - u e^{-2u} = u(1 - e^{-2u}) - (u - 1 + e^{-u})
        val = -u * math.expm1(-2.0 * u) - _u_minus_one_minus_exp(u)
    elif part == 4:
        val = one_minus_xk1_decay(2.0 * u) * -math.expm1(-u)
    elif part == 6:
        # 1 - e^{-u} - u f(2u) = u (1 - f(2u)) - (u - 1 + e^{-u})
        val = u * one_minus_xk1_decay(2.0 * u) - _u_minus_one_minus_exp(u)
    else:
        val = _relay_tail(u, damped=(part == 3))
    return min(max(val, 0.0), 1.0)


def thm4_curve(part: int, s) -> np.ndarray:
    return np.array([thm4_bound(part, float(v)) for v in np.atleast_1d(s)])


# ---------------------------------------------------------------------------
# Confidence intervals


def wald_halfwidth(p: float, n: int, z: float = Z_95) -> float:
    return z * math.sqrt(p * (1.0 - p) / n)


def wilson_interval(events: int, n: int, z: float = Z_95) -> tuple[float, float]:
    p = events / n
    z2 = z * z
    den = 1.0 + z2 / n
    centre = (p + z2 / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / den
    lo = 0.0 if events == 0 else max(0.0, centre - half)
    hi = 1.0 if events == n else min(1.0, centre + half)
    return lo, hi


def interval(events: int, n: int) -> tuple[float, float]:
    """95% interval: Wald normally, Wilson when fewer than 30 events."""
    p = events / n
    if events < WILSON_BELOW:
        return wilson_interval(events, n)
    h = wald_halfwidth(p, n)
    return max(0.0, p - h), min(1.0, p + h)


# ---------------------------------------------------------------------------
# Curve containers


@dataclass(frozen=True)
class OutagePoint:
    rnsnr_db: float
    prob: float
    ci_lo: float
    ci_hi: float
    n_samples: int
    estimator: str = "MC"
    events: int = -1

    @property
    def ci_halfwidth_95(self) -> float:
        return 0.5 * (self.ci_hi - self.ci_lo)


@dataclass(frozen=True)
class OutageCurve:
    protocol: Protocol
    rate: Rate | None
    points: tuple[OutagePoint, ...] = field(default_factory=tuple)

    def __post_init__(self):
        db = [p.rnsnr_db for p in self.points]
        if any(b <= a for a, b in zip(db, db[1:])):
            raise ValueError("curve points must be strictly increasing in RNSNR")

    @property
    def snr_db(self) -> np.ndarray:
        return np.array([p.rnsnr_db for p in self.points])

    @property
    def probs(self) -> np.ndarray:
        return np.array([p.prob for p in self.points])

    @property
    def events(self) -> np.ndarray:
        return np.array([p.events for p in self.points])


_PART_PROTOCOL = {1: Protocol.LB, 2: Protocol.DF, 3: Protocol.HDP1, 4: Protocol.HDP1, 5: Protocol.HDP2, 6: Protocol.HDP2}


def analytic_curve(part: int, snr_db: Sequence[float]) -> OutageCurve:
    s = db_to_linear(snr_db)
    vals = thm4_curve(part, s)
    rate = RateTag.ZERO if part in (4, 6) else None
    pts = tuple(OutagePoint(float(d), float(p), float(p), float(p), 0, "Analytic") for d, p in zip(snr_db, vals))
    return OutageCurve(_PART_PROTOCOL[part], rate, pts)


def direct_curve(snr_db: Sequence[float]) -> OutageCurve:
    vals = direct_outage(db_to_linear(snr_db))
    pts = tuple(OutagePoint(float(d), float(p), float(p), float(p), 0, "Analytic") for d, p in zip(snr_db, np.atleast_1d(vals)))
    return OutageCurve(Protocol.DIRECT, None, pts)


# ---------------------------------------------------------------------------
# Per-sample thresholds


def _as_rate(rate) -> Rate:
    if isinstance(rate, RateTag):
        return rate
    if isinstance(rate, str):
        return RateTag(rate)
    rate = float(rate)
    if not (rate > 0 and math.isfinite(rate)):
        raise ValueError("rate must be positive and finite, or a RateTag")
    return rate


def _limits(protocol: Protocol, g: GainArrays):
    z23 = g.z23 if protocol is Protocol.HDP1 else g.z13 + g.z23
    return flow.b1_limit_zero_array(g.z13, g.z12, z23), flow.b1_limit_inf_array(g.z13, g.z12, z23)


def threshold_samples(protocol: Protocol, rate: Rate, g: GainArrays) -> np.ndarray:
    """Threshold ``B`` for every realization in ``g`` (exact, no bracketing)."""
    protocol = Protocol(protocol)
    rate = _as_rate(rate)
    with np.errstate(divide="ignore"):
        if protocol is Protocol.DIRECT:
            return 1.0 / g.z13
    if protocol is Protocol.LB:
        return b_lb_array(g.z13, g.z12, g.z23)
    if protocol is Protocol.DF:
        return b_df_array(g.z13, g.z12, g.z23)
    lo, hi = _limits(protocol, g)
    if rate is RateTag.ZERO:
        return lo
    if rate is RateTag.INF:
        return hi
    solver = flow.b1_array if protocol is Protocol.HDP1 else flow.b2_array
    return solver(g.z13, g.z12, g.z23, rate)


def _exceedances(protocol: Protocol, rate: Rate, g: GainArrays, s_grid: np.ndarray, cache=None) -> np.ndarray:
    """Count of samples with ``s <= B`` at every grid point (grid ascending).

    ``cache`` (a dict) lets several jobs on the same chunk share the limits.
    """
    if protocol in (Protocol.HDP1, Protocol.HDP2) and not isinstance(rate, RateTag):
        if cache is None:
            cache = {}
        if protocol not in cache:
            cache[protocol] = _limits(protocol, g)
        lo, hi = cache[protocol]
        # B is non-decreasing in K, so lo <= B <= hi; solve only where a grid point falls in (lo, hi]
        need = np.searchsorted(s_grid, hi, side="right") > np.searchsorted(s_grid, lo, side="right")
        b = lo.copy()
        if need.any():
            sub = GainArrays(g.z13[need], g.z12[need], g.z23[need])
            b[need] = threshold_samples(protocol, rate, sub)
    else:
        b = threshold_samples(protocol, rate, g)
    # number of grid points with s <= B, per sample
    reach = np.searchsorted(s_grid, b, side="right")
    hist = np.bincount(reach, minlength=len(s_grid) + 1)
    return hist[::-1].cumsum()[::-1][1:]


def _chunk_job(args):
    seed, index, size, jobs = args
    g = draw_gains(stream(seed, index), size)
    cache: dict = {}
    return [_exceedances(p, r, g, grid, cache) for p, r, grid in jobs]


def mc_event_counts(
    jobs: Sequence[tuple[Protocol, Rate, np.ndarray]],
    n_samples: int,
    seed: int,
    workers: int = 1,
    chunk: int = CHUNK_SIZE,
) -> list[np.ndarray]:
    """Outage event counts for ``(protocol, rate, ascending linear RNSNR grid)`` jobs.

    All jobs see the same gain realizations.  Chunks are summed in index
    order, so the result does not depend on ``workers``.
    """
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"n_samples must be >= {MIN_SAMPLES}")
    jobs = [(Protocol(p), _as_rate(r), np.asarray(grid, dtype=float)) for p, r, grid in jobs]
    for _, _, grid in jobs:
        if grid.ndim != 1 or len(grid) == 0 or np.any(np.diff(grid) <= 0) or np.any(grid <= 0):
            raise ValueError("RNSNR grid must be positive, non-empty and strictly increasing")
    tasks = [(seed, j, n, jobs) for j, n in enumerate(chunk_sizes(n_samples, chunk))]
    totals = [np.zeros(len(grid), dtype=np.int64) for _, _, grid in jobs]

    def add(res):
        for acc, c in zip(totals, res):
            acc += c

    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for res in pool.map(_chunk_job, tasks):
                add(res)
    else:
        for t in tasks:
            add(_chunk_job(t))
    return totals


def mc_outage_sweep(
    jobs: Sequence[tuple[Protocol, Rate]],
    snr_db: Sequence[float],
    n_samples: int,
    seed: int,
    workers: int = 1,
    chunk: int = CHUNK_SIZE,
) -> dict[tuple[Protocol, Rate], OutageCurve]:
    """Monte Carlo outage curves for several (protocol, rate) pairs on shared gains."""
    db = np.asarray(snr_db, dtype=float)
    if db.ndim != 1 or len(db) == 0 or np.any(np.diff(db) <= 0):
        raise ValueError("snr grid must be non-empty and strictly increasing")
    jobs = [(Protocol(p), _as_rate(r)) for p, r in jobs]
    s_grid = db_to_linear(db)
    totals = mc_event_counts([(p, r, s_grid) for p, r in jobs], n_samples, seed, workers, chunk)
    out = {}
    for (p, r), counts in zip(jobs, totals):
        pts = []
        for d, c in zip(db, counts):
            lo, hi = interval(int(c), n_samples)
            pts.append(OutagePoint(float(d), c / n_samples, lo, hi, n_samples, "MC", int(c)))
        out[(p, r)] = OutageCurve(p, r, tuple(pts))
    return out


def mc_outage(protocol, rate, snr_db, n_samples: int, seed: int, workers: int = 1) -> OutageCurve:
    """Monte Carlo outage curve ``Pr(S <= B)`` over an RNSNR grid in dB."""
    key = (Protocol(protocol), _as_rate(rate))
    return mc_outage_sweep([key], snr_db, n_samples, seed, workers)[key]


def crossing_db(snr_db, probs, target: float) -> float:
    """RNSNR (dB) where a decreasing outage curve crosses ``target``.

    Interpolates ``log P`` linearly in dB between the bracketing grid points.
    """
    db = np.asarray(snr_db, dtype=float)
    p = np.asarray(probs, dtype=float)
    above = np.nonzero(p >= target)[0]
    below = np.nonzero(p < target)[0]
    if len(above) == 0 or len(below) == 0:
        raise ValueError("target outage is not bracketed by the curve")
    i = above[-1]
    j = i + 1
    if j >= len(p) or p[j] >= target or p[j] <= 0:
        raise ValueError("curve does not cross target cleanly")
    la, lb, lt = math.log(p[i]), math.log(p[j]), math.log(target)
    return float(db[i] + (db[j] - db[i]) * (la - lt) / (la - lb))
