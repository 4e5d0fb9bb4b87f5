"""Long-term power control and delay-limited rates.

With only an average RNSNR budget ``S_bar`` the transmitter can invert the
channel (spend exactly ``B(Z)``) whenever ``B(Z) < s*`` and stay silent
otherwise.  ``s*`` is the largest level whose truncated mean
``S(s) = E[B 1{B <= s}]`` stays below the budget.  Zero outage needs
``S_bar >= E[B]``, so ``E[B]`` in dB is the loss against an AWGN channel.

Thresholds have tails ``Pr(B > s) ~ (a + b ln s) / s^2``: the mean is finite
but the variance is not.  The Monte Carlo estimator therefore averages
``min(B, s0)`` and adds ``int_{s0}^inf Pr(B > s) ds`` from a tail model
fitted on the exceedances just below ``s0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special as sp

from .fading import sample_gains
from .outage import Protocol, RateTag, _as_rate, threshold_samples
from .special import integrate, one_minus_xk1_decay

TAIL_START = 1e3
DEFAULT_BUDGET = 1 << 23
MAX_TAIL_EXPONENT = 1.5  # Pr(B > s) must decay at least like s^-1.5 near s0


class DivergenceError(ArithmeticError):
    """The fitted tail of ``Pr(B > s)`` is not shrinking like ``1/s^2``."""


def _db(x: float) -> float:
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class ExpectedBound:
    value: float
    stderr: float
    method: str
    tail: float = 0.0

    @property
    def db(self) -> float:
        return _db(self.value)

    @property
    def stderr_db(self) -> float:
        return 10.0 / math.log(10.0) * self.stderr / self.value


# ---------------------------------------------------------------------------
# Empirical laws of B


@dataclass(frozen=True)
class EmpiricalLaw:
    """Discrete law of ``B``: sorted atoms with probabilities.

    Monte Carlo samples become equal-weight atoms; hand-built laws serve as
    test fixtures for the truncated-mean machinery.
    """

    values: np.ndarray
    probs: np.ndarray

    @classmethod
    def from_samples(cls, samples) -> "EmpiricalLaw":
        v = np.sort(np.asarray(samples, dtype=float))
        return cls(v, np.full(len(v), 1.0 / len(v)))

    @classmethod
    def from_atoms(cls, values, probs) -> "EmpiricalLaw":
        v = np.asarray(values, dtype=float)
        p = np.asarray(probs, dtype=float)
        if np.any(p < 0) or not math.isclose(p.sum(), 1.0, rel_tol=1e-12):
            raise ValueError("probabilities must be nonnegative and sum to 1")
        order = np.argsort(v)
        return cls(v[order], p[order])

    def __post_init__(self):
        if np.any(np.diff(self.values) < 0):
            raise ValueError("atoms must be sorted")
        # cumulative truncated mean after each atom
        mass = np.where(np.isfinite(self.values), self.values * self.probs, np.inf)
        object.__setattr__(self, "_cum", np.concatenate([[0.0], np.cumsum(mass)]))

    @property
    def mean(self) -> float:
        return float(self._cum[-1])

    def truncated_mean(self, s: float) -> float:
        """``S(s) = E[B 1{B <= s}]``."""
        if s <= 0:
            return 0.0
        return float(self._cum[np.searchsorted(self.values, s, side="right")])

    def prob_at_least(self, s: float) -> float:
        return float(self.probs[np.searchsorted(self.values, s, side="left"):].sum())


def integrated_bound(law: EmpiricalLaw, s: float) -> float:
    """Truncated mean ``E[B 1{B <= s}]``; non-decreasing in ``s``."""
    return law.truncated_mean(s)


@dataclass(frozen=True)
class PowerPolicy:
    """Truncated channel inversion: spend ``B(Z)`` if ``B(Z) < s*``, else nothing."""

    protocol: str
    threshold_s_star: float
    target_avg_rnsnr: float
    outage: float

    def rnsnr(self, b):
        b = np.asarray(b, dtype=float)
        return np.where(b < self.threshold_s_star, b, 0.0)


def threshold(law: EmpiricalLaw, target_avg: float, protocol: str = "custom") -> PowerPolicy:
    """Policy with ``s* = sup{s : S(s) < S_bar}``.

    ``S(s)`` is a right-continuous staircase over the atoms, so the supremum
    is the first atom at which the cumulative mean reaches the budget; a
    binary search over the cached cumulative sums finds it.
    """
    if not target_avg > 0:
        raise ValueError("average RNSNR budget must be positive")
    if target_avg >= law.mean:
        return PowerPolicy(protocol, math.inf, target_avg, 0.0)
    # _cum[i + 1] is S(values[i])
    i = int(np.searchsorted(law._cum[1:], target_avg, side="left"))
    s_star = float(law.values[i])
    return PowerPolicy(protocol, s_star, target_avg, law.prob_at_least(s_star))


def sample_law(protocol, rate, n_samples: int, seed: int) -> EmpiricalLaw:
    g = sample_gains(seed, n_samples)
    return EmpiricalLaw.from_samples(threshold_samples(Protocol(protocol), _as_rate(rate), g))


# ---------------------------------------------------------------------------
# Expected thresholds


def majorant_b1(z13, z12, z23):
    """Rate-free envelope ``sqrt(2/z13) sqrt(1/z12 + 1/z23)`` of the HDP1 threshold (relay regime)."""
    z13, z12, z23 = (np.asarray(v, dtype=float) for v in (z13, z12, z23))
    return np.sqrt(2.0 / z13) * np.sqrt(1.0 / z12 + 1.0 / z23)


def _tail_fit(b: np.ndarray, s0: float):
    """Fit ``s^2 Pr(B > s) = a + c ln s`` on ``[s0/20, s0]``; returns ``(a, c, exponent)``.

    ``exponent`` is the local log-log slope of ``Pr(B > s)`` over the same grid.
    """
    n = len(b)
    grid = np.geomspace(s0 / 20.0, s0, 12)
    tail = np.sort(b[b > grid[0]])
    counts = len(tail) - np.searchsorted(tail, grid, side="right")
    if counts[0] < 100:
        raise ValueError(f"only {counts[0]} samples exceed {grid[0]:.3g}; raise the budget")
    p = counts / n
    y = grid**2 * p
    w = n / (grid**4 * np.maximum(p, 0.5 / n))  # inverse variance of s^2 p_hat
    x = np.log(grid)
    sw = w.sum()
    xm, ym = (w * x).sum() / sw, (w * y).sum() / sw
    c = (w * (x - xm) * (y - ym)).sum() / (w * (x - xm) ** 2).sum()
    live = counts > 0
    # log P has variance ~ 1/counts
    exponent = float(np.polyfit(x[live], np.log(p[live]), 1, w=np.sqrt(counts[live]))[0])
    return ym - c * xm, c, exponent


def _tail_integral(a, c, s0):
    # int_{s0}^inf (a + c ln s) / s^2 ds
    return (a + c * (math.log(s0) + 1.0)) / s0


def expected_bound_mc(samples, s0: float = TAIL_START) -> ExpectedBound:
    """Tail-corrected Monte Carlo mean of a heavy-tailed threshold sample."""
    b = np.asarray(samples, dtype=float)
    if len(b) < 10**6:
        raise ValueError("tail-corrected estimator needs >= 1e6 samples")
    clipped = np.minimum(b, s0)
    body = float(clipped.mean())
    body_se = float(clipped.std(ddof=1) / math.sqrt(len(b)))
    a, c, exponent = _tail_fit(b, s0)
    tail = _tail_integral(a, c, s0)
    # Pr(B > s) must fall clearly faster than 1/s for the mean to exist
    if tail < 0 or exponent > -MAX_TAIL_EXPONENT:
        raise DivergenceError(
            f"tail beyond s0 = {s0} is not decaying fast enough (Pr(B > s) ~ s^{exponent:.2f}, tail {tail:.3g})"
        )
    # crude tail uncertainty: Poisson error of the exceedances at s0
    exceed = max(int((b > s0).sum()), 1)
    tail_se = tail / math.sqrt(exceed)
    return ExpectedBound(body + tail, math.hypot(body_se, tail_se), "mc", tail)


def _log_integral(f, lo=-40.0, hi=40.0):
    # int_0^inf f(s) ds with s = e^v
    return integrate(lambda v: f(np.exp(v)) * np.exp(v), lo, hi, abs_tol=1e-13, rel_tol=1e-12)


def _e1_scaled(z):
    # e^z E1(z); the quadrature ranges stop well before exp overflows
    return sp.exp1(z) * np.exp(z)


def expected_bound_quadrature(protocol, rate) -> ExpectedBound:
    """Deterministic ``E[B]`` where a one-dimensional representation exists.

    Full-duplex bounds: conditional means of ``1/(Z + z)`` are ``e^z E1(z)``.
    HDP zero-rate limits: ``E[B] = int Pr(B > s) ds`` with the exact outage
    expressions.
    """
    protocol = Protocol(protocol)
    rate = _as_rate(rate)
    if protocol is Protocol.LB:
        # B = 1/(Z12+Z13) + 1/(Z13+Z23) - Z13 / ((Z12+Z13)(Z13+Z23))
        r = integrate(lambda z: z * np.exp(-z) * _e1_scaled(z) ** 2, 0.0, 60.0, abs_tol=1e-13, rel_tol=1e-12, points=(1e-3, 1.0))
        return ExpectedBound(2.0 - r.value, r.abs_error_estimate, "quadrature")
    if protocol is Protocol.DF:
        # direct branch gives ln 2; relay branch 2 ln 2 - int x E1(x)^2 dx
        r = integrate(lambda x: x * sp.exp1(x) ** 2, 0.0, 60.0, abs_tol=1e-13, rel_tol=1e-12, points=(1e-3, 1.0))
        return ExpectedBound(3.0 * math.log(2.0) - r.value, r.abs_error_estimate, "quadrature")
    if protocol in (Protocol.HDP1, Protocol.HDP2) and rate is RateTag.ZERO:
        if protocol is Protocol.HDP1:
            def tail(s):
                u = 1.0 / s
                return one_minus_xk1_decay(2.0 * u) * -np.expm1(-u)
        else:
            def tail(s):
                u = 1.0 / s
                small = u * u * (0.5 - u / 6.0 + u * u / 24.0)
                excess = np.where(u < 1e-3, small, u + np.expm1(-u))
                return u * one_minus_xk1_decay(2.0 * u) - excess
        r = _log_integral(tail)
        return ExpectedBound(r.value, r.abs_error_estimate, "quadrature")
    raise ValueError(f"no quadrature route for {protocol.value} at rate {rate!r}")


def expected_bound(protocol, rate, method: str = "mc", budget: int = DEFAULT_BUDGET, seed: int = 0) -> ExpectedBound:
    """``E[B]`` (linear) by ``method`` in {"mc", "quadrature"}."""
    if method == "quadrature":
        return expected_bound_quadrature(protocol, rate)
    if method != "mc":
        raise ValueError(f"unknown method {method!r}")
    if budget < 10**6:
        raise ValueError("MC budget must be >= 1e6")
    g = sample_gains(seed, budget)
    return expected_bound_mc(threshold_samples(Protocol(protocol), _as_rate(rate), g))


# ---------------------------------------------------------------------------
# Table and rate curves

TABLE_ROWS = (
    ("e_b_lb_db", Protocol.LB, RateTag.ZERO),
    ("e_b_df_db", Protocol.DF, RateTag.ZERO),
    ("e_b1_zero_db", Protocol.HDP1, RateTag.ZERO),
    ("e_b1_inf_db", Protocol.HDP1, RateTag.INF),
    ("e_b2_zero_db", Protocol.HDP2, RateTag.ZERO),
    ("e_b2_inf_db", Protocol.HDP2, RateTag.INF),
)


@dataclass(frozen=True)
class DelayLimitedTable:
    e_b_lb_db: float
    e_b_df_db: float
    e_b1_zero_db: float
    e_b1_inf_db: float
    e_b2_zero_db: float
    e_b2_inf_db: float
    stderr_db: dict

    def rows(self):
        return [(name, getattr(self, name), self.stderr_db[name]) for name, _, _ in TABLE_ROWS]


def delay_limited_table(budget: int = DEFAULT_BUDGET, seed: int = 0, s0: float = TAIL_START) -> DelayLimitedTable:
    """All six ``E[B]`` losses in dB from one shared gain sample."""
    g = sample_gains(seed, budget)
    vals, errs = {}, {}
    for name, protocol, rate in TABLE_ROWS:
        est = expected_bound_mc(threshold_samples(protocol, rate, g), s0)
        vals[name] = est.db
        errs[name] = float(est.stderr_db)
    return DelayLimitedTable(**vals, stderr_db=errs)


FIG5_CURVES = ("lb", "df", "hdp1_zero", "hdp1_inf", "hdp2_zero", "hdp2_inf")


def fig5_data(rate_grid: Sequence[float], table: DelayLimitedTable) -> list[tuple[float, str, float]]:
    """Average SNR ``E[B] (e^K - 1)`` per rate, plus the AWGN reference ``e^K - 1``."""
    means = [10 ** (v / 10.0) for _, v, _ in table.rows()]
    out = []
    for k in rate_grid:
        scale = math.expm1(k)
        for name, m in zip(FIG5_CURVES, means):
            out.append((float(k), name, m * scale))
        out.append((float(k), "awgn", scale))
    return out
