"""Half-duplex flow control: minimum-energy splits for HDP1 and HDP2.

A unit slot is cut into a broadcast sub-slot of length ``t1`` (source to
relay and destination) and a multiple-access sub-slot of length
``t2 = 1 - t1`` (source and relay to destination).  The rate ``K`` (nats) is
split into a direct flow ``x1`` sent in the first sub-slot, a relayed flow
``x2`` and a direct flow ``x3`` sent in the second.  Minimizing
``t1 * S_CB + t2 * S_MA`` and dividing by ``e^K - 1`` gives the RNSNR
threshold ``B1(K)``.  HDP2 lets the source add an in-phase copy of the relayed
flow; its threshold ``B2(K)`` is ``B1(K)`` evaluated with ``z23`` replaced by
``z13 + z23``.

When ``z13 >= M_H(z12, z23)`` the relay path is weaker than the direct link
and the threshold is ``1/z13``.  Otherwise the optimum lies on one of three
pieces, each a convex function of ``t1`` on its own interval.  The first
piece of the high-rate case has a closed-form minimizer; the others are
minimized with a vectorized golden-section search.

All solvers accept numpy arrays so that Monte Carlo runs can evaluate
millions of realizations per call.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .fading import LinkGains, harmonic_mean, harmonic_mean_array

#: Above this rate the high-rate limit is returned (``asymptotic=True``).
ASYMPTOTIC_RATE = 50.0
_GOLDEN_ITERS = 64
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class Branch(str, enum.Enum):
    DIRECT = "DirectLink"
    TILDE_S1 = "TildeS1"
    TILDE_S2 = "TildeS2"
    TILDE_S3 = "TildeS3"
    HAT_S1 = "HatS1"
    HAT_S2 = "HatS2"
    HAT_S3 = "HatS3"


# integer codes used by the vectorized solver
_CODES = list(Branch)


class InfeasibleError(ValueError):
    """A zero-length sub-slot was asked to carry data."""


class RegimeError(ValueError):
    """Case constants requested outside the relay-useful regime."""


@dataclass(frozen=True)
class FlowSplit:
    x1: float
    x2: float
    x3: float
    t1: float
    t2: float

    @property
    def rate(self) -> float:
        return self.x1 + self.x2 + self.x3


@dataclass(frozen=True)
class FlowSolution:
    split: FlowSplit
    bound: float
    branch: Branch
    asymptotic: bool = False


@dataclass(frozen=True)
class CaseConstants:
    a1: float
    a2: float
    t_star: float


@dataclass(frozen=True)
class PowerAllocation:
    """Energy shares behind a flow split.

    ``cb_source_fraction`` is the share of first-sub-slot power carrying the
    direct flow ``x1``; ``ma_source_fraction`` the source share of the
    second-sub-slot power.  ``coherent`` holds ``(P1, P2, P3)`` for HDP2: source
    power on the in-phase copy, relay power, source power on ``x3``, per unit
    of ``N0 W`` (multiply by ``t2`` for energy).
    """

    cb_source_fraction: float
    ma_source_fraction: float
    coherent: tuple[float, float, float] | None = None


# ---------------------------------------------------------------------------
# Per-sub-slot SNR requirements


def _layer(rate: float, gain: float) -> float:
    # SNR to push `rate` nats through a link of power gain `gain`, no interference
    if rate <= 0.0:
        return 0.0
    return math.expm1(rate) / gain if gain > 0 else math.inf


def _two_user(r_strong: float, z_strong: float, r_weak: float, z_weak: float) -> float:
    # the weaker link sees the stronger layer as noise, inflating that layer by e^{r_weak}
    return _layer(r_weak, z_weak) + math.exp(r_weak) * _layer(r_strong, z_strong)


def _check_phase(t, *rates):
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"sub-slot length must lie in [0, 1], got {t!r}")
    if any(r < 0 for r in rates):
        raise ValueError("flows must be nonnegative")
    if t == 0.0 and any(r > 0 for r in rates):
        raise InfeasibleError("a zero-length sub-slot cannot carry data")


def s_cb(g: LinkGains, x1: float, x2: float, t1: float) -> float:
    """SNR for broadcasting ``x1/t1`` to the destination and ``x2/t1`` to the relay."""
    _check_phase(t1, x1, x2)
    if t1 == 0.0:
        return 0.0
    r1, r2 = x1 / t1, x2 / t1
    if g.z13 >= g.z12:
        return _two_user(r1, g.z13, r2, g.z12)
    return _two_user(r2, g.z12, r1, g.z13)


def _s_ma(z13, z23, x2, x3, t2):
    _check_phase(t2, x2, x3)
    if t2 == 0.0:
        return 0.0
    r2, r3 = x2 / t2, x3 / t2
    if z13 >= z23:
        return _two_user(r3, z13, r2, z23)
    return _two_user(r2, z23, r3, z13)


def s_ma(g: LinkGains, x2: float, x3: float, t2: float) -> float:
    """SNR for the relay sending ``x2/t2`` while the source sends ``x3/t2``."""
    return _s_ma(g.z13, g.z23, x2, x3, t2)


def s_ma_coherent(g: LinkGains, x2: float, x3: float, t2: float) -> float:
    """Multiple-access SNR when the source adds an in-phase copy of the relayed flow."""
    return _s_ma(g.z13, g.z13 + g.z23, x2, x3, t2)


def coherent_power_triple(g: LinkGains, x2: float, x3: float, t2: float) -> PowerAllocation:
    """KKT power split ``(P1, P2, P3)`` for the coherent sub-slot."""
    if not t2 > 0:
        raise ValueError("t2 must be positive")
    if g.z13 == 0:
        raise ValueError("coherent split is degenerate when z13 = 0")
    r2, r3 = x2 / t2, x3 / t2
    a = math.expm1(r3)
    c_minus_a = math.exp(r3) * math.expm1(r2)
    zt = g.z13 + g.z23
    p1 = c_minus_a * g.z13 / zt**2
    p2 = c_minus_a * g.z23 / zt**2
    p3 = a / g.z13
    total = p1 + p2 + p3
    return PowerAllocation(
        cb_source_fraction=math.nan,
        ma_source_fraction=(p1 + p3) / total if total > 0 else 0.0,
        coherent=(p1, p2, p3),
    )


def power_allocation(g: LinkGains, split: FlowSplit, coherent: bool = False) -> PowerAllocation:
    """Power shares realizing ``split`` (both sub-slots)."""
    cb_total = s_cb(g, split.x1, split.x2, split.t1)
    if cb_total > 0:
        r1, r2 = split.x1 / split.t1, split.x2 / split.t1
        if g.z13 >= g.z12:
            direct = _layer(r1, g.z13)
        else:
            direct = cb_total - _layer(r2, g.z12)
        cb_frac = min(max(direct / cb_total, 0.0), 1.0)
    else:
        cb_frac = 0.0
    if coherent and split.t2 > 0 and g.z13 > 0:
        trip = coherent_power_triple(g, split.x2, split.x3, split.t2)
        return PowerAllocation(cb_frac, trip.ma_source_fraction, trip.coherent)
    ma_total = s_ma(g, split.x2, split.x3, split.t2)
    if ma_total > 0:
        r2, r3 = split.x2 / split.t2, split.x3 / split.t2
        # the stronger transmitter is decoded first and absorbs the interference
        if g.z13 >= g.z23:
            source = ma_total - _layer(r2, g.z23)
        else:
            source = _layer(r3, g.z13)
        ma_frac = min(max(source / ma_total, 0.0), 1.0)
    else:
        ma_frac = 0.0
    return PowerAllocation(cb_frac, ma_frac, None)


def flow_objective(g: LinkGains, split: FlowSplit, coherent: bool = False) -> float:
    """Total normalized energy ``t1 S_CB + t2 S_MA`` of a split."""
    ma = s_ma_coherent if coherent else s_ma
    return split.t1 * s_cb(g, split.x1, split.x2, split.t1) + split.t2 * ma(g, split.x2, split.x3, split.t2)


# ---------------------------------------------------------------------------
# Case constants and limits


def _relay_constants(z13, z12, z23):
    """log A1, log A2 and the regime slack D = 1/z13 - 1/z12 - 1/z23 (> 0 in the relay regime)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        slack = 1.0 / z13 - 1.0 / z12 - 1.0 / z23
        # A1 - 1 = z23 * D and A2 - 1 = z12 * D; log1p keeps the regime boundary accurate
        la1 = np.log1p(z23 * slack)
        la2 = np.log1p(z12 * slack)
    return la1, la2, slack


def _t_star(z12, z23, la1, la2):
    with np.errstate(divide="ignore", invalid="ignore"):
        return (np.log(z23 / z12) + np.log(la2 / la1) + la2) / (la1 + la2)


def relay_regime(z13, z12, z23):
    """True where the relay path beats the direct link, ``z13 < M_H(z12, z23)``."""
    return np.asarray(z13) < harmonic_mean_array(z12, z23)


def case_constants(g: LinkGains) -> CaseConstants:
    if not (g.z12 > 0 and g.z23 > 0 and g.z13 > 0) or g.z13 >= harmonic_mean(g.z12, g.z23):
        raise RegimeError("case constants exist only for 0 < z13 < M_H(z12, z23)")
    la1, la2, _ = _relay_constants(g.z13, g.z12, g.z23)
    t = float(_t_star(g.z12, g.z23, la1, la2))
    if not -1e-12 <= t <= 1 + 1e-12:
        raise ArithmeticError(f"t* = {t} escaped [0, 1]")
    return CaseConstants(float(math.exp(la1)), float(math.exp(la2)), t)


def b1_limit_zero_array(z13, z12, z23):
    z13, z12, z23 = (np.asarray(v, dtype=float) for v in (z13, z12, z23))
    with np.errstate(divide="ignore"):
        return np.minimum(1.0 / z13, 1.0 / z12 + 1.0 / z23)


def b1_limit_inf_array(z13, z12, z23):
    z13, z12, z23 = (np.asarray(v, dtype=float) for v in (z13, z12, z23))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.broadcast_to(1.0 / z13, np.broadcast_shapes(z13.shape, z12.shape, z23.shape)).copy()
    relay = np.broadcast_to(relay_regime(z13, z12, z23), out.shape) & np.broadcast_to(z13 > 0, out.shape)
    if relay.any():
        a, b, c = (np.broadcast_to(v, out.shape)[relay] for v in (z13, z12, z23))
        la1, la2, _ = _relay_constants(a, b, c)
        t = np.clip(_t_star(b, c, la1, la2), 0.0, 1.0)  # clip only absorbs rounding
        out[relay] = np.exp(t * la1) / c + np.exp((1.0 - t) * la2) / b
    return out


def b2_limit_zero_array(z13, z12, z23):
    return b1_limit_zero_array(z13, z12, np.asarray(z13) + np.asarray(z23))


def b2_limit_inf_array(z13, z12, z23):
    return b1_limit_inf_array(z13, z12, np.asarray(z13) + np.asarray(z23))


def b1_limit_zero(g: LinkGains) -> float:
    return float(b1_limit_zero_array(g.z13, g.z12, g.z23))


def b1_limit_inf(g: LinkGains) -> float:
    return float(b1_limit_inf_array(g.z13, g.z12, g.z23))


def b2_limit_zero(g: LinkGains) -> float:
    return b1_limit_zero(g.coherent())


def b2_limit_inf(g: LinkGains) -> float:
    return b1_limit_inf(g.coherent())


# ---------------------------------------------------------------------------
# Vectorized closed-form solver


def _golden(f, lo, hi, iters=_GOLDEN_ITERS):
    """Elementwise minimum of convex ``f`` on ``[lo, hi]``; returns (t, f(t))."""
    a, b = lo.copy(), hi.copy()
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        left = fc <= fd
        # shrink to [a, d] where the left probe wins, else to [c, b]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new = np.where(left, b - _INVPHI * (b - a), a + _INVPHI * (b - a))
        fn = f(new)
        c, d, fc, fd = (
            np.where(left, new, d),
            np.where(left, c, new),
            np.where(left, fn, fd),
            np.where(left, fc, fn),
        )
    t = np.where(fc <= fd, c, d)
    best = np.minimum(fc, fd)
    # convex minimizers sitting on an endpoint are only approached by the probes
    for edge in (lo, hi):
        fe = f(edge)
        take = fe < best
        t = np.where(take, edge, t)
        best = np.where(take, fe, best)
    return t, best


def _pieces(k, la1, la2, r12, r23, d):
    """Reduced objectives (min over flows at fixed t1) of the three solution families."""

    def both(t):  # all three flows positive
        return np.expm1(k + t * la1) * r23 + np.expm1(k + (1 - t) * la2) * r12 + d

    def no_x3(t):  # x3 = 0
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            head = np.where(t > 0, t * np.expm1(k / t), np.inf)
        return head * r12 + np.expm1(k + t * la1) * r23 + t * d

    def no_x1(t):  # x1 = 0
        s = 1 - t
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            tail = np.where(s > 0, s * np.expm1(k / s), np.inf)
        return tail * r23 + np.expm1(k + s * la2) * r12 + s * d

    def relay_only(t):  # x2 = K
        s = 1 - t
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            head = np.where(t > 0, t * np.expm1(k / t), np.inf)
            tail = np.where(s > 0, s * np.expm1(k / s), np.inf)
        return head * r12 + tail * r23

    return both, no_x3, no_x1, relay_only


def _solve_relay(z13, z12, z23, k):
    """Minimum energy, minimizing t1 and branch code for relay-regime samples."""
    n = len(z13)
    r12, r23 = 1.0 / z12, 1.0 / z23
    la1, la2, slack = _relay_constants(z13, z12, z23)
    d = -slack
    both, no_x3, no_x1, relay_only = _pieces(k, la1, la2, r12, r23, d)
    hi_rate = k * (1.0 / la1 + 1.0 / la2) > 1.0  # K > M_H(log A1, log A2)

    energy = np.full(n, np.inf)
    t_opt = np.zeros(n)
    code = np.zeros(n, dtype=np.int8)

    def offer(val, t, c, mask):
        val = np.where(np.isnan(val), np.inf, val)
        take = mask & (val < energy)
        energy[take] = val[take]
        t_opt[take] = t[take]
        code[take] = c

    zero, one = np.zeros(n), np.ones(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        a_edge = np.clip(1.0 - k / la1, 0.0, 1.0)  # x1 >= 0 boundary
        b_edge = np.clip(k / la2, 0.0, 1.0)  # x3 >= 0 boundary

    # K > M_H: all-flows piece on [a_edge, b_edge] with closed-form t*, flanked by x1=0 / x3=0 pieces
    lo = np.where(hi_rate, a_edge, zero)
    hi = np.where(hi_rate, b_edge, one)
    ts = np.clip(_t_star(z12, z23, la1, la2), lo, hi)
    offer(both(ts), ts, 1, hi_rate)
    t, v = _golden(no_x3, np.where(hi_rate, b_edge, one), one)
    offer(v, t, 2, hi_rate)
    t, v = _golden(no_x1, zero, np.where(hi_rate, a_edge, zero))
    offer(v, t, 3, hi_rate)

    # K <= M_H: relay-only piece on [b_edge, a_edge], flanked by x3=0 / x1=0 pieces
    lo_rate = ~hi_rate
    mid_lo = np.where(lo_rate, b_edge, zero)
    mid_hi = np.where(lo_rate, np.maximum(a_edge, b_edge), one)
    t, v = _golden(relay_only, mid_lo, mid_hi)
    offer(v, t, 4, lo_rate)
    t, v = _golden(no_x3, np.where(lo_rate, a_edge, one), one)
    offer(v, t, 5, lo_rate)
    t, v = _golden(no_x1, zero, np.where(lo_rate, b_edge, zero))
    offer(v, t, 6, lo_rate)
    return energy, t_opt, code


def _solve_relay_only(z12, z23, k):
    # no direct link: everything goes through the relay
    n = len(z12)
    la = np.full(n, np.inf)
    *_, relay_only = _pieces(k, la, la, 1.0 / z12, 1.0 / z23, np.zeros(n))
    t, v = _golden(relay_only, np.zeros(n), np.ones(n))
    return v, t, np.full(n, 4, dtype=np.int8)


def solve_b1(z13, z12, z23, k):
    """Vectorized HDP1 threshold.

    Returns ``(bound, t1, branch_code)`` arrays; ``branch_code`` indexes
    :class:`Branch` in declaration order.  ``k`` is a positive scalar rate in
    nats no larger than :data:`ASYMPTOTIC_RATE`.
    """
    if not k > 0:
        raise ValueError("rate must be positive")
    if k > ASYMPTOTIC_RATE:
        raise ValueError(f"rate above {ASYMPTOTIC_RATE} nats: use the high-rate limit")
    z13, z12, z23 = np.broadcast_arrays(*(np.atleast_1d(np.asarray(v, dtype=float)) for v in (z13, z12, z23)))
    n = z13.shape[0]
    with np.errstate(divide="ignore"):
        bound = 1.0 / z13
    t1 = np.ones(n)
    code = np.zeros(n, dtype=np.int8)
    relay = relay_regime(z13, z12, z23)
    nodirect = relay & (z13 == 0)
    relay &= ~nodirect
    scale = math.expm1(k)
    if relay.any():
        e, t, c = _solve_relay(z13[relay], z12[relay], z23[relay], k)
        bound[relay] = e / scale
        t1[relay] = t
        code[relay] = c
    if nodirect.any():
        e, t, c = _solve_relay_only(z12[nodirect], z23[nodirect], k)
        bound[nodirect] = e / scale
        t1[nodirect] = t
        code[nodirect] = c
    return bound, t1, code


def b1_array(z13, z12, z23, k):
    """HDP1 thresholds for arrays of gains at rate ``k`` (nats)."""
    if k > ASYMPTOTIC_RATE:
        return b1_limit_inf_array(z13, z12, z23)
    return solve_b1(z13, z12, z23, k)[0]


def b2_array(z13, z12, z23, k):
    """HDP2 thresholds: HDP1 with ``z23 -> z13 + z23``."""
    return b1_array(z13, z12, np.asarray(z13) + np.asarray(z23), k)


# ---------------------------------------------------------------------------
# Scalar API


def _split_for(branch: Branch, k, t, la1, la2) -> FlowSplit:
    s = 1.0 - t
    ts = t * s
    if branch is Branch.DIRECT:
        x = (k * t, 0.0, k * s)
    elif branch is Branch.TILDE_S1:
        x = (k * t - ts * la1, ts * (la1 + la2), k * s - ts * la2)
    elif branch in (Branch.TILDE_S2, Branch.HAT_S2):
        x = (k * t - ts * la1, k * s + ts * la1, 0.0)
    elif branch in (Branch.TILDE_S3, Branch.HAT_S3):
        x = (0.0, k * t + ts * la2, k * s - ts * la2)
    else:
        x = (0.0, k, 0.0)
    x = [0.0 if abs(v) <= 1e-12 * max(k, 1.0) else v for v in x]
    return FlowSplit(*x, t1=t, t2=s)


def _check_rate(k):
    if not (isinstance(k, (int, float)) and k > 0 and math.isfinite(k)):
        raise ValueError(f"rate must be a positive finite number of nats, got {k!r}")


def b1(g: LinkGains, k: float) -> FlowSolution:
    """Optimal HDP1 flow split and RNSNR threshold at rate ``k`` nats/s/Hz."""
    _check_rate(k)
    z13, z12, z23 = g.as_tuple()
    relay = bool(relay_regime(z13, z12, z23))
    if not relay:
        # any t1 works; report the whole slot as broadcast
        bound = 1.0 / z13 if z13 > 0 else math.inf
        return FlowSolution(FlowSplit(k, 0.0, 0.0, 1.0, 0.0), bound, Branch.DIRECT)
    if z13 == 0:
        bound, t, _ = solve_b1(z13, z12, z23, min(k, ASYMPTOTIC_RATE))
        t = float(t[0])
        return FlowSolution(FlowSplit(0.0, k, 0.0, t, 1 - t), float(bound[0]), Branch.HAT_S1, k > ASYMPTOTIC_RATE)
    la1, la2, _ = _relay_constants(z13, z12, z23)
    if k > ASYMPTOTIC_RATE:
        t = float(np.clip(_t_star(z12, z23, la1, la2), 0.0, 1.0))
        split = _split_for(Branch.TILDE_S1, k, t, float(la1), float(la2))
        return FlowSolution(split, b1_limit_inf(g), Branch.TILDE_S1, asymptotic=True)
    bound, t, code = solve_b1(z13, z12, z23, k)
    branch = _CODES[int(code[0])]
    split = _split_for(branch, k, float(t[0]), float(la1), float(la2))
    return FlowSolution(split, float(bound[0]), branch)


def b2(g: LinkGains, k: float) -> FlowSolution:
    """Optimal HDP2 split; same algorithm as :func:`b1` on the coherent gains."""
    return b1(g.coherent(), k)


# ---------------------------------------------------------------------------
# Brute-force oracle and KKT verification


def _objective_vec(z13, z12, z23, k, x1, x2, t1):
    """Vectorized ``(t1 S_CB + t2 S_MA) / (e^K - 1)`` straight from the sub-slot formulas."""
    x3 = k - x1 - x2
    t2 = 1.0 - t1
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        r1, r2 = x1 / t1, x2 / t1
        if z13 >= z12:
            cb = np.expm1(r2) / z12 + np.exp(r2) * np.expm1(r1) / z13
        else:
            cb = np.expm1(r1) / z13 + np.exp(r1) * np.expm1(r2) / z12
        q2, q3 = x2 / t2, x3 / t2
        if z13 >= z23:
            ma = np.expm1(q2) / z23 + np.exp(q2) * np.expm1(q3) / z13
        else:
            ma = np.expm1(q3) / z13 + np.exp(q3) * np.expm1(q2) / z23
        out = (t1 * cb + t2 * ma) / math.expm1(k)
    return np.where(np.isfinite(out), out, np.inf)


def b1_oracle(g: LinkGains, k: float, grid_n: int = 200) -> float:
    """Direct numerical attack on the flow program, independent of the case analysis.

    A grid over ``t1`` and the rate simplex locates the basin; SLSQP then
    polishes the best grid point, with two interior restarts.  The answer
    is the objective at a feasible point, so it can only overshoot the true
    minimum.
    """
    _check_rate(k)
    if grid_n < 200:
        raise ValueError("grid_n must be >= 200")
    z13, z12, z23 = g.as_tuple()
    if z13 > 0:
        best_val, best_x = 1.0 / z13, None  # t1 in {0, 1}: everything on the direct link
    else:
        best_val, best_x = math.inf, None
    m = max(grid_n // 8, 20)
    u = np.linspace(0.0, 1.0, m + 1)
    f1, f2 = np.meshgrid(u, u, indexing="ij")
    keep = f1 + f2 <= 1.0 + 1e-12
    x1s, x2s = k * f1[keep], k * f2[keep]
    for t in np.linspace(0.0, 1.0, grid_n + 1)[1:-1]:
        vals = _objective_vec(z13, z12, z23, k, x1s, x2s, t)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_x = float(vals[i]), np.array([x1s[i], x2s[i], t])
    if best_x is None:
        if not math.isfinite(best_val):
            return best_val  # no finite point anywhere: unsupportable
        # the relay optimum may beat the direct link by less than the grid resolution
        best_x = np.array([k / 3, k / 3, 0.5])

    def fun(v):
        return float(_objective_vec(z13, z12, z23, k, v[0], v[1], v[2]))

    # polish from the grid point, from a copy nudged off the faces and from the simplex centre;
    # SLSQP can stall when started exactly on a face of the feasible set
    nudged = 0.9 * best_x + 0.1 * np.array([k / 3, k / 3, 0.5])
    for start in (best_x, nudged, np.array([k / 3, k / 3, 0.5])):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)  # SLSQP probes clipped to the bounds
            res = optimize.minimize(
                fun,
                start,
                method="SLSQP",
                bounds=[(0.0, k), (0.0, k), (1e-9, 1 - 1e-9)],
                constraints=[{"type": "ineq", "fun": lambda v: k - v[0] - v[1]}],
                options={"ftol": 1e-15, "maxiter": 500},
            )
        cand = res.x.copy()
        cand[:2] = np.clip(cand[:2], 0.0, k)
        if cand[0] + cand[1] > k:
            cand[:2] *= k / (cand[0] + cand[1])
        best_val = min(best_val, fun(cand))
    return best_val


def b2_oracle(g: LinkGains, k: float, grid_n: int = 200) -> float:
    return b1_oracle(g.coherent(), k, grid_n)


@dataclass(frozen=True)
class KKTReport:
    residual: float
    multipliers: tuple[float, float, float]
    mu: float


def kkt_check(g: LinkGains, split: FlowSplit, tol: float = 1e-9) -> KKTReport:
    """Stationarity and dual feasibility of a split at its own ``t1``.

    For fixed sub-slot lengths the flow program is convex in ``(x1, x2, x3)``;
    a split is optimal iff the partial derivatives of the objective agree on
    the positive flows and are no smaller on the zero flows.  Residual and
    multipliers are relative to ``|mu|``.
    """
    t1, t2 = split.t1, split.t2
    if not (0 < t1 < 1):
        raise ValueError("KKT check needs 0 < t1 < 1")
    x1, x2, x3 = split.x1, split.x2, split.x3
    r12, r13, r23 = 1 / g.z12, 1 / g.z13, 1 / g.z23
    # broadcast sub-slot
    if g.z13 >= g.z12:
        d1 = r13 * math.exp((x1 + x2) / t1)
        d2_cb = (r12 - r13) * math.exp(x2 / t1) + r13 * math.exp((x1 + x2) / t1)
    else:
        d1 = (r13 - r12) * math.exp(x1 / t1) + r12 * math.exp((x1 + x2) / t1)
        d2_cb = r12 * math.exp((x1 + x2) / t1)
    # multiple-access sub-slot
    if g.z13 >= g.z23:
        d3 = r13 * math.exp((x2 + x3) / t2)
        d2_ma = (r23 - r13) * math.exp(x2 / t2) + r13 * math.exp((x2 + x3) / t2)
    else:
        d3 = (r13 - r23) * math.exp(x3 / t2) + r23 * math.exp((x2 + x3) / t2)
        d2_ma = r23 * math.exp((x2 + x3) / t2)
    grad = np.array([d1, d2_cb + d2_ma, d3])
    x = np.array([x1, x2, x3])
    active = x > tol * max(split.rate, 1.0)
    mu = -float(grad[active].mean()) if active.any() else -float(grad.min())
    scale = abs(mu)
    resid = float(np.max(np.abs(grad[active] + mu)) / scale) if active.any() else 0.0
    lam = np.where(active, 0.0, (grad + mu) / scale)
    return KKTReport(resid, tuple(float(v) for v in lam), mu)
