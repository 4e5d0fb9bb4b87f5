import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as si
from scipy import special as sp

from relaykit import outage
from relaykit.fading import sample_gains
from relaykit.outage import Protocol, RateTag


def _claim1_dblquad(x, z):
    # Pr(1/Z12 + 1/(Z23 + z) >= 1/x): complement of the region where both terms stay small
    def inner(z12):
        # need 1/(Z23 + z) < 1/x - 1/z12, i.e. Z23 > 1/(1/x - 1/z12) - z
        room = 1.0 / x - 1.0 / z12
        lo = max(1.0 / room - z, 0.0)
        return math.exp(-z12) * math.exp(-lo)

    val, _ = si.quad(inner, x, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400)
    return 1.0 - val


def test_claim1_examples():
    assert outage.claim1(0.5) == pytest.approx(1 - sp.k1(1.0) * math.exp(-1.0), abs=1e-12)
    assert outage.claim1(0.5) == pytest.approx(0.778570, abs=1e-6)
    assert outage.claim1(0.5, 0.25) == pytest.approx(1 - sp.k1(1.0) * math.exp(-0.75), abs=1e-12)
    assert outage.claim1(1e-9) == pytest.approx(0.0, abs=1e-7)
    with pytest.raises(ValueError):
        outage.claim1(0.5, 0.6)
    with pytest.raises(ValueError):
        outage.claim1(0.0)


def test_claim1_against_double_integral_sample():
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = float(rng.uniform(0.01, 3.0))
        z = float(rng.uniform(0.0, x))
        assert outage.claim1(x, z) == pytest.approx(_claim1_dblquad(x, z), abs=1e-6)


def test_claim1_against_2d_dblquad():
    x, z = 0.7, 0.3

    # integrate the density over the outage region, bounded by the curve z23 = upper(z12)
    def upper(z12):
        room = 1.0 / x - 1.0 / z12
        return max(1.0 / room - z, 0.0) if room > 0 else 60.0

    val, _ = si.dblquad(lambda z23, z12: math.exp(-z12 - z23), 0.0, 60.0, 0.0, upper, epsabs=1e-12)
    assert outage.claim1(x, z) == pytest.approx(val, abs=1e-6)


def test_thm4_examples():
    assert outage.thm4_bound(1, 100.0) == pytest.approx(9.9007e-5, rel=1e-4)
    assert outage.thm4_bound(6, 10.0) == pytest.approx(1.696e-2, rel=2e-3)
    s = 1e4
    assert outage.thm4_bound(4, s) * s * s / 2 == pytest.approx(1.0, rel=0.02)
    with pytest.raises(ValueError):
        outage.thm4_bound(7, 1.0)
    with pytest.raises(ValueError):
        outage.thm4_bound(1, 0.0)


def _closed_reference(part, s):
    """Closed forms evaluated with scipy's Bessel function."""
    u = 1.0 / s
    if part == 1:
        return 1 - 2 * math.exp(-u) + math.exp(-2 * u)
    if part == 2:
        return 1 - math.exp(-u) - u * math.exp(-2 * u)
    if part == 4:
        return (1 - math.exp(-u)) * (1 - 2 * u * sp.k1(2 * u) * math.exp(-2 * u))
    return 1 - math.exp(-u) - 2 * u * u * sp.k1(2 * u) * math.exp(-2 * u)


@pytest.mark.parametrize("part", [1, 2, 4, 6])
def test_thm4_closed_forms_match_reference(part):
    for s in np.geomspace(0.05, 100.0, 25):
        assert outage.thm4_bound(part, s) == pytest.approx(_closed_reference(part, s), abs=1e-12)


def _relay_reference(part, s):
    """Upper bounds written as plain integrals of Claim 1, via scipy quad."""
    x = 1.0 / s

    def c1(a):
        return 1 - 2 * a * sp.k1(2 * a) * math.exp(-2 * a) if a > 0 else 0.0

    damp = (lambda z: math.exp(-z)) if part == 3 else (lambda z: 1.0)
    a, _ = si.quad(lambda z: (1 - c1(z)) * damp(z), 0.0, x, epsabs=1e-14, limit=200)
    first = (1 - math.exp(-x)) - a
    top = math.sqrt(2.0) * x
    b, _ = si.quad(lambda z: (c1(2 * x * x / z) - c1(z)) * damp(z), 0.0, top, epsabs=1e-14, limit=400)
    return first + b


@pytest.mark.parametrize("part", [3, 5])
def test_thm4_integral_parts_match_reference(part):
    for s in (0.3, 1.0, 3.0, 10.0, 30.0):
        ref = _relay_reference(part, s)
        assert outage.thm4_bound(part, s) == pytest.approx(ref, abs=1e-9)


@pytest.mark.parametrize("s", [0.5, 2.0, 10.0, 100.0])
def test_thm4_ordering(s):
    p = {k: outage.thm4_bound(k, s) for k in range(1, 7)}
    assert p[1] <= p[2] <= p[6] <= p[4] + 1e-15
    assert p[6] <= p[5] and p[4] <= p[3]
    assert all(0 <= v <= 1 for v in p.values())


def test_direct_outage():
    assert outage.direct_outage(1.0) == pytest.approx(1 - math.exp(-1.0))
    assert outage.direct_outage(1e8) * 1e8 == pytest.approx(1.0, rel=1e-7)
    assert outage.direct_outage(1e-3) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        outage.direct_outage(0.0)


def test_direct_monte_carlo():
    curve = outage.mc_outage(Protocol.DIRECT, 1.0, [0.0], 10**7, seed=3)
    assert curve.probs[0] == pytest.approx(1 - math.exp(-1.0), abs=4e-4)


def test_part6_monte_carlo():
    n = 10**7
    curve = outage.mc_outage(Protocol.HDP2, RateTag.ZERO, [10.0], n, seed=4)
    pt = curve.points[0]
    ref = outage.thm4_bound(6, 10.0)
    assert abs(pt.prob - ref) <= 3 * pt.ci_halfwidth_95


def test_intervals():
    lo, hi = outage.interval(50, 10_000)
    assert hi - lo == pytest.approx(2 * outage.wald_halfwidth(0.005, 10_000))
    lo, hi = outage.interval(0, 10_000)
    assert lo == 0.0 and 0 < hi < 1e-3
    lo, hi = outage.wilson_interval(5, 100)
    assert lo < 0.05 < hi


@given(st.integers(0, 1000), st.integers(1000, 10**6))
def test_wilson_contains_point(events, n):
    lo, hi = outage.wilson_interval(events, n)
    assert 0 <= lo <= events / n <= hi <= 1


def test_mc_is_independent_of_worker_count_and_chunking():
    db = np.arange(0.0, 20.0, 2.0)
    a = outage.mc_outage(Protocol.HDP1, math.log(2.0), db, 50_000, seed=9, workers=1)
    b = outage.mc_outage(Protocol.HDP1, math.log(2.0), db, 50_000, seed=9, workers=2)
    assert np.array_equal(a.events, b.events)


def test_bracketed_counts_equal_brute_force():
    n = 60_000
    g = sample_gains(5, n)
    db = np.arange(-5.0, 30.0, 0.5)
    s = 10 ** (db / 10)
    for protocol, rate in ((Protocol.HDP1, 1.3), (Protocol.HDP2, 0.2), (Protocol.HDP1, RateTag.INF),
                           (Protocol.DF, RateTag.ZERO), (Protocol.LB, RateTag.ZERO)):
        b = outage.threshold_samples(protocol, outage._as_rate(rate), g)
        brute = np.array([(b >= v).sum() for v in s])
        curve = outage.mc_outage(protocol, rate, db, n, seed=5)
        assert np.array_equal(curve.events, brute)


def test_curves_monotone_and_ordered():
    db = np.arange(0.0, 30.0, 1.0)
    jobs = [(Protocol.LB, RateTag.ZERO), (Protocol.DF, RateTag.ZERO),
            (Protocol.HDP1, 1.0), (Protocol.HDP2, 1.0)]
    curves = outage.mc_outage_sweep(jobs, db, 200_000, seed=2)
    for c in curves.values():
        assert np.all(np.diff(c.events) <= 0)
    ev = [curves[j].events for j in jobs]
    assert np.all(ev[0] <= ev[1])
    assert np.all(ev[3] <= ev[2])


def test_crossing_db():
    db = np.array([0.0, 10.0, 20.0])
    p = np.array([1e-2, 1e-3, 1e-4])
    assert outage.crossing_db(db, p, 1e-3) == pytest.approx(10.0)
    assert outage.crossing_db(db, p, 10**-3.5) == pytest.approx(15.0)
    with pytest.raises(ValueError):
        outage.crossing_db(db, p, 1e-6)


def test_curve_validation():
    with pytest.raises(ValueError):
        outage.mc_outage(Protocol.DIRECT, 1.0, [0.0], 100, seed=1)
    with pytest.raises(ValueError):
        outage.mc_outage(Protocol.DIRECT, 1.0, [1.0, 0.0], 10**4, seed=1)
