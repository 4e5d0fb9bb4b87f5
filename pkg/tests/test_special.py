import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special as sp

from relaykit.special import (
    QuadratureError,
    bessel_k0,
    bessel_k0_scaled,
    bessel_k1,
    bessel_k1_scaled,
    integrate,
    one_minus_xk1_decay,
    xk1_decay,
)

mpmath.mp.dps = 50


def _ref(order, x):
    return float(mpmath.besselk(order, mpmath.mpf(float(x))))


def test_bessel_against_mpmath_log_grid():
    x = np.geomspace(1e-6, 50.0, 400)
    k0 = bessel_k0(x)
    k1 = bessel_k1(x)
    r0 = np.array([_ref(0, v) for v in x])
    r1 = np.array([_ref(1, v) for v in x])
    assert np.max(np.abs(k0 / r0 - 1)) <= 1e-12
    assert np.max(np.abs(k1 / r1 - 1)) <= 1e-12


def test_scaled_bessel_far_range():
    x = np.geomspace(50.0, 1e8, 60)
    for order, fn in ((0, bessel_k0_scaled), (1, bessel_k1_scaled)):
        ref = np.array([float(mpmath.besselk(order, mpmath.mpf(float(v))) * mpmath.exp(float(v))) for v in x])
        assert np.max(np.abs(fn(x) / ref - 1)) <= 1e-12


def test_bessel_agrees_with_scipy_spot_values():
    x = np.array([1e-3, 0.5, 1.999, 2.0, 2.001, 7.0, 30.0])
    np.testing.assert_allclose(bessel_k0(x), sp.k0(x), rtol=1e-13)
    np.testing.assert_allclose(bessel_k1(x), sp.k1(x), rtol=1e-13)


def test_bessel_domain():
    with pytest.raises(ValueError):
        bessel_k0(0.0)
    with pytest.raises(ValueError):
        bessel_k1(-1.0)
    assert bessel_k0(800.0) == 0.0 or bessel_k0(800.0) < 1e-300


@given(st.floats(1e-8, 40.0))
def test_xk1_decay_pair_sums_to_one(x):
    a = xk1_decay(x)
    b = one_minus_xk1_decay(x)
    assert 0.0 <= a <= 1.0
    assert abs(a + b - 1.0) < 1e-14


def test_one_minus_xk1_decay_small_x_accuracy():
    for x in (1e-8, 1e-5, 1e-3, 0.05, 0.0999, 0.1, 0.3):
        xm = mpmath.mpf(x)
        ref = float(1 - xm * mpmath.besselk(1, xm) * mpmath.exp(-xm))
        assert one_minus_xk1_decay(x) == pytest.approx(ref, rel=1e-12)
    assert xk1_decay(0.0) == 1.0


def test_quadrature_known_integrals():
    r = integrate(np.sin, 0.0, math.pi)
    assert r.value == pytest.approx(2.0, abs=1e-13)
    # integrable log singularity at the endpoint
    r = integrate(lambda x: np.log(x), 0.0, 1.0, abs_tol=1e-11, rel_tol=1e-11)
    assert r.value == pytest.approx(-1.0, abs=1e-10)
    r = integrate(lambda x: np.exp(-x), 0.0, 50.0, points=(1.0, 10.0))
    assert r.value == pytest.approx(-math.expm1(-50.0), rel=1e-13)


def test_quadrature_failure_is_reported():
    with pytest.raises(QuadratureError):
        integrate(lambda x: 1.0 / x, 0.0, 1.0, max_intervals=50)
    with pytest.raises(ValueError):
        integrate(np.sin, 1.0, 0.0)
