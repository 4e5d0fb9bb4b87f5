import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relaykit import dmt
from relaykit.outage import Protocol


def test_rnsnr_from_snr_examples():
    s, k = dmt.rnsnr_from_snr(math.e - 1, 1.0)
    assert s == pytest.approx(1.0)
    assert k == pytest.approx(1.0)
    s, k = dmt.rnsnr_from_snr(100.0, 0.5)
    assert s == pytest.approx(100.0 / (math.sqrt(101.0) - 1.0))
    assert s == pytest.approx(11.0499, abs=1e-4)
    assert k == pytest.approx(0.5 * math.log(101.0))
    with pytest.raises(ValueError):
        dmt.rnsnr_from_snr(10.0, 0.0)
    with pytest.raises(ValueError):
        dmt.rnsnr_from_snr(10.0, 1.5)
    with pytest.raises(ValueError):
        dmt.rnsnr_from_snr(0.0, 0.5)


@given(st.floats(1.0, 1e6), st.floats(0.05, 0.95))
def test_rnsnr_scaling(snr, mux):
    s, k = dmt.rnsnr_from_snr(snr, mux)
    assert s * math.expm1(k) == pytest.approx(snr, rel=1e-12)


def test_weighted_slope_exact_line():
    x = np.arange(6.0)
    slope, se = dmt.weighted_slope(x, 2.5 * x + 1.0, np.ones(6))
    assert slope == pytest.approx(2.5)
    assert se > 0


def test_dmt_point_validation():
    with pytest.raises(ValueError):
        dmt.DmtPoint(Protocol.HDP1, 1.0, (1, 2, 3, 4), (0.1,) * 4, (1,) * 4, 1.0, 0.1)
    with pytest.raises(ValueError):
        dmt.DmtPoint(Protocol.HDP1, 0.5, (1, 2, 3), (0.1,) * 3, (1,) * 3, 1.0, 0.1)


def test_grid_and_event_guards():
    with pytest.raises(ValueError):
        dmt.diversity_fit(Protocol.HDP1, 0.5, [20, 25, 30], 10**5, seed=1)
    with pytest.raises(ValueError):
        dmt.diversity_fit(Protocol.HDP1, 0.5, [20, 22, 24, 26], 10**5, seed=1)
    with pytest.raises(dmt.InsufficientEventsError):
        dmt.diversity_fit(Protocol.HDP1, 0.25, [20, 25, 30, 35, 40, 45], 10**5, seed=1)


def test_direct_slope():
    # direct link: P ~ 1/S and S ~ S~^(1 - mux), so the slope is 1 - mux
    fit = dmt.diversity_fit(Protocol.DIRECT, 0.5, [20, 25, 30, 35, 40], 1 << 21, seed=2)
    assert fit.fitted_slope == pytest.approx(0.5, abs=0.15)
    assert fit.nominal == 1.0


def test_slope_decreases_with_mux():
    grid = [10, 15, 20, 25]
    slopes = [dmt.diversity_fit(Protocol.HDP2, m, grid, 1 << 20, seed=3).fitted_slope for m in (0.5, 0.75)]
    assert slopes[0] > slopes[1]
