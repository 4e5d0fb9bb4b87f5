import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relaykit.fading import LinkGains
from relaykit.fullduplex import b_df, b_df_array, b_lb, b_lb_array, z_df_oracle

gain = st.floats(0.0, 1e3)


def test_examples():
    assert b_df(LinkGains(1.0, 2.0, 1.0)) == pytest.approx(0.75)
    assert b_df(LinkGains(2.0, 1.0, 5.0)) == pytest.approx(0.5)
    assert b_df(LinkGains(1.0, 1.0, 1.0)) == 1.0  # tie takes the direct branch
    assert b_lb(LinkGains(1.0, 1.0, 1.0)) == pytest.approx(0.75)
    assert b_lb(LinkGains(0.0, 1.0, 1.0)) == pytest.approx(2.0)


def test_unsupportable_is_inf():
    assert b_df(LinkGains(0.0, 0.0, 0.0)) == math.inf
    assert b_lb(LinkGains(0.0, 0.0, 0.0)) == math.inf
    assert b_df(LinkGains(0.0, 1.0, 0.0)) == math.inf
    assert b_lb(LinkGains(0.0, 1.0, 0.0)) == math.inf


def test_oracle_examples():
    assert z_df_oracle(LinkGains(1.0, 2.0, 1.0), 2000) == pytest.approx(4 / 3, abs=1e-3)
    assert z_df_oracle(LinkGains(0.0, 1.0, 1.0), 2000) == pytest.approx(0.5, abs=1e-3)
    with pytest.raises(ValueError):
        z_df_oracle(LinkGains(1.0, 1.0, 1.0), 2000)
    with pytest.raises(ValueError):
        z_df_oracle(LinkGains(1.0, 2.0, 1.0), 50)


def test_oracle_brackets_closed_form():
    rng = np.random.default_rng(1)
    done = 0
    while done < 20:
        z = rng.exponential(size=3)
        if not z[1] > z[0]:
            continue
        g = LinkGains(*z)
        gap = 1.0 / b_df(g) - z_df_oracle(g, 4000)
        assert -1e-6 <= gap <= 1e-3 * max(1.0, 1.0 / b_df(g))
        done += 1


@given(gain, gain, gain)
def test_lb_below_df(z13, z12, z23):
    g = LinkGains(z13, z12, z23)
    assert b_lb(g) <= b_df(g) * (1 + 1e-12)


def test_monotone_in_each_gain():
    rng = np.random.default_rng(8)
    z = rng.exponential(size=(3, 10_000))
    f = rng.uniform(1.0, 5.0, size=10_000)
    for i in range(3):
        up = z.copy()
        up[i] *= f
        for fn in (b_df_array, b_lb_array):
            assert np.all(fn(*up) <= fn(*z) * (1 + 1e-12))
