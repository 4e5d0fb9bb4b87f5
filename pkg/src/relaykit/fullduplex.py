"""Full-duplex RNSNR thresholds: decode-and-forward and the cut-set bound.

``b_df`` is sufficient (any S above it supports the rate with DF relaying),
``b_lb`` is necessary for every full-duplex scheme.  Both are independent of
the rate K once expressed in RNSNR units.  A returned ``inf`` means the rate
cannot be supported at any power.
"""

from __future__ import annotations

import numpy as np

from .fading import LinkGains


def _ratio(num, den):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.divide(num, den)
    return np.where(den > 0, out, np.inf)


def b_df_array(z13, z12, z23):
    z13, z12, z23 = (np.asarray(v, dtype=float) for v in (z13, z12, z23))
    relay = z12 > z13
    via_relay = _ratio(z12 + z23, z12 * (z13 + z23))
    direct = _ratio(np.ones_like(z13), z13)
    return np.where(relay, via_relay, direct)


def b_lb_array(z13, z12, z23):
    z13, z12, z23 = (np.asarray(v, dtype=float) for v in (z13, z12, z23))
    # (z12+z13+z23) / ((z12+z13)(z13+z23)) factored so tiny gains do not underflow
    a, b = z12 + z13, z13 + z23
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = 1.0 / b + (z23 / b) / a
    return np.where((a > 0) & (b > 0), out, np.inf)


def b_df(g: LinkGains) -> float:
    """DF threshold.  Ties ``z12 == z13`` use the direct branch ``1/z13``."""
    return float(b_df_array(g.z13, g.z12, g.z23))


def b_lb(g: LinkGains) -> float:
    """Max-flow min-cut threshold; never exceeds :func:`b_df`."""
    return float(b_lb_array(g.z13, g.z12, g.z23))


def df_objective(g: LinkGains, alpha, beta):
    """Received-SNR objective of DF relaying per unit total power.

    ``alpha`` is the source share of the power, ``beta`` the share of the
    source power spent on new information.
    """
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    coop = a * g.z13 + (1 - a) * g.z23 + 2 * np.sqrt((1 - b) * a * (1 - a) * g.z13 * g.z23)
    return np.minimum(coop, a * b * g.z12)


def z_df_oracle(g: LinkGains, grid_n: int) -> float:
    """Brute-force maximum of the DF objective over a square (alpha, beta) grid.

    Only meaningful when the relay link beats the direct link (``z12 > z13``).
    The grid maximum never exceeds the true optimum, so
    ``z_df_oracle(g, n) <= 1 / b_df(g)``.
    """
    if not g.z12 > g.z13:
        raise ValueError("z_df_oracle requires z12 > z13")
    if grid_n < 100:
        raise ValueError("grid_n must be >= 100")
    grid = np.linspace(0.0, 1.0, grid_n + 1)
    best = 0.0
    # row blocks keep the (grid_n+1)^2 evaluation memory-bounded
    for block in np.array_split(grid, max(1, grid_n // 200)):
        vals = df_objective(g, block[:, None], grid[None, :])
        best = max(best, float(vals.max()))
    return best
