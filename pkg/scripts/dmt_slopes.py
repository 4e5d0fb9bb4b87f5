"""Fitted outage slopes against the multiplexing gain.

    python scripts/dmt_slopes.py --mux 0.25,0.5,0.75
"""

import argparse

import numpy as np

from relaykit import dmt
from relaykit.outage import Protocol

# smallest budgets giving >= 100 outages at 45 dB on the default grid
BUDGETS = {0.25: 3 << 27, 0.5: 1 << 21, 0.75: 1 << 19}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mux", type=str, default="0.25,0.5,0.75")
    ap.add_argument("--grid", type=str, default="20:45:5", help="START:STOP:STEP in dB")
    ap.add_argument("--samples", type=int, default=None, help="override the per-gain budget")
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    a, b, s = (float(v) for v in args.grid.split(":"))
    grid = np.arange(a, b + 0.5 * s, s)
    for mux in (float(m) for m in args.mux.split(",")):
        n = args.samples or BUDGETS.get(mux, 1 << 22)
        fits = dmt.diversity_fits([Protocol.HDP1, Protocol.HDP2], mux, grid, n, args.seed, args.workers)
        for fit in fits:
            print(f"{fit.protocol.value} mux={mux:<5} slope={fit.fitted_slope:.3f} +- {fit.slope_stderr:.3f}"
                  f"  nominal={fit.nominal:.2f}  events={fit.events}")


if __name__ == "__main__":
    main()
