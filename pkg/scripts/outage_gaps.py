"""dB gaps between the half-duplex protocols and full-duplex references at a target outage.

Prints the crossing of each Monte Carlo curve and its distance to several
full-duplex references (analytic cut-set and DF curves, and their Monte
Carlo counterparts), so the choice of reference can be judged.

    python scripts/outage_gaps.py --samples 16777216
"""

import argparse
import math

import numpy as np

from relaykit import outage
from relaykit.fading import db_to_linear
from relaykit.outage import Protocol, RateTag


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=1 << 24)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--target", type=float, default=1e-4)
    ap.add_argument("--bits", type=str, default="1,3,6")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    bits = [float(b) for b in args.bits.split(",")]
    db = np.round(np.arange(15.0, 32.0, 0.1), 6)
    jobs = [(Protocol.LB, RateTag.ZERO), (Protocol.DF, RateTag.ZERO), (Protocol.HDP1, RateTag.INF)]
    jobs += [(p, b * math.log(2.0)) for p in (Protocol.HDP1, Protocol.HDP2) for b in bits]
    curves = outage.mc_outage_sweep(jobs, db, args.samples, args.seed, args.workers)

    def cross(c):
        return outage.crossing_db(c.snr_db, c.probs, args.target)

    refs = {
        "cut-set (analytic)": outage.crossing_db(db, outage.thm4_curve(1, db_to_linear(db)), args.target),
        "DF (analytic)": outage.crossing_db(db, outage.thm4_curve(2, db_to_linear(db)), args.target),
        "cut-set (MC)": cross(curves[jobs[0]]),
        "DF (MC)": cross(curves[jobs[1]]),
    }
    for name, v in refs.items():
        print(f"reference {name:<20} {v:7.3f} dB")
    print(f"HDP1 high-rate limit      {cross(curves[jobs[2]]) - refs['DF (analytic)']:7.3f} dB beyond DF")
    print()
    print(f"{'curve':<12}" + "".join(f"{n:>22}" for n in refs))
    for p, r in jobs[3:]:
        c = cross(curves[(p, r)])
        label = f"{p.value}@{r / math.log(2.0):g}b"
        print(f"{label:<12}" + "".join(f"{c - v:22.3f}" for v in refs.values()))


if __name__ == "__main__":
    main()
