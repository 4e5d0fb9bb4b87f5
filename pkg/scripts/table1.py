"""Expected RNSNR thresholds (dB) under long-term power control.

    python scripts/table1.py --budget 8388608 --seed 0
"""

import argparse
import time

from relaykit import power


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--budget", type=int, default=power.DEFAULT_BUDGET)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    t0 = time.time()
    table = power.delay_limited_table(args.budget, args.seed)
    print(f"{'quantity':<14} {'dB':>8} {'stderr':>8}")
    for name, value, se in table.rows():
        print(f"{name:<14} {value:8.3f} {se:8.4f}")
    # deterministic routes where they exist
    for name, protocol, rate in power.TABLE_ROWS:
        try:
            q = power.expected_bound(protocol, rate, method="quadrature")
        except ValueError:
            continue
        print(f"quadrature {name:<14} {q.db:8.4f}")
    print(f"elapsed {time.time() - t0:.1f}s")


if __name__ == "__main__":
    main()
