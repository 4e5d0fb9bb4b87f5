"""Command-line driver: threshold lookups and CSV sweeps.

    relaykit bounds --gains 0.1,1,1 --rate-bits 1
    relaykit outage --preset fig3 --out fig3.csv
    relaykit dmt --mux 0.5 --protocol hdp1 --samples 20000000 --out dmt.csv
    relaykit delay-limited --preset table1 --out table1.csv

Rates are given in bits/s/Hz and converted to nats once, while parsing.
Every CSV gets a ``.meta.json`` sidecar holding the resolved configuration.
Exit codes: 0 ok, 2 usage, 3 numerical failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, dmt, flow, outage, power
from .fading import LinkGains
from .fullduplex import b_df, b_lb
from .outage import Protocol, RateTag
from .special import QuadratureError

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
OUTAGE_HEADER = ["snr_db", "rate_bits", "protocol", "estimator", "outage", "ci_lo", "ci_hi", "n_samples", "seed"]
TABLE_HEADER = ["quantity", "value_db", "stderr_db"]
FIG5_HEADER = ["rate_nats", "curve", "snr_linear"]
DMT_HEADER = ["protocol", "mux", "snr_db", "outage", "events", "slope", "slope_stderr", "n_samples", "seed"]

PROTOCOL_NAMES = {
    "lb": Protocol.LB,
    "df": Protocol.DF,
    "hdp1": Protocol.HDP1,
    "hdp2": Protocol.HDP2,
    "direct": Protocol.DIRECT,
}
# analytic curves of the fig2 preset: (label, bound part)
ANALYTIC_LABELS = {
    1: "FullDuplexLB_lower",
    2: "FullDuplexDF_lower",
    3: "HDP1_upper",
    4: "HDP1_lower",
    5: "HDP2_upper",
    6: "HDP2_lower",
}


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    rate_bits: float | None = None
    rate_tag: str | None = None
    snr_db: tuple[float, float, float] = (0.0, 40.0, 0.5)
    samples: int = 10_000_000
    seed: int = 1
    workers: int = 1
    out: str | None = None
    protocols: list[str] = field(default_factory=list)
    preset: str | None = None
    mux: float | None = None
    gains: tuple[float, float, float] | None = None
    rate_grid_bits: tuple[float, float, float] | None = None

    def __post_init__(self):
        start, stop, step = self.snr_db
        if not step > 0 or not start < stop:
            raise UsageError("--snr-db needs START < STOP and STEP > 0")
        if self.samples < outage.MIN_SAMPLES:
            raise UsageError(f"--samples must be >= {outage.MIN_SAMPLES}")
        if self.workers < 1:
            raise UsageError("--workers must be >= 1")

    @property
    def rate(self):
        """Rate in nats, or a limit tag; converted from bits exactly here."""
        if self.rate_tag is not None:
            return RateTag.ZERO if self.rate_tag == "zero" else RateTag.INF
        if self.rate_bits is not None:
            return self.rate_bits * math.log(2.0)
        return None

    def grid(self) -> np.ndarray:
        start, stop, step = self.snr_db
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return np.round(start + step * np.arange(n), 10)


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def _rate_label(rate) -> str:
    if isinstance(rate, RateTag):
        return "zero" if rate is RateTag.ZERO else "inf"
    if rate is None:
        return "any"
    return _fmt(rate / math.log(2.0))


# ---------------------------------------------------------------------------
# Argument parsing


def _parse_gains(text: str):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"gains must be three numbers a,b,c, got {text!r}")
    if len(vals) != 3 or not all(math.isfinite(v) and v > 0 for v in vals):
        raise argparse.ArgumentTypeError("gains must be three positive numbers z13,z12,z23")
    return vals


def _parse_range(text: str):
    try:
        a, b, c = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected START:STOP:STEP, got {text!r}")
    return (a, b, c)


def _parse_protocols(text: str):
    names = [p.strip().lower() for p in text.split(",") if p.strip()]
    bad = [p for p in names if p not in PROTOCOL_NAMES]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown protocol(s) {bad}; choose from {sorted(PROTOCOL_NAMES)}")
    return names


def _default_seed() -> int:
    env = os.environ.get("RELAYKIT_SEED")
    if env is None:
        return 1
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"RELAYKIT_SEED must be an integer, got {env!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relaykit", description="Half-duplex relay thresholds and outage sweeps.")
    parser.add_argument("--version", action="version", version=f"relaykit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def rate_args(p, required=False):
        g = p.add_mutually_exclusive_group(required=required)
        g.add_argument("--rate-bits", type=float, help="rate in bits/s/Hz")
        g.add_argument("--rate-limit", choices=["zero", "inf"], help="rate limit tag")

    def mc_args(p, samples):
        p.add_argument("--samples", type=int, default=samples)
        p.add_argument("--seed", type=int, default=None, help="defaults to $RELAYKIT_SEED or 1")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", required=True, help="CSV output path")

    p = sub.add_parser("bounds", help="thresholds for one gain triple (JSON line on stdout)")
    p.add_argument("--gains", type=_parse_gains, required=True, help="z13,z12,z23 (linear)")
    rate_args(p, required=True)

    p = sub.add_parser("outage", help="outage curves as CSV")
    rate_args(p)
    p.add_argument("--snr-db", type=_parse_range, default=None, help="START:STOP:STEP in dB")
    p.add_argument("--protocols", "--protocol", type=_parse_protocols, default=None)
    p.add_argument("--preset", choices=["fig2", "fig3", "fig4"])
    mc_args(p, 10_000_000)

    p = sub.add_parser("dmt", help="diversity slope at a multiplexing gain")
    p.add_argument("--mux", type=float, required=True)
    p.add_argument("--snr-db", type=_parse_range, default=(20.0, 45.0, 5.0))
    p.add_argument("--protocols", "--protocol", type=_parse_protocols, default=["hdp1", "hdp2"])
    mc_args(p, 10_000_000)

    p = sub.add_parser("delay-limited", help="expected thresholds (table) or average-SNR curves (fig5)")
    p.add_argument("--preset", choices=["table1", "fig5"], default="table1")
    p.add_argument("--rate-bits-grid", type=_parse_range, default=(0.25, 8.0, 0.25), help="fig5 rates, bits START:STOP:STEP")
    mc_args(p, power.DEFAULT_BUDGET)
    return parser


def config_from_args(args) -> RunConfig:
    seed = args.seed if getattr(args, "seed", None) is not None else _default_seed()
    kw = dict(command=args.command, seed=seed)
    if args.command == "bounds":
        kw.update(gains=args.gains, rate_bits=args.rate_bits, rate_tag=args.rate_limit)
    elif args.command == "outage":
        preset = args.preset
        protocols = args.protocols
        snr = args.snr_db
        if preset == "fig2":
            snr = snr or (0.0, 40.0, 0.5)
            protocols = protocols or []
        elif preset in ("fig3", "fig4"):
            snr = snr or (0.0, 40.0, 0.5)
            protocols = ["hdp1" if preset == "fig3" else "hdp2"]
        else:
            if protocols is None:
                raise UsageError("outage needs --protocols or --preset")
            if any(p in ("hdp1", "hdp2") for p in protocols) and args.rate_bits is None and args.rate_limit is None:
                raise UsageError("HDP outage needs --rate-bits or --rate-limit")
            snr = snr or (0.0, 40.0, 0.5)
        if args.rate_bits is not None and not args.rate_bits > 0:
            raise UsageError("--rate-bits must be positive")
        kw.update(preset=preset, protocols=protocols, snr_db=snr, rate_bits=args.rate_bits, rate_tag=args.rate_limit,
                  samples=args.samples, workers=args.workers, out=args.out)
    elif args.command == "dmt":
        if not 0 < args.mux < 1:
            raise UsageError("--mux must lie strictly inside (0, 1)")
        if any(p not in ("hdp1", "hdp2", "direct") for p in args.protocols):
            raise UsageError("dmt supports hdp1, hdp2 and direct")
        kw.update(mux=args.mux, snr_db=args.snr_db, protocols=args.protocols, samples=args.samples,
                  workers=args.workers, out=args.out)
    else:
        a, b, c = args.rate_bits_grid
        if not (0 < a < b and c > 0):
            raise UsageError("--rate-bits-grid needs 0 < START < STOP and STEP > 0")
        kw.update(preset=args.preset, rate_grid_bits=args.rate_bits_grid, samples=args.samples, workers=args.workers,
                  out=args.out)
    return RunConfig(**kw)


# ---------------------------------------------------------------------------
# Commands


def _solution_record(sol: flow.FlowSolution, g: LinkGains, coherent: bool):
    sp = sol.split
    rec = {
        "bound": sol.bound,
        "branch": sol.branch.value,
        "asymptotic": sol.asymptotic,
        "split": {"x1": sp.x1, "x2": sp.x2, "x3": sp.x3, "t1": sp.t1, "t2": sp.t2},
    }
    pa = flow.power_allocation(g, sp, coherent=coherent)
    rec["power"] = {"cb_source_fraction": pa.cb_source_fraction, "ma_source_fraction": pa.ma_source_fraction}
    if pa.coherent is not None:
        rec["power"]["coherent"] = list(pa.coherent)
    return rec


def cmd_bounds(cfg: RunConfig) -> dict:
    g = LinkGains(*cfg.gains)
    rate = cfg.rate
    rec = {"gains": {"z13": g.z13, "z12": g.z12, "z23": g.z23}, "b_lb": b_lb(g), "b_df": b_df(g)}
    if isinstance(rate, RateTag):
        rec["rate_nats"] = rate.value
        if rate is RateTag.ZERO:
            rec["b1"], rec["b2"] = flow.b1_limit_zero(g), flow.b2_limit_zero(g)
        else:
            rec["b1"], rec["b2"] = flow.b1_limit_inf(g), flow.b2_limit_inf(g)
    else:
        if not rate > 0:
            raise UsageError("--rate-bits must be positive")
        rec["rate_nats"] = rate
        s1 = flow.b1(g, rate)
        s2 = flow.b2(g, rate)
        rec["b1"], rec["b2"] = s1.bound, s2.bound
        rec["hdp1"] = _solution_record(s1, g, coherent=False)
        rec["hdp2"] = _solution_record(s2, g, coherent=True)
    return rec


def _outage_rows(cfg: RunConfig):
    db = cfg.grid()
    rows = []
    preset = cfg.preset
    seed = cfg.seed
    if preset == "fig2":
        for part, label in ANALYTIC_LABELS.items():
            curve = outage.analytic_curve(part, db)
            rows += [(p.rnsnr_db, "any", label, "Analytic", p.prob, p.prob, p.prob, 0, "") for p in curve.points]
        rows += _direct_rows(db)
        return rows
    if preset in ("fig3", "fig4"):
        protocol = Protocol.HDP1 if preset == "fig3" else Protocol.HDP2
        rates = [RateTag.ZERO] + [b * math.log(2.0) for b in (1.0, 3.0, 6.0)] + [RateTag.INF]
        jobs = [(protocol, r) for r in rates]
        for part in (1, 2):
            curve = outage.analytic_curve(part, db)
            rows += [(p.rnsnr_db, "any", ANALYTIC_LABELS[part], "Analytic", p.prob, p.prob, p.prob, 0, "") for p in curve.points]
        rows += _direct_rows(db)
    else:
        rate = cfg.rate if cfg.rate is not None else RateTag.ZERO
        jobs = [(PROTOCOL_NAMES[p], rate) for p in cfg.protocols]
    curves = outage.mc_outage_sweep(jobs, db, cfg.samples, seed, cfg.workers)
    for (protocol, rate), curve in curves.items():
        lab = _rate_label(rate) if protocol in (Protocol.HDP1, Protocol.HDP2) else "any"
        rows += [(p.rnsnr_db, lab, protocol.value, "MC", p.prob, p.ci_lo, p.ci_hi, p.n_samples, seed) for p in curve.points]
    return rows


def _direct_rows(db):
    curve = outage.direct_curve(db)
    return [(p.rnsnr_db, "any", "Direct", "Analytic", p.prob, p.prob, p.prob, 0, "") for p in curve.points]


def _dmt_rows(cfg: RunConfig):
    rows = []
    fits = dmt.diversity_fits([PROTOCOL_NAMES[n] for n in cfg.protocols], cfg.mux, cfg.grid(), cfg.samples,
                              cfg.seed, cfg.workers)
    for fit in fits:
        for d, p, e in zip(fit.snr_db_grid, fit.outage, fit.events):
            rows.append((fit.protocol.value, cfg.mux, d, p, e, fit.fitted_slope, fit.slope_stderr, cfg.samples, cfg.seed))
    return rows


def _delay_rows(cfg: RunConfig):
    table = power.delay_limited_table(cfg.samples, cfg.seed)
    if cfg.preset == "table1":
        return TABLE_HEADER, table.rows()
    start, stop, step = cfg.rate_grid_bits
    bits = np.arange(start, stop + 0.5 * step, step)
    return FIG5_HEADER, power.fig5_data(bits * math.log(2.0), table)


def _write_csv(path: str, header, rows, cfg: RunConfig):
    tmp = path + ".partial"
    meta_path = path + ".meta.json"
    try:
        with open(tmp, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
        meta = {"relaykit_version": __version__, "config": dataclasses.asdict(cfg), "argv": sys.argv[1:]}
        with open(meta_path + ".partial", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True, default=str)
        os.replace(tmp, path)
        os.replace(meta_path + ".partial", meta_path)
    except BaseException:
        for p in (tmp, meta_path + ".partial"):
            if os.path.exists(p):
                os.remove(p)
        raise


def run(cfg: RunConfig) -> int:
    if cfg.command == "bounds":
        print(json.dumps(cmd_bounds(cfg), sort_keys=True))
        return EXIT_OK
    if cfg.command == "outage":
        header, rows = OUTAGE_HEADER, _outage_rows(cfg)
    elif cfg.command == "dmt":
        header, rows = DMT_HEADER, _dmt_rows(cfg)
    else:
        header, rows = _delay_rows(cfg)
    _write_csv(cfg.out, header, rows, cfg)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on malformed input
    try:
        cfg = config_from_args(args)
        return run(cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"relaykit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, QuadratureError, dmt.InsufficientEventsError) as exc:
        print(f"relaykit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"relaykit: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
