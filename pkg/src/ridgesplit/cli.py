"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 verification
failure (or an I/O error while writing results).
"""

import argparse
import csv
import logging
import os
import sys

from .config import SEED_ENV_VAR, parse_config
from .errors import RidgeSplitError
from .integrity import Tier
from .report import (DEFAULT_M_LADDER, RECOMMENDATION_COLUMNS, fmt, recommendation_row,
                     reproduce_figures, run_sweep, verify_moments)
from .solver import recommend

EXIT_OK, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def int_list(text):
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def panel_list(text):
    panels = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            panels.extend(range(int(lo), int(hi) + 1))
        elif part:
            panels.append(int(part))
    if not panels or any(not 1 <= p <= 8 for p in panels):
        raise argparse.ArgumentTypeError(f"panels must lie in 1-8, got {text!r}")
    return panels


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV_VAR, "").strip()
    return int(env) if env else 0


def build_parser():
    parser = _Parser(prog="ridgesplit", description="Train/test split sizing for ridge regression.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("recommend", help="closed-form split for m rows and n features")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--source", choices=["formula", "root"], default="formula")

    p = sub.add_parser("im-curve", help="Monte Carlo IM curve and empirical argmin")
    p.add_argument("--config", help="key = value file")
    for key, typ in [("m", int), ("n", int), ("c", float), ("sigma", float), ("alpha", float),
                     ("trials", int), ("seed", int), ("p-min", int), ("p-max", int), ("step", int)]:
        p.add_argument(f"--{key}", type=typ, dest=key.replace("-", "_"))
    p.add_argument("--tier", choices=["Tier0", "Tier1", "Tier2", "0", "1", "2"])
    p.add_argument("--covariance-scheme", choices=["identity", "random"])
    p.add_argument("--smoothing-window", help="integer or 'auto'")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=".")

    p = sub.add_parser("verify-moments", help="check the Wishart trace-moment identities")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--p-ladder", type=int_list, default=[50, 100, 200, 400])
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--covariance-scheme", choices=["identity", "random"], default="random")
    p.add_argument("--bounds-instances", type=int, default=10_000)
    p.add_argument("--out", default=".")

    p = sub.add_parser("reproduce-figures", help="empirical vs analytic p*(m) panels")
    p.add_argument("--panels", type=panel_list, default=list(range(1, 9)))
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--m-ladder", type=int_list, default=list(DEFAULT_M_LADDER))
    p.add_argument("--tier", choices=["Tier0", "Tier1", "Tier2", "0", "1", "2"], default="Tier2")
    p.add_argument("--step", type=int, help="p-grid step (default max(1, m // 200))")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=".")
    return parser


def cmd_recommend(args):
    rec = recommend(args.m, args.n, source=args.source)
    writer = csv.writer(sys.stdout)
    writer.writerow(RECOMMENDATION_COLUMNS)
    row = recommendation_row(rec)
    writer.writerow([fmt(row[c]) for c in RECOMMENDATION_COLUMNS])
    return EXIT_OK


def cmd_im_curve(args):
    keys = ["m", "n", "c", "sigma", "alpha", "trials", "seed", "p_min", "p_max", "step",
            "tier", "covariance_scheme", "smoothing_window"]
    overrides = {k: getattr(args, k) for k in keys}
    config = parse_config(args.config, overrides)
    curve, rec = run_sweep(config, args.out, workers=args.workers)
    print(f"wrote {len(curve.points)} points to {os.path.join(args.out, 'im_curve.csv')}")
    print(f"p_formula={rec.p_formula:.3f} p_root={rec.p_root:.3f} "
          f"p_empirical={rec.p_empirical} p_final={rec.p_final}")
    return EXIT_OK


def cmd_verify_moments(args):
    if min(args.p_ladder) < args.n + 2:
        raise UsageError(f"every p on the ladder must be >= n + 2 = {args.n + 2}")
    report = verify_moments(args.n, args.p_ladder, args.alpha, args.trials, _seed(args), args.out,
                            covariance_scheme=args.covariance_scheme,
                            bounds_instances=args.bounds_instances)
    for row in report.rows:
        status = {True: "PASS", False: "FAIL", None: "n/a"}[row["passed"]]
        print(f"{status:4s} {row['kind']:6s} p={fmt(row['p']):>5s} estimate={fmt(row['estimate'])}")
    return EXIT_OK if report.all_passed else EXIT_VERIFY


def cmd_reproduce_figures(args):
    results = reproduce_figures(args.panels, args.m_ladder, args.trials, _seed(args), args.out,
                                tier=Tier.parse(args.tier), step=args.step, workers=args.workers)
    for panel, rows in results.items():
        print(f"panel-{panel}: " + ", ".join(
            f"m={r['m']} formula={r['p_formula']:.1f} empirical={r['p_empirical_smoothed']}" for r in rows))
    return EXIT_OK


COMMANDS = {
    "recommend": cmd_recommend,
    "im-curve": cmd_im_curve,
    "verify-moments": cmd_verify_moments,
    "reproduce-figures": cmd_reproduce_figures,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, RidgeSplitError, ValueError) as exc:
        print(f"ridgesplit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"ridgesplit: I/O error: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
