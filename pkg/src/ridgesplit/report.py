"""Sweeps, moment-verification reports and panel reproduction, written as CSV."""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import moments as mom
from .config import ExperimentConfig
from .integrity import Tier, argmin_pair, im_curve
from .rng import STREAM_COVARIANCE, RngSeed, sample_spd_covariance
from .solver import asymptotic_split, recommend

log = logging.getLogger(__name__)

CURVE_COLUMNS = ["m", "n", "c", "sigma", "alpha", "tier", "trials", "seed", "p", "im_mean", "im_stderr"]
RECOMMENDATION_COLUMNS = ["m", "n", "p_formula", "p_root", "p_empirical_raw", "p_empirical_smoothed", "p_final"]
MOMENT_COLUMNS = ["kind", "n", "p", "alpha", "trials", "scale_power", "estimate", "stderr",
                  "reference", "error_order", "check", "statistic", "passed"]
PANEL_COLUMNS = ["panel", "n", "c", "sigma", "alpha", "m", "p_formula", "p_empirical_raw",
                 "p_empirical_smoothed", "tier", "trials", "seed"]


def fmt(value) -> str:
    """CSV cell text; floats get 17 significant digits."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)  # RFC 4180: minimal quoting, CRLF
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(row[c]) for c in columns])
    return path


def curve_rows(curve, config: ExperimentConfig, tier):
    for pt in curve.points:
        yield {
            "m": curve.m, "n": curve.n, "c": float(curve.c), "sigma": float(curve.sigma),
            "alpha": float(curve.alpha), "tier": str(Tier.parse(tier)), "trials": pt.trials,
            "seed": config.seed, "p": pt.p, "im_mean": pt.mean, "im_stderr": pt.stderr,
        }


def recommendation_row(rec):
    raw, smoothed = rec.p_empirical if rec.p_empirical else (None, None)
    return {
        "m": rec.m, "n": rec.n, "p_formula": rec.p_formula, "p_root": rec.p_root,
        "p_empirical_raw": raw, "p_empirical_smoothed": smoothed, "p_final": rec.p_final,
    }


def sweep(config: ExperimentConfig, workers: int = 1):
    """IM curve for ``config`` plus the recommendation built from it."""
    lo, hi, step = config.p_grid
    curve = im_curve(config, lo, hi, step, config.tier, config.trials, config.rng_seed(), workers=workers)
    pair = argmin_pair(curve.p, curve.means, config.window(), curve.stderrs)
    return curve, recommend(config.m, config.n, empirical=pair)


def run_sweep(config: ExperimentConfig, outdir, workers: int = 1):
    """Write ``im_curve.csv`` and ``recommendation.csv`` into ``outdir``."""
    curve, rec = sweep(config, workers)
    outdir = Path(outdir)
    write_csv(outdir / "im_curve.csv", CURVE_COLUMNS, curve_rows(curve, config, config.tier))
    write_csv(outdir / "recommendation.csv", RECOMMENDATION_COLUMNS, [recommendation_row(rec)])
    return curve, rec


@dataclass
class MomentReport:
    rows: list
    bound_violations: int

    @property
    def all_passed(self) -> bool:
        return all(r["passed"] is not False for r in self.rows)


def moment_report(n, p_ladder, alpha, trials, seed: int, covariance_scheme="random",
                  bounds_instances=10_000, bounds_alphas=(0.1, 2.0, 100.0)) -> MomentReport:
    """Estimate every moment kind on a ladder of p and judge each claim.

    Exact references pass within 3 stderr; references with an O(p^-k)
    error pass when p^k |error| does not grow along the ladder; decay-only
    kinds pass when their log-log slope lies within 0.5 of -k.
    """
    p_ladder = sorted(int(p) for p in p_ladder)
    master = RngSeed(seed)
    sigma_cov = sample_spd_covariance(n, covariance_scheme, master.child(STREAM_COVARIANCE, n))
    kinds = list(mom.MomentKind)
    estimates = {p: mom.mc_trace_moments(kinds, n, p, alpha, sigma_cov, trials, master) for p in p_ladder}

    rows = []
    for kind in kinds:
        ests = [estimates[p][kind] for p in p_ladder]
        refs = [mom.analytic_reference(kind, n, p) for p in p_ladder]
        means = [e.mean for e in ests]
        ses = [e.stderr for e in ests]
        if kind.order_only:
            lo, hi = mom.slope_band(kind)
            slope = mom.loglog_slope(p_ladder, means) if len(p_ladder) >= 2 else None
            verdicts = [None if slope is None else lo <= slope <= hi] * len(p_ladder)
            check, stats = "loglog-slope", [slope] * len(p_ladder)
        elif refs[0].exact:
            stats = [abs(e.mean - r.value) / e.stderr for e, r in zip(ests, refs)]
            verdicts = [z <= 3.0 for z in stats]
            check = "3-stderr"
        else:
            fit = mom.convergence_fit(p_ladder, means, ses, [r.value for r in refs], refs[0].error_order)
            verdicts = [fit.passed] * len(p_ladder)
            check, stats = "two-term-fit", [fit.p_value] * len(p_ladder)
        for p, e, r, stat, ok in zip(p_ladder, ests, refs, stats, verdicts):
            rows.append({
                "kind": kind.value, "n": n, "p": p, "alpha": float(alpha), "trials": trials,
                "scale_power": e.scale_power, "estimate": e.mean, "stderr": e.stderr,
                "reference": r.value, "error_order": r.error_order, "check": check,
                "statistic": stat, "passed": ok,
            })

    violations = mom.bounds_sweep(bounds_instances, bounds_alphas, master) if bounds_instances else 0
    rows.append({
        "kind": "BOUNDS", "n": None, "p": None, "alpha": None, "trials": bounds_instances,
        "scale_power": None, "estimate": float(violations), "stderr": None, "reference": 0.0,
        "error_order": None, "check": "violations", "statistic": float(violations),
        "passed": violations == 0,
    })
    return MomentReport(rows=rows, bound_violations=violations)


def verify_moments(n, p_ladder, alpha, trials, seed, outdir, **kw) -> MomentReport:
    report = moment_report(n, p_ladder, alpha, trials, seed, **kw)
    write_csv(Path(outdir) / "moments.csv", MOMENT_COLUMNS, report.rows)
    return report


DEFAULT_M_LADDER = (100, 200, 400, 700, 1000)


def panel_parameters(panel: int) -> dict:
    """n, sigma and alpha of panels 1-8 (c = 0.1 throughout)."""
    if not 1 <= panel <= 8:
        raise ValueError(f"panel must be in 1..8, got {panel}")
    return {
        "n": 5 if panel % 2 else 10,
        "sigma": 0.1 if (panel - 1) % 4 < 2 else 0.2,
        "alpha": 2.0 if panel <= 4 else 4.0,
        "c": 0.1,
    }


def default_figure_step(m: int) -> int:
    return max(1, m // 200)


def panel_points(panel, m_ladder, trials, seed, tier=Tier.TIER2, step=None, workers=1,
                 covariance_scheme="random"):
    params = panel_parameters(panel)
    rows = []
    for m in m_ladder:
        cfg = ExperimentConfig(m=m, trials=trials, seed=seed, tier=Tier.parse(tier),
                               step=step or default_figure_step(m),
                               covariance_scheme=covariance_scheme, **params)
        log.info("panel %d: m=%d", panel, m)
        curve, rec = sweep(cfg, workers)
        raw, smoothed = rec.p_empirical
        rows.append({
            "panel": panel, "n": cfg.n, "c": cfg.c, "sigma": cfg.sigma, "alpha": cfg.alpha, "m": m,
            "p_formula": asymptotic_split(m, cfg.n), "p_empirical_raw": raw,
            "p_empirical_smoothed": smoothed, "tier": str(cfg.tier), "trials": trials, "seed": seed,
        })
    return rows


def reproduce_figures(panels, m_ladder=DEFAULT_M_LADDER, trials=10_000, seed=0, outdir=".",
                      tier=Tier.TIER2, step=None, workers=1, covariance_scheme="random"):
    """One SVG and one backing CSV per panel; returns the rows per panel."""
    from .plotting import plot_panel

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    results = {}
    for panel in panels:
        rows = panel_points(panel, m_ladder, trials, seed, tier, step, workers, covariance_scheme)
        write_csv(outdir / f"panel-{panel}.csv", PANEL_COLUMNS, rows)
        params = panel_parameters(panel)
        title = (f"Panel {panel}: n={params['n']}, c={params['c']:g}, "
                 f"sigma={params['sigma']:g}, alpha={params['alpha']:g}")
        plot_panel(
            outdir / f"panel-{panel}.svg", title,
            [r["m"] for r in rows], [r["p_formula"] for r in rows],
            [r["p_empirical_smoothed"] for r in rows],
            formula_fn=lambda m, n=params["n"]: asymptotic_split(m, n),
        )
        results[panel] = rows
    return results
