"""Monte Carlo checks of the Wishart trace moments behind the IM expansion.

With W = X^T X for X a p x n sample with row covariance Sigma, each
``MomentKind`` names one trace functional.  Kinds with a nonzero reference
are compared to that value; kinds whose only claim is a decay rate in p
(reference 0) are checked by a log-log slope across a ladder of p.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import stats

from . import rng as rngmod
from .errors import DegenerateMomentError, InvalidDimensionError
from .rng import RngSeed


class MomentKind(Enum):
    P1_1 = "P1_1"  # tr(S W^-1)
    P1_2 = "P1_2"  # tr(S W^-1)^2
    P1_3 = "P1_3"  # tr((S W^-1)^2)
    L5_5 = "L5_5"  # tr(S R^2), R = (W + aI)^-1
    L5_6 = "L5_6"  # tr((S R^2)^2)
    L5_7 = "L5_7"  # tr(S R^2)^2
    L5_8 = "L5_8"  # p tr(S W R^2)
    L5_9 = "L5_9"  # p^2 tr((S W R^2)^2)
    L5_10 = "L5_10"  # p^2 tr(S W R^2)^2
    L5_11 = "L5_11"  # p tr(S R^2 S W R^2)
    L5_12 = "L5_12"  # p tr(S R^2) tr(S W R^2)

    @property
    def scale_power(self) -> int:
        return _SCALE_POWER[self]

    @property
    def order_only(self) -> bool:
        return self in _DECAY_ORDER


_SCALE_POWER = {
    MomentKind.L5_8: 1, MomentKind.L5_9: 2, MomentKind.L5_10: 2,
    MomentKind.L5_11: 1, MomentKind.L5_12: 1,
}
_SCALE_POWER.update({k: 0 for k in MomentKind if k not in _SCALE_POWER})

# claimed decay exponents for the kinds that only assert an order
_DECAY_ORDER = {
    MomentKind.L5_5: 2, MomentKind.L5_6: 4, MomentKind.L5_7: 4,
    MomentKind.L5_11: 2, MomentKind.L5_12: 2,
}


@dataclass(frozen=True)
class MomentEstimate:
    kind: MomentKind
    mean: float
    stderr: float
    trials: int
    scale_power: int


@dataclass(frozen=True)
class ReferenceValue:
    value: float
    error_order: Optional[int]  # None when the value is exact

    @property
    def exact(self) -> bool:
        return self.error_order is None


def _check_moment_args(n, p):
    if n < 1:
        raise InvalidDimensionError(f"n must be >= 1, got {n}")
    if p <= n + 1:
        raise DegenerateMomentError(f"need p >= n + 2 for finite inverse moments, got p={p}, n={n}")


def analytic_reference(kind: MomentKind, n: int, p: int) -> ReferenceValue:
    kind = MomentKind(kind)
    _check_moment_args(n, p)
    if kind is MomentKind.P1_1:
        return ReferenceValue(n / (p - n - 1), None)
    if kind is MomentKind.P1_2:
        return ReferenceValue(n * n / p**2, 3)
    if kind is MomentKind.P1_3:
        return ReferenceValue(n / p**2, 3)
    if kind is MomentKind.L5_8:
        return ReferenceValue(n * p / (p - n - 1), 1)
    if kind is MomentKind.L5_9:
        return ReferenceValue(float(n), 1)
    if kind is MomentKind.L5_10:
        return ReferenceValue(float(n * n), 1)
    return ReferenceValue(0.0, _DECAY_ORDER[kind])


def _tr(a):
    return np.trace(a, axis1=-2, axis2=-1)


def trace_functionals(w, sigma_cov, alpha, p, kinds) -> dict:
    """Per-draw values of each requested kind for a batch of Gram matrices."""
    n = w.shape[-1]
    out = {}
    if any(k.name.startswith("P1") for k in kinds):
        sw = sigma_cov @ np.linalg.inv(w)
        t = _tr(sw)
        out[MomentKind.P1_1] = t
        out[MomentKind.P1_2] = t * t
        out[MomentKind.P1_3] = _tr(sw @ sw)
    if any(k.name.startswith("L5") for k in kinds):
        r = np.linalg.inv(w + alpha * np.eye(n))
        sr2 = sigma_cov @ r @ r
        swr2 = sigma_cov @ w @ r @ r
        a = _tr(sr2)
        b = _tr(swr2)
        out[MomentKind.L5_5] = a
        out[MomentKind.L5_6] = _tr(sr2 @ sr2)
        out[MomentKind.L5_7] = a * a
        out[MomentKind.L5_8] = p * b
        out[MomentKind.L5_9] = p**2 * _tr(swr2 @ swr2)
        out[MomentKind.L5_10] = p**2 * b * b
        out[MomentKind.L5_11] = p * _tr(sr2 @ swr2)
        out[MomentKind.L5_12] = p * a * b
    return {k: out[k] for k in kinds}


def mc_trace_moments(kinds, n, p, alpha, sigma, trials, seed: RngSeed) -> dict:
    """Estimate several kinds from one shared set of draws of X."""
    kinds = [MomentKind(k) for k in kinds]
    _check_moment_args(n, p)
    if trials < 100:
        raise ValueError(f"trials must be >= 100, got {trials}")
    sigma_cov = rngmod.as_spd(sigma)
    if sigma_cov.shape[0] != n:
        raise InvalidDimensionError(f"sigma is {sigma_cov.shape[0]}x{sigma_cov.shape[0]}, expected n={n}")
    chol = rngmod.cholesky_factor(sigma_cov)
    stream = rngmod.point_stream(rngmod.STREAM_MOMENTS, p, salt=n)
    chunks = {k: [] for k in kinds}
    for k, size in rngmod.block_sizes(trials):
        rng = seed.child(stream, k).generator()
        x = rngmod.gaussian_rows(rng, (size, p), chol)
        w = np.swapaxes(x, -1, -2) @ x
        for kind, vals in trace_functionals(w, sigma_cov, alpha, p, kinds).items():
            chunks[kind].append(vals)
    result = {}
    for kind in kinds:
        vals = np.concatenate(chunks[kind])
        result[kind] = MomentEstimate(
            kind=kind, mean=float(vals.mean()),
            stderr=float(vals.std(ddof=1) / np.sqrt(trials)),
            trials=trials, scale_power=kind.scale_power,
        )
    return result


def mc_trace_moment(kind, n, p, alpha, sigma, trials, seed: RngSeed) -> MomentEstimate:
    kind = MomentKind(kind)
    return mc_trace_moments([kind], n, p, alpha, sigma, trials, seed)[kind]


def loglog_slope(ps, means) -> float:
    """Least-squares slope of log(mean) against log(p)."""
    return float(np.polyfit(np.log(np.asarray(ps, dtype=float)), np.log(np.asarray(means, dtype=float)), 1)[0])


def slope_band(kind: MomentKind, half_width: float = 0.5):
    k = _DECAY_ORDER[MomentKind(kind)]
    return -k - half_width, -k + half_width


# a ladder fails the convergence check when the two-term error model is
# rejected at this significance level
CONVERGENCE_LEVEL = 1e-3


@dataclass(frozen=True)
class ConvergenceFit:
    """How an estimate with an O(p^-k) reference error behaves along a ladder.

    The signed error is fitted by weighted least squares to
    ``leading / p^k + correction / p^(k+1)``.  If the residual chi-square is
    plausible the error is O(p^-k) with constant ``leading``; an error that
    decays more slowly leaves a residual the fit cannot absorb.
    ``constant`` is the smallest C with |estimate - reference| <= 3 stderr + C / p^k
    at every rung.
    """

    constant: float
    order: int
    scaled_errors: tuple
    leading: Optional[float]
    correction: Optional[float]
    chi2: Optional[float]
    p_value: Optional[float]

    @property
    def passed(self) -> Optional[bool]:
        if self.p_value is None:
            return None
        return self.p_value >= CONVERGENCE_LEVEL


def convergence_fit(ps, means, stderrs, refs, order: int) -> ConvergenceFit:
    ps = np.asarray(ps, dtype=float)
    diff = np.asarray(means, dtype=float) - np.asarray(refs, dtype=float)
    se = np.asarray(stderrs, dtype=float)
    const = float(np.max(np.maximum(np.abs(diff) - 3 * se, 0.0) * ps**order))
    scaled = tuple(float(v) for v in np.abs(diff) * ps**order)
    if len(ps) < 3:
        return ConvergenceFit(const, order, scaled, None, None, None, None)
    design = np.column_stack([ps**-order, ps**-(order + 1)]) / se[:, None]
    coef, *_ = np.linalg.lstsq(design, diff / se, rcond=None)
    resid = diff / se - design @ coef
    chi2 = float(resid @ resid)
    p_value = float(stats.chi2.sf(chi2, len(ps) - 2))
    return ConvergenceFit(const, order, scaled, float(coef[0]), float(coef[1]), chi2, p_value)


def deterministic_bounds_check(x, alpha: float, s, t, rtol: float = 1e-12) -> bool:
    """True iff the three trace inequalities hold on this instance.

    Checks tr((I + a X^T X)^-1) <= n, tr((X^T X + a I)^-1) <= n / a and
    tr(S T) <= tr(S) tr(T), each with relative slack ``rtol`` for rounding.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    s = rngmod.as_spd(s)
    t = rngmod.as_spd(t)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[1]
    w = x.T @ x
    eye = np.eye(n)
    lhs1 = np.trace(np.linalg.inv(eye + alpha * w))
    lhs2 = np.trace(np.linalg.inv(w + alpha * eye))
    lhs3 = np.trace(s @ t)
    slack = 1 + rtol
    return bool(lhs1 <= n * slack and lhs2 <= n / alpha * slack
                and lhs3 <= np.trace(s) * np.trace(t) * slack)


def bounds_sweep(instances: int, alphas, seed: RngSeed, max_n: int = 6, max_rows: int = 20) -> int:
    """Number of violating instances among random (X, alpha, S, T) draws."""
    alphas = list(alphas)
    violations = 0
    for i in range(instances):
        rng = seed.child(rngmod.point_stream(rngmod.STREAM_BOUNDS, i, salt=0)).generator()
        n = int(rng.integers(1, max_n + 1))
        rows = int(rng.integers(1, max_rows + 1))
        alpha = alphas[i % len(alphas)]
        s = rngmod.sample_spd_covariance(n, "random", seed.child(rngmod.point_stream(rngmod.STREAM_BOUNDS, i, salt=1)))
        t = rngmod.sample_spd_covariance(n, "random", seed.child(rngmod.point_stream(rngmod.STREAM_BOUNDS, i, salt=2)))
        x = rng.standard_normal((rows, n)) * rng.uniform(0.1, 10.0)
        if not deterministic_bounds_check(x, alpha, s, t):
            violations += 1
    return violations
