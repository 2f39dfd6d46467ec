"""Monte Carlo estimation of the Integrity Metric (IM).

For a split of ``m`` rows into ``p`` training and ``q = m - p`` test rows,

    IM(m, p) = E[ (||X_test b_hat - y_test||^2 / q - sigma^2)^2 ].

Three estimators share that expectation:

* tier 0 simulates (X, b, eps), fits the ridge model and averages the
  squared deviation directly;
* tier 1 averages, over X, the exact conditional expectation given X
  (a trace polynomial in A = -alpha X_test G and B = X_test G X_train^T);
* tier 2 additionally integrates out X_test with Wishart moment identities,
  leaving a function of the training Gram matrix alone.

Tiers 1 and 2 depend on the data only through X_train^T X_train and
X_test^T X_test, so the point estimators draw those Gram matrices directly
(Bartlett decomposition) unless ``via_rows=True``.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from . import rng as rngmod
from .errors import InvalidSplitError
from .rng import RngSeed


class Tier(IntEnum):
    TIER0 = 0
    TIER1 = 1
    TIER2 = 2

    @classmethod
    def parse(cls, value) -> "Tier":
        if isinstance(value, Tier):
            return value
        text = str(value).strip().lower()
        if text.startswith("tier"):
            text = text[4:]
        try:
            return cls(int(text))
        except ValueError:
            raise ValueError(f"unknown tier {value!r}; expected Tier0, Tier1 or Tier2") from None

    def __str__(self):
        return f"Tier{int(self)}"


_TIER_STREAM = {
    Tier.TIER0: rngmod.STREAM_TIER0,
    Tier.TIER1: rngmod.STREAM_TIER1,
    Tier.TIER2: rngmod.STREAM_TIER2,
}


@dataclass(frozen=True)
class ImPointEstimate:
    p: int
    m: int
    mean: float
    stderr: float
    trials: int
    tier: Tier


@dataclass(frozen=True)
class TraceSummary:
    tr_AtA: float
    tr_AtA_sq_of: float
    tr_AtA_sq: float
    tr_BtB: float
    tr_BtB_sq_of: float
    tr_BtB_sq: float
    tr_BtAAtB: float


@dataclass(frozen=True)
class TrainTraceSummary:
    t1: float
    t2: float
    t3: float
    t4: float
    t5: float


@dataclass
class SplitCurve:
    m: int
    n: int
    c: float
    sigma: float
    alpha: float
    points: list = field(default_factory=list)

    @property
    def p(self) -> np.ndarray:
        return np.array([pt.p for pt in self.points])

    @property
    def means(self) -> np.ndarray:
        return np.array([pt.mean for pt in self.points])

    @property
    def stderrs(self) -> np.ndarray:
        return np.array([pt.stderr for pt in self.points])


def check_split(m: int, n: int, p: int):
    if not n + 2 <= p <= m - 1:
        raise InvalidSplitError(f"p = {p} outside [n + 2, m - 1] = [{n + 2}, {m - 1}]")


def _tr(a):
    return np.trace(a, axis1=-2, axis2=-1)


def _mT(a):
    return np.swapaxes(a, -1, -2)


def _ridge_inverse(w1, alpha):
    n = w1.shape[-1]
    return np.linalg.inv(w1 + alpha * np.eye(n))


def trace_summary(x_train, x_test, alpha: float) -> TraceSummary:
    """Traces of A^T A and B^T B built literally from one realized split."""
    x1 = np.asarray(x_train, dtype=float)
    x2 = np.asarray(x_test, dtype=float)
    g = _ridge_inverse(x1.T @ x1, alpha)
    a = -alpha * x2 @ g
    b = x2 @ g @ x1.T
    ata = a.T @ a
    btb = b.T @ b
    return TraceSummary(
        tr_AtA=float(np.trace(ata)),
        tr_AtA_sq_of=float(np.trace(ata @ ata)),
        tr_AtA_sq=float(np.trace(ata) ** 2),
        tr_BtB=float(np.trace(btb)),
        tr_BtB_sq_of=float(np.trace(btb @ btb)),
        tr_BtB_sq=float(np.trace(btb) ** 2),
        tr_BtAAtB=float(np.trace(b.T @ a @ a.T @ b)),
    )


def _assemble(q, c, sigma, ata, ata_sq, ata2, btb, btb_sq, btb2, btaatb, ata_btb):
    """The conditional-expectation bracket, divided by q^2.

    ``ata_sq`` is tr(A^T A)^2 and ``ata2`` is tr((A^T A)^2); same for B.
    ``ata_btb`` is tr(A^T A) tr(B^T B), kept separate because tier 2
    replaces it by its own expectation rather than a product of means.
    """
    c2, s2 = c * c, sigma * sigma
    total = (
        c2 * c2 * ata_sq
        + 2 * c2 * c2 * ata2
        + s2 * s2 * btb_sq
        + 2 * s2 * s2 * btb2
        + 2 * s2 * s2 * q
        + 2 * c2 * s2 * ata_btb
        + 4 * c2 * s2 * btaatb
        + 4 * c2 * s2 * ata
        + 4 * s2 * s2 * btb
    )
    return total / q**2


def tier1_from_grams(w1, w2, q, c, sigma, alpha):
    """Tier-1 values from train/test Gram matrices (batched over leading axes)."""
    g = _ridge_inverse(w1, alpha)
    ata = alpha**2 * g @ w2 @ g
    # B^T B is p x p but shares its nonzero spectrum with W2 G W1 G
    k = w2 @ g @ w1 @ g
    tr_ata = _tr(ata)
    tr_btb = _tr(k)
    tr_btaatb = alpha**2 * _tr(g @ g @ w2 @ g @ w1 @ g @ w2)
    return _assemble(
        q, c, sigma,
        tr_ata, tr_ata**2, _tr(ata @ ata),
        tr_btb, tr_btb**2, _tr(k @ k),
        tr_btaatb, tr_ata * tr_btb,
    )


def im_tier1_given_x(x, config, p: int) -> float:
    """Exact E[statistic | X] for one realized m x n design split at ``p``."""
    x = np.asarray(x, dtype=float)
    m, n = x.shape
    check_split(m, n, p)
    s = trace_summary(x[:p], x[p:], config.alpha)
    q = m - p
    return float(_assemble(
        q, config.c, config.sigma,
        s.tr_AtA, s.tr_AtA_sq, s.tr_AtA_sq_of,
        s.tr_BtB, s.tr_BtB_sq, s.tr_BtB_sq_of,
        s.tr_BtAAtB, s.tr_AtA * s.tr_BtB,
    ))


def train_trace_summary(w1, sigma_cov, alpha, p):
    """t1..t5 from the training Gram matrix (batched over leading axes)."""
    g = _ridge_inverse(w1, alpha)
    sgg = sigma_cov @ g @ g
    shh = p * sigma_cov @ g @ w1 @ g
    return TrainTraceSummary(
        t1=_tr(sgg), t2=_tr(sgg @ sgg), t3=_tr(shh), t4=_tr(shh @ shh), t5=_tr(sgg @ shh),
    )


def tier2_from_gram(w1, sigma_cov, m, p, c, sigma, alpha):
    t = train_trace_summary(w1, sigma_cov, alpha, p)
    q = m - p
    a2, a4 = alpha**2, alpha**4
    return _assemble(
        q, c, sigma,
        ata=a2 * q * t.t1,
        ata_sq=a4 * (q * q * t.t1**2 + 2 * q * t.t2),
        ata2=a4 * (q * t.t1**2 + q * (q + 1) * t.t2),
        btb=q * t.t3 / p,
        btb_sq=(q * q * t.t3**2 + 2 * q * t.t4) / p**2,
        btb2=(q * t.t3**2 + q * (q + 1) * t.t4) / p**2,
        btaatb=a2 / p * (q * t.t1 * t.t3 + q * (q + 1) * t.t5),
        ata_btb=a2 / p * (q * q * t.t1 * t.t3 + 2 * q * t.t5),
    )


def im_tier2_given_train(x_train, config, p: int, m: int, sigma_cov=None) -> float:
    """E[statistic | X_train] with X_test integrated out analytically."""
    x1 = np.asarray(x_train, dtype=float)
    check_split(m, x1.shape[1], p)
    if x1.shape[0] != p:
        raise InvalidSplitError(f"x_train has {x1.shape[0]} rows, expected {p}")
    if sigma_cov is None:
        sigma_cov = config.covariance()
    return float(tier2_from_gram(x1.T @ x1, sigma_cov, m, p, config.c, config.sigma, config.alpha))


def tier0_block(rng, chol, m, p, size, c, sigma, alpha):
    """Per-trial tier-0 statistics for one block of fresh (X, b, eps)."""
    n = chol.shape[0]
    x = rngmod.gaussian_rows(rng, (size, m), chol)
    b = c * rng.standard_normal((size, n))
    eps = rng.standard_normal((size, m))
    y = np.einsum("tmn,tn->tm", x, b) + sigma * eps
    x1, y1 = x[:, :p], y[:, :p]
    lhs = _mT(x1) @ x1 + alpha * np.eye(n)
    rhs = np.einsum("tpn,tp->tn", x1, y1)
    coef = np.linalg.solve(lhs, rhs[..., None])[..., 0]
    resid = np.einsum("tqn,tn->tq", x[:, p:], coef) - y[:, p:]
    mse = np.einsum("tq,tq->t", resid, resid) / (m - p)
    return (mse - sigma**2) ** 2


def _draw_grams(rng, sigma_cov, chol, m, p, size, via_rows, need_test):
    if via_rows:
        x = rngmod.gaussian_rows(rng, (size, m if need_test else p), chol)
        x1 = x[:, :p]
        w1 = _mT(x1) @ x1
        w2 = _mT(x[:, p:]) @ x[:, p:] if need_test else None
        return w1, w2
    w1 = rngmod.sample_wishart_batch(rng, p, sigma_cov, size)
    w2 = rngmod.sample_wishart_batch(rng, m - p, sigma_cov, size) if need_test else None
    return w1, w2


def per_trial_values(config, p: int, trials: int, seed: RngSeed, tier, sigma_cov=None, via_rows=False):
    """All per-trial values at one split point, in trial order."""
    tier = Tier.parse(tier)
    m, n = config.m, config.n
    check_split(m, n, p)
    if sigma_cov is None:
        sigma_cov = config.covariance()
    chol = rngmod.cholesky_factor(sigma_cov)
    stream = rngmod.point_stream(_TIER_STREAM[tier], p)
    out = []
    for k, size in rngmod.block_sizes(trials):
        rng = seed.child(stream, k).generator()
        if tier is Tier.TIER0:
            vals = tier0_block(rng, chol, m, p, size, config.c, config.sigma, config.alpha)
        elif tier is Tier.TIER1:
            w1, w2 = _draw_grams(rng, sigma_cov, chol, m, p, size, via_rows, True)
            vals = tier1_from_grams(w1, w2, m - p, config.c, config.sigma, config.alpha)
        else:
            w1, _ = _draw_grams(rng, sigma_cov, chol, m, p, size, via_rows, False)
            vals = tier2_from_gram(w1, sigma_cov, m, p, config.c, config.sigma, config.alpha)
        out.append(np.asarray(vals, dtype=float))
    return np.concatenate(out)


def _estimate(config, p, trials, seed, tier, sigma_cov=None, via_rows=False) -> ImPointEstimate:
    if trials < 100:
        raise ValueError(f"trials must be >= 100, got {trials}")
    vals = per_trial_values(config, p, trials, seed, tier, sigma_cov, via_rows)
    return ImPointEstimate(
        p=p, m=config.m, mean=float(vals.mean()),
        stderr=float(vals.std(ddof=1) / np.sqrt(trials)),
        trials=trials, tier=Tier.parse(tier),
    )


def im_tier0(config, p, trials, seed, sigma_cov=None) -> ImPointEstimate:
    return _estimate(config, p, trials, seed, Tier.TIER0, sigma_cov)


def im_tier1(config, p, trials, seed, sigma_cov=None, via_rows=False) -> ImPointEstimate:
    return _estimate(config, p, trials, seed, Tier.TIER1, sigma_cov, via_rows)


def im_tier2(config, p, trials, seed, sigma_cov=None, via_rows=False) -> ImPointEstimate:
    return _estimate(config, p, trials, seed, Tier.TIER2, sigma_cov, via_rows)


def im_point(config, p, trials, seed, tier, sigma_cov=None) -> ImPointEstimate:
    return _estimate(config, p, trials, seed, tier, sigma_cov)


def _curve_chunk(args):
    config, ps, tier, trials, master, sigma_cov = args
    seed = RngSeed(master)
    return [im_point(config, p, trials, seed, tier, sigma_cov) for p in ps]


def im_curve(config, p_min, p_max, step, tier, trials, seed: RngSeed, workers: int = 1,
             sigma_cov=None) -> SplitCurve:
    """IM estimates on the grid p_min, p_min + step, ..., <= p_max.

    Each grid point owns its own random streams, so the curve is identical
    for any ``workers``.
    """
    tier = Tier.parse(tier)
    if step < 1:
        raise InvalidSplitError(f"step must be >= 1, got {step}")
    if not config.n + 2 <= p_min < p_max <= config.m - 1:
        raise InvalidSplitError(
            f"need n + 2 <= p_min < p_max <= m - 1, got p_min={p_min}, p_max={p_max}"
        )
    ps = list(range(p_min, p_max + 1, step))
    if sigma_cov is None:
        sigma_cov = config.covariance()
    if workers <= 1:
        points = _curve_chunk((config, ps, tier, trials, seed.master_seed, sigma_cov))
    else:
        chunks = [ps[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                _curve_chunk,
                [(config, ch, tier, trials, seed.master_seed, sigma_cov) for ch in chunks],
            ))
        points = sorted((pt for part in parts for pt in part), key=lambda pt: pt.p)
    return SplitCurve(m=config.m, n=config.n, c=config.c, sigma=config.sigma,
                      alpha=config.alpha, points=points)


def default_window(num_points: int) -> int:
    return max(2, num_points // 20)


def smooth_curve(ps, means, window: int, stderrs=None) -> np.ndarray:
    """Replace each mean by a local quadratic fit over 2*window + 1 grid points.

    Windows are shifted inward at the ends rather than truncated.  With
    ``stderrs`` the fits are weighted by inverse variance; IM standard errors
    scale with the IM itself, and without weights the steep small-p end of
    a curve drags the fitted parabola below the true minimum.
    """
    ps = np.asarray(ps, dtype=float)
    means = np.asarray(means, dtype=float)
    size = len(means)
    w = min(window, (size - 1) // 2)
    if w < 1:
        return means.copy()
    weights = None
    if stderrs is not None:
        se = np.asarray(stderrs, dtype=float)
        if np.all(se > 0):
            weights = 1.0 / se
    out = np.empty(size)
    for i in range(size):
        lo = min(max(i - w, 0), size - (2 * w + 1))
        sl = slice(lo, lo + 2 * w + 1)
        coef = np.polyfit(ps[sl] - ps[i], means[sl], 2, w=None if weights is None else weights[sl])
        out[i] = coef[-1]
    return out


def argmin_pair(ps, means, window: int, stderrs=None):
    """(raw argmin, smoothed argmin); ties resolve to the smaller p."""
    ps = np.asarray(ps)
    raw = int(ps[np.argmin(means)])
    if window <= 0:
        return raw, raw
    return raw, int(ps[np.argmin(smooth_curve(ps, means, window, stderrs))])


def empirical_argmin(curve: SplitCurve, window=None):
    """Recommendation carrying the raw and smoothed empirical argmins of ``curve``."""
    from .solver import recommend

    if not curve.points:
        raise InvalidSplitError("curve is empty")
    if window is None:
        window = default_window(len(curve.points))
    if window < 0:
        raise ValueError(f"window must be >= 0, got {window}")
    pair = argmin_pair(curve.p, curve.means, window, curve.stderrs)
    return recommend(curve.m, curve.n, empirical=pair)
