"""Counter-based random streams and the Gaussian samplers built on them.

Every generator in the package is created here from an ``RngSeed``.  The
state is derived by hashing ``(master_seed, stream_id, index)`` through
``numpy.random.SeedSequence``, so results never depend on the order in
which streams are consumed or on how work is split across processes.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import InvalidDimensionError, NotPositiveDefiniteError

_U64 = 2**64

# stream labels, one per consumer
STREAM_COVARIANCE = 1
STREAM_TIER0 = 2
STREAM_TIER1 = 3
STREAM_TIER2 = 4
STREAM_MOMENTS = 5
STREAM_BOUNDS = 6

# trials are drawn in fixed-size blocks; block ``k`` uses counter ``k``
BLOCK_SIZE = 1024


@dataclass(frozen=True)
class RngSeed:
    """Counter-based seed.  Estimators derive their own streams with ``child``,
    so two runs are independent only if their master seeds differ."""

    master_seed: int
    stream_id: int = 0
    trial_index: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id", "trial_index"):
            value = getattr(self, name)
            if not 0 <= value < _U64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {value}")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id, self.trial_index))
        return np.random.Generator(np.random.PCG64(seq))

    def child(self, stream_id: int, trial_index: int = 0) -> "RngSeed":
        return RngSeed(self.master_seed, stream_id, trial_index)

    def at(self, trial_index: int) -> "RngSeed":
        return RngSeed(self.master_seed, self.stream_id, trial_index)


def point_stream(stream: int, p: int, salt: int = 0) -> int:
    """Pack a consumer label, a split point and an optional salt into one stream id."""
    return (stream << 48) | (salt << 32) | p


def block_sizes(trials: int, block: int = BLOCK_SIZE):
    """Yield ``(block_index, size)`` pairs covering ``trials`` draws in order."""
    for k, start in enumerate(range(0, trials, block)):
        yield k, min(block, trials - start)


def as_spd(matrix, tol: float = 1e-12) -> np.ndarray:
    """Validate and return ``matrix`` as a symmetric positive definite array."""
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidDimensionError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.abs(a - a.T) <= tol):
        raise NotPositiveDefiniteError("matrix is not symmetric")
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError("Cholesky factorization failed") from None
    return a


def sample_spd_covariance(n: int, scheme: str, seed: RngSeed) -> np.ndarray:
    """Draw a row covariance matrix.

    ``identity`` gives I_n.  ``random`` gives Q diag(lam) Q^T with Q Haar
    orthogonal (sign-fixed QR of a Gaussian matrix) and eigenvalues
    log-uniform on [0.5, 2], so the condition number is at most 4.
    """
    if n < 1:
        raise InvalidDimensionError(f"dimension must be >= 1, got {n}")
    if scheme == "identity":
        return np.eye(n)
    if scheme != "random":
        raise ValueError(f"unknown covariance scheme {scheme!r}")
    rng = seed.generator()
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    lam = np.exp(rng.uniform(np.log(0.5), np.log(2.0), size=n))
    sigma = (q * lam) @ q.T
    return 0.5 * (sigma + sigma.T)


def cholesky_factor(sigma) -> np.ndarray:
    try:
        return np.linalg.cholesky(np.asarray(sigma, dtype=float))
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError("covariance is not positive definite") from None


def gaussian_rows(rng: np.random.Generator, shape, chol: np.ndarray) -> np.ndarray:
    """Rows ~ N(0, L L^T) for a precomputed lower factor; leading axes are batch axes."""
    z = rng.standard_normal(tuple(shape) + (chol.shape[0],))
    return z @ chol.T


def sample_gaussian_rows(rows: int, sigma, seed: RngSeed) -> np.ndarray:
    """A ``rows x n`` matrix whose rows are independent N(0, sigma) draws."""
    if rows < 1:
        raise InvalidDimensionError(f"rows must be >= 1, got {rows}")
    chol = cholesky_factor(sigma)
    return gaussian_rows(seed.generator(), (rows,), chol)


def sample_wishart_batch(rng: np.random.Generator, dof: int, sigma: np.ndarray, size: int) -> np.ndarray:
    """``size`` Gram matrices X^T X with X a ``dof x n`` N(0, sigma) sample.

    Uses the Bartlett decomposition, so the cost does not grow with ``dof``.
    """
    n = sigma.shape[0]
    if n == 1:
        draws = stats.chi2.rvs(dof, size=size, random_state=rng) * sigma[0, 0]
        return draws.reshape(size, 1, 1)
    w = stats.wishart.rvs(df=dof, scale=sigma, size=size, random_state=rng)
    return np.asarray(w).reshape(size, n, n)
