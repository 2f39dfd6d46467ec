"""Optimal training-set size p*(m) from the asymptotic formula and from the
root of the leading terms of dIM/dp."""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import optimize

from .errors import NoValidSplitError


@dataclass(frozen=True)
class SplitRecommendation:
    m: int
    n: int
    p_formula: float
    p_root: Optional[float]
    p_empirical: Optional[Tuple[int, int]]
    p_final: int


def leading_coefficient(n):
    return np.cbrt(n * (2.0 + n))


def second_coefficient(n):
    return -2.0 * np.cbrt(n) ** 2 * (1.0 + n) / (3.0 * np.cbrt(2.0 + n))


def asymptotic_split(m, n) -> float:
    """Two-term large-m expansion of the IM minimizer; no clamping."""
    return float(leading_coefficient(n) * np.cbrt(m) ** 2 + second_coefficient(n) * np.cbrt(m))


@dataclass(frozen=True)
class LeadingPolynomial:
    """P(p) = 4m^2 n p^2 + 2m^2 n^2 p^2 - 4mn p^3 - 4mn^2 p^3 - 4n p^4 + 2n^2 p^4 - 2p^5."""

    m: float
    n: float

    def coefficients(self) -> np.ndarray:
        """Highest power first, for ``numpy.polyval``."""
        m, n = self.m, self.n
        return np.array([
            -2.0,
            2.0 * n * n - 4.0 * n,
            -4.0 * m * n - 4.0 * m * n * n,
            4.0 * m * m * n + 2.0 * m * m * n * n,
            0.0,
            0.0,
        ])

    def reduced(self, p):
        """P(p) / p^2, a cubic with the same sign for p > 0."""
        m, n = self.m, self.n
        return (4.0 * m * m * n + 2.0 * m * m * n * n
                - (4.0 * m * n + 4.0 * m * n * n) * p
                + (2.0 * n * n - 4.0 * n) * p * p
                - 2.0 * p**3)

    def __call__(self, p):
        return np.polyval(self.coefficients(), p)


def leading_poly_root(m, n, xtol: float = 1e-6) -> float:
    """Bisection root of P on [1, m]."""
    if not m > n >= 1:
        raise ValueError(f"need m > n >= 1, got m={m}, n={n}")
    poly = LeadingPolynomial(float(m), float(n))
    lo, hi = 1.0, float(m)
    if not (poly.reduced(lo) > 0 > poly.reduced(hi)):
        raise RuntimeError(f"no sign change of the leading polynomial on [1, {m}]")
    return float(optimize.bisect(poly.reduced, lo, hi, xtol=xtol, maxiter=500))


def clamp_split(value: float, m: int, n: int) -> int:
    if m < n + 3:
        raise NoValidSplitError(f"m = {m} leaves no split in [n + 2, m - 1] for n = {n}")
    rounded = int(np.floor(value + 0.5))
    return min(max(rounded, n + 2), m - 1)


def recommend_integer_split(m: int, n: int, source: str = "formula") -> int:
    if m < n + 3:
        raise NoValidSplitError(f"m = {m} leaves no split in [n + 2, m - 1] for n = {n}")
    if source == "formula":
        value = asymptotic_split(m, n)
    elif source == "root":
        value = leading_poly_root(m, n)
    else:
        raise ValueError(f"unknown source {source!r}")
    return clamp_split(value, m, n)


def recommend(m: int, n: int, source: str = "formula", empirical=None) -> SplitRecommendation:
    root = leading_poly_root(m, n) if m > n else None
    return SplitRecommendation(
        m=m, n=n,
        p_formula=asymptotic_split(m, n),
        p_root=root,
        p_empirical=None if empirical is None else (int(empirical[0]), int(empirical[1])),
        p_final=recommend_integer_split(m, n, source),
    )
