"""Ridge fits and held-out error, the model whose split is being sized."""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import InvalidSplitError, SingularDesignError


@dataclass(frozen=True)
class RidgeFit:
    coefficients: np.ndarray
    alpha: float
    train_rows: int


@dataclass(frozen=True)
class ModelParams:
    """True coefficients and noise behind a simulated response."""

    b: np.ndarray
    c: float
    sigma: float
    epsilon: np.ndarray

    def response(self, x: np.ndarray) -> np.ndarray:
        return x @ self.b + self.sigma * self.epsilon


def ridge_fit(x_train, y_train, alpha: float) -> RidgeFit:
    """Solve (X^T X + alpha I) b = X^T y by Cholesky on the n x n Gram matrix."""
    x = np.atleast_2d(np.asarray(x_train, dtype=float))
    y = np.asarray(y_train, dtype=float)
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if y.shape != (x.shape[0],):
        raise ValueError(f"y has shape {y.shape}, expected ({x.shape[0]},)")
    n = x.shape[1]
    gram = x.T @ x + alpha * np.eye(n)
    try:
        factor = linalg.cho_factor(gram, lower=True, check_finite=False)
    except linalg.LinAlgError:
        raise SingularDesignError("Gram matrix is not positive definite") from None
    if alpha == 0:
        d = np.diag(factor[0])
        if d.min() <= np.sqrt(np.finfo(float).eps) * d.max():
            raise SingularDesignError("design is numerically rank deficient at alpha = 0")
    coef = linalg.cho_solve(factor, x.T @ y, check_finite=False)
    return RidgeFit(coefficients=coef, alpha=float(alpha), train_rows=x.shape[0])


def test_mean_squared_error(x_test, y_test, fit: RidgeFit) -> float:
    x = np.atleast_2d(np.asarray(x_test, dtype=float))
    y = np.asarray(y_test, dtype=float)
    if y.size == 0 or x.shape[0] == 0:
        raise InvalidSplitError("test block is empty")
    resid = x @ fit.coefficients - y
    return float(resid @ resid) / y.size


# pytest would otherwise try to collect this as a test
test_mean_squared_error.__test__ = False
