"""Ridge regression from control signals to glove sensors, with fold-wise
selection of the regularisation constant."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ArgumentError, NumericError, UndefinedMetricError
from .tensor import lstsq

__all__ = ["RidgeModel", "k_grid", "ridge_fit", "cv_optimize_k", "contiguous_folds", "r_squared"]

N_FOLDS = 10


@dataclass
class RidgeModel:
    beta: np.ndarray
    k: float
    intercept: bool = True
    sensor_id: int = 0

    def predict(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.intercept:
            return self.beta[0] + x @ self.beta[1:]
        return x @ self.beta

    def to_dict(self):
        return {"beta": self.beta.tolist(), "k": self.k, "intercept": self.intercept,
                "sensor_id": self.sensor_id}


def k_grid(k_min=1e-4, k_max=1e4, n=25):
    """Log-spaced candidate regularisation constants."""
    if not (0 < k_min <= k_max) or n < 1:
        raise ArgumentError(f"invalid k grid ({k_min}, {k_max}, {n})")
    return np.logspace(np.log10(k_min), np.log10(k_max), int(n))


def _design(x, intercept):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if intercept:
        x = np.column_stack([np.ones(x.shape[0]), x])
    return x


def _solve(xd, y, k, intercept):
    gram = xd.T @ xd
    rhs = xd.T @ y
    pen = np.full(xd.shape[1], float(k))
    if intercept:
        pen[0] = 0.0
    a = gram + np.diag(pen)
    try:
        return scipy.linalg.solve(a, rhs, assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        return lstsq(xd, y) if k == 0 else lstsq(a, rhs)


def ridge_fit(x, y, k, intercept=True, sensor_id=0):
    """Ridge coefficients solving ``(X^T X + k I) beta = X^T y``.

    With ``intercept`` a leading column of ones is added and left out of the
    penalty. A singular system (``k = 0`` with collinear predictors) falls
    back to the minimum-norm least-squares solution.
    """
    xd = _design(x, intercept)
    y = np.asarray(y, dtype=np.float64)
    if y.shape[0] != xd.shape[0]:
        raise ArgumentError(f"{xd.shape[0]} predictor rows but {y.shape[0]} responses")
    if not k >= 0:
        raise ArgumentError(f"k must be >= 0, got {k!r}")
    if not (np.all(np.isfinite(xd)) and np.all(np.isfinite(y))):
        raise NumericError("ridge input contains non-finite entries")
    return RidgeModel(beta=_solve(xd, y, k, intercept), k=float(k), intercept=intercept,
                      sensor_id=sensor_id)


def contiguous_folds(n, n_folds=N_FOLDS):
    """Row-index bounds of ``n_folds`` contiguous, time-ordered folds."""
    if n < n_folds:
        raise ArgumentError(f"need at least {n_folds} samples for {n_folds}-fold CV, got {n}")
    edges = np.linspace(0, n, n_folds + 1).round().astype(int)
    return list(zip(edges[:-1], edges[1:]))


def _r2_columns(y, yhat):
    ss_tot = np.sum((y - y.mean(axis=0)) ** 2, axis=0)
    ss_res = np.sum((y - yhat) ** 2, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(ss_tot > 0, 1.0 - ss_res / ss_tot, np.nan)


def cv_scores(x, y, grid, intercept=True, n_folds=N_FOLDS):
    """Mean out-of-fold R^2 for every k in ``grid``.

    ``y`` may hold several responses as columns; the result then has shape
    ``(len(grid), n_responses)``. Folds whose held-out response is constant
    are skipped for that response.
    """
    xd = _design(x, intercept)
    y = np.asarray(y, dtype=np.float64)
    squeeze = y.ndim == 1
    y2 = y[:, None] if squeeze else y
    folds = contiguous_folds(xd.shape[0], n_folds)
    scores = np.empty((len(grid), n_folds, y2.shape[1]))
    for f, (lo, hi) in enumerate(folds):
        train = np.r_[0:lo, hi:xd.shape[0]]
        for i, k in enumerate(grid):
            beta = _solve(xd[train], y2[train], k, intercept)
            scores[i, f] = _r2_columns(y2[lo:hi], xd[lo:hi] @ beta)
    with np.errstate(invalid="ignore"):
        mean = np.nanmean(scores, axis=1) if np.isnan(scores).any() else scores.mean(axis=1)
    return mean[:, 0] if squeeze else mean


def _pick(scores, grid):
    # first maximum of the ascending grid -> smaller k on ties
    s = np.where(np.isnan(scores), -np.inf, scores)
    return float(grid[int(np.argmax(s))])


def cv_optimize_k(x, y, grid=None, intercept=True, n_folds=N_FOLDS):
    """Regularisation constant maximising mean out-of-fold R^2.

    The training rows are split into ``n_folds`` contiguous folds by row
    index. Ties go to the smaller k. With a 2-D ``y`` one k per column is
    returned.
    """
    grid = k_grid() if grid is None else np.sort(np.asarray(grid, dtype=np.float64))
    scores = cv_scores(x, y, grid, intercept, n_folds)
    if scores.ndim == 1:
        return _pick(scores, grid)
    return np.array([_pick(scores[:, j], grid) for j in range(scores.shape[1])])


def r_squared(y_true, y_pred):
    """Coefficient of determination ``1 - SS_res / SS_tot``."""
    y_true = np.asarray(y_true, dtype=np.float64).ravel()
    y_pred = np.asarray(y_pred, dtype=np.float64).ravel()
    if y_true.shape != y_pred.shape:
        raise ArgumentError(f"length mismatch: {y_true.size} vs {y_pred.size}")
    if y_true.size < 2:
        raise ArgumentError("r_squared needs at least 2 samples")
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        raise UndefinedMetricError("R^2 is undefined for a constant target")
    return 1.0 - float(np.sum((y_true - y_pred) ** 2)) / ss_tot
