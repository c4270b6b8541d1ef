"""Response and predictor folding about an initial direction.

Given a direction ``v`` (typically a PHD estimate), observations with
``v'x_i <= v'xbar`` are folded:

* response folding reflects ``y_i`` about a local estimate of
  ``E(Y | v'x = v'xbar)``;
* predictor folding flips the sign of the centered predictor row.

Either fold removes even symmetry about the center so that slope-type
estimators (OLS, M-estimators, SIR, CUME) can recover the direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ZeroSlope
from .estimators import Regressor, ols_fit
from .numerics import DataSet, inverse_sqrt, normalize_direction, sample_moments

DEFAULT_NEIGHBORS = 10


@dataclass(frozen=True)
class TransformContext:
    v: np.ndarray
    center: float
    local_mean: float
    m: int


def local_mean_at_center(data: DataSet, v, m: int = DEFAULT_NEIGHBORS) -> TransformContext:
    """Mean response of the m observations whose projection is closest to the center.

    ``m`` is clamped to n.  Distance ties are resolved in favour of the lower index.
    """
    v = normalize_direction(v)
    m = min(int(m), data.n)
    if m < 1:
        raise ValueError("m must be at least 1")
    proj = data.X @ v
    center = float(data.X.mean(axis=0) @ v)
    nearest = np.argsort(np.abs(proj - center), kind="stable")[:m]
    return TransformContext(v=v, center=center, local_mean=float(data.y[nearest].mean()), m=m)


def lower_branch(data: DataSet, ctx: TransformContext) -> np.ndarray:
    """Boolean mask of observations with v'x_i <= center."""
    return data.X @ ctx.v <= ctx.center


def transform_response(data: DataSet, ctx: TransformContext) -> np.ndarray:
    y = data.y.copy()
    low = lower_branch(data, ctx)
    y[low] = 2 * ctx.local_mean - y[low]
    return y


def fold_predictors(X, v, mu) -> np.ndarray:
    """``sign(v'(x_i - mu)) (x_i - mu)`` with sign(0) taken as -1."""
    Xc = np.asarray(X, dtype=float) - np.asarray(mu, dtype=float)
    s = np.where(Xc @ np.asarray(v, dtype=float) > 0, 1.0, -1.0)
    return Xc * s[:, None]


def transform_predictors(data: DataSet, ctx: TransformContext) -> np.ndarray:
    Xc = data.X - data.X.mean(axis=0)
    s = np.where(data.X @ ctx.v - ctx.center > 0, 1.0, -1.0)
    return Xc * s[:, None]


def _slope_direction(slope) -> np.ndarray:
    if np.linalg.norm(slope) < 1e-12:
        raise ZeroSlope("regression slope is numerically zero")
    return normalize_direction(slope)


def method1(data: DataSet, v, regressor: Regressor = ols_fit, m: int = DEFAULT_NEIGHBORS) -> np.ndarray:
    """Regress the folded response on the raw predictors."""
    ctx = local_mean_at_center(data, v, m)
    fit = regressor(data.with_response(transform_response(data, ctx)))
    return _slope_direction(fit.slope)


def method2(
    data: DataSet,
    v,
    regressor: Regressor = ols_fit,
    m: int = DEFAULT_NEIGHBORS,
    raw_covariance: bool = False,
) -> np.ndarray:
    """Regress the raw response on the sign-folded predictors.

    With ``raw_covariance=True`` the slope is ``S_x^{-1} Cov(x*, y)``, using
    the covariance of the original predictors instead of the folded ones
    (``regressor`` is ignored in that case).
    """
    ctx = local_mean_at_center(data, v, m)
    Xs = transform_predictors(data, ctx)
    if raw_covariance:
        mom = sample_moments(data)
        cov_sy = (Xs - Xs.mean(axis=0)).T @ (data.y - data.y.mean()) / data.n
        W = inverse_sqrt(mom.cov)
        return _slope_direction(W @ W @ cov_sy)
    fit = regressor(data.with_predictors(Xs))
    return _slope_direction(fit.slope)
