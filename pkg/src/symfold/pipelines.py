"""Composite procedures built from the base estimators and the folding transforms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .errors import DegenerateProjection, ZeroSlope
from .estimators import (
    HUBER_TUNING,
    DirectionSet,
    Regressor,
    cume,
    cuve,
    make_regressor,
    ols_fit,
    phd_directions,
    rank_response,
    save_est,
    sir,
)
from .numerics import DataSet, normalize_direction, squared_projection_correlation
from .transforms import (
    DEFAULT_NEIGHBORS,
    local_mean_at_center,
    method1,
    method2,
    transform_predictors,
    transform_response,
)

DEFAULT_TOL = 0.001
DEFAULT_MAX_ITER = 10

Step = Callable[[DataSet, np.ndarray], np.ndarray]


@dataclass
class IterationLog:
    steps: list = field(default_factory=list)  # (iteration, direction, cor2 with previous)
    converged: bool = False
    reason: str = "max_iterations"
    degenerate: bool = False


def iterative_refine(
    data: DataSet,
    initial,
    step: Step,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[np.ndarray, IterationLog]:
    """Repeat ``b <- step(data, b)`` until successive projections agree.

    Exits once ``1 - cor^2(X b_old, X b_new) < tol`` or after ``max_iter``
    steps, and returns the newest iterate.  A degenerate projection stops
    the loop and returns the last valid iterate with ``log.degenerate`` set.
    """
    log = IterationLog()
    current = normalize_direction(initial)
    for i in range(1, max_iter + 1):
        nxt = step(data, current)
        try:
            r2 = squared_projection_correlation(data.X, current, nxt)
        except DegenerateProjection:
            log.degenerate = True
            log.reason = "degenerate_projection"
            return current, log
        log.steps.append((i, nxt, r2))
        current = nxt
        if 1 - r2 < tol:
            log.converged = True
            log.reason = "tolerance"
            break
    return current, log


def transformed_step(data: DataSet, v, estimate: Callable[[DataSet], np.ndarray], method: int, m: int = DEFAULT_NEIGHBORS):
    """Fold the data about ``v`` (response for method 1, predictors for method 2) and re-estimate."""
    ctx = local_mean_at_center(data, v, m)
    if method == 1:
        folded = data.with_response(transform_response(data, ctx))
    elif method == 2:
        folded = data.with_predictors(transform_predictors(data, ctx))
    else:
        raise ValueError(f"method must be 1 or 2, got {method!r}")
    return estimate(folded)


def initial_direction(data: DataSet, name: str, H: int | None = None) -> np.ndarray:
    if name == "phd":
        return phd_directions(data, 1).first
    if name == "phd-rank":
        return phd_directions(rank_response(data), 1).first
    if name == "save":
        return save_est(data, H, 1).first
    if name == "cuve":
        return cuve(data, 1).first
    raise ValueError(f"unknown initial estimator {name!r}")


def final_estimator(name: str, H: int | None = None, tuning: float = HUBER_TUNING, fraction: float = 0.10):
    """Map a final-stage name to ``DataSet -> Direction``."""
    if name in ("ols", "huber", "trim"):
        regressor = make_regressor(name, tuning, fraction)

        def estimate(d):
            slope = regressor(d).slope
            if np.linalg.norm(slope) < 1e-12:
                raise ZeroSlope("regression slope is numerically zero")
            return normalize_direction(slope)

        return estimate
    if name == "sir":
        return lambda d: sir(d, H, 1).first
    if name == "cume":
        return lambda d: cume(d, 1).first
    raise ValueError(f"unknown final estimator {name!r}")


def composed_transform_estimator(
    data: DataSet,
    init: str = "phd",
    final: str = "ols",
    method: int = 1,
    iterate: bool = False,
    H: int | None = None,
    m: int = DEFAULT_NEIGHBORS,
    tuning: float = HUBER_TUNING,
    fraction: float = 0.10,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> np.ndarray:
    """Initial direction from ``init``, then ``final`` on data folded about it."""
    v = initial_direction(data, init, H)
    estimate = final_estimator(final, H, tuning, fraction)

    def step(d, b):
        return transformed_step(d, b, estimate, method, m)

    if not iterate:
        return step(data, v)
    b, _ = iterative_refine(data, v, step, tol, max_iter)
    return b


def two_direction_ols(
    data: DataSet,
    method: int = 1,
    regressor: Regressor = ols_fit,
    m: int = DEFAULT_NEIGHBORS,
) -> DirectionSet:
    """Slope direction first, then a folded-data slope about the first PHD direction.

    Both weights are 1; the order is the construction order.
    """
    slope1 = regressor(data).slope
    if np.linalg.norm(slope1) < 1e-12:
        raise ZeroSlope("regression slope is numerically zero")
    v = phd_directions(data, 1).first
    if method not in (1, 2):
        raise ValueError(f"method must be 1 or 2, got {method!r}")
    fold = method1 if method == 1 else method2
    d2 = fold(data, v, regressor, m)
    dirs = np.column_stack([normalize_direction(slope1), d2])
    return DirectionSet(dirs, np.ones(2))


@dataclass(frozen=True)
class QuadraticFit:
    terms: list
    coef: np.ndarray
    std_errors: np.ndarray
    t_values: np.ndarray
    p_values: np.ndarray
    r_squared: float
    fitted: np.ndarray
    residuals: np.ndarray


def quadratic_direction_fit(data: DataSet, dirs) -> QuadraticFit:
    """Least squares of y on each projection u_k = X d_k and its square (no cross terms)."""
    dirs = np.asarray(dirs, dtype=float)
    if dirs.ndim == 1:
        dirs = dirs[:, None]
    U = data.X @ dirs
    K = U.shape[1]
    terms = ["intercept"] + [f"u{k + 1}" for k in range(K)] + [f"u{k + 1}^2" for k in range(K)]
    A = np.column_stack([np.ones(data.n), U, U ** 2])
    n, k = A.shape
    if n <= k:
        raise ValueError(f"quadratic fit needs more than {k} observations")
    coef, *_ = np.linalg.lstsq(A, data.y, rcond=None)
    fitted = A @ coef
    resid = data.y - fitted
    dof = n - k
    sigma2 = resid @ resid / dof
    cov = sigma2 * np.linalg.inv(A.T @ A)
    se = np.sqrt(np.diag(cov))
    t = coef / se
    pvals = 2 * stats.t.sf(np.abs(t), dof)
    yc = data.y - data.y.mean()
    r2 = 1 - (resid @ resid) / (yc @ yc)
    return QuadraticFit(terms, coef, se, t, pvals, float(r2), fitted, resid)
