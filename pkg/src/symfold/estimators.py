"""Base direction estimators.

Regression-type estimators (OLS, Huber M-estimation, Cook's distance
trimming) return a :class:`FitResult`; eigen-type estimators (PHD, SIR,
SAVE, CUME, CUVE) return a :class:`DirectionSet`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import partial
from typing import Callable

import numpy as np

from .errors import DegenerateScale, LeverageOne, SingularCovariance, SliceTooSmall
from .numerics import DataSet, inverse_sqrt, normalize_direction, ranks, sample_moments, sym_eigen

HUBER_TUNING = 1.345
MAD_CONSTANT = 1.4826
IRLS_TOL = 1e-8
IRLS_MAX_ITER = 50


@dataclass(frozen=True)
class FitResult:
    intercept: float
    slope: np.ndarray
    residuals: np.ndarray
    leverage: np.ndarray
    scale: float

    @property
    def direction(self) -> np.ndarray:
        return normalize_direction(self.slope)


@dataclass(frozen=True)
class DirectionSet:
    """Directions stored as the columns of a p x K matrix, with one weight each."""

    directions: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return self.directions.shape[1]

    def __getitem__(self, k) -> np.ndarray:
        return self.directions[:, k]

    @property
    def first(self) -> np.ndarray:
        return self.directions[:, 0]


@dataclass(frozen=True)
class SliceAssignment:
    slice_of: np.ndarray  # 1-based slice index per observation
    counts: np.ndarray

    @property
    def H(self) -> int:
        return len(self.counts)


Regressor = Callable[[DataSet], FitResult]


def default_slices(p: int, n: int | None = None) -> int:
    H = max(8, p + 3)
    return min(H, n) if n is not None else H


# -- regression -----------------------------------------------------------


def _check_rank(R: np.ndarray):
    s = np.linalg.svd(R, compute_uv=False)
    if s[0] == 0 or (s[-1] / s[0]) ** 2 <= 1e-10:
        raise SingularCovariance("predictor covariance matrix is singular")


def ols_fit(data: DataSet) -> FitResult:
    """Least squares with an intercept, via QR of the centered predictors."""
    X, y = data.X, data.y
    n, p = X.shape
    if n <= p + 1:
        raise ValueError(f"OLS needs n > p + 1 (n={n}, p={p})")
    xbar = X.mean(axis=0)
    ybar = y.mean()
    Q, R = np.linalg.qr(X - xbar)
    _check_rank(R)
    slope = np.linalg.solve(R, Q.T @ (y - ybar))
    intercept = ybar - xbar @ slope
    resid = y - intercept - X @ slope
    leverage = 1.0 / n + np.einsum("ij,ij->i", Q, Q)
    scale = np.sqrt(resid @ resid / (n - p - 1))
    return FitResult(float(intercept), slope, resid, leverage, float(scale))


def _mad_scale(r: np.ndarray) -> float:
    return MAD_CONSTANT * float(np.median(np.abs(r - np.median(r))))


def huber_m_fit(data: DataSet, tuning: float = HUBER_TUNING) -> FitResult:
    """Huber M-estimate of the regression by iteratively reweighted least squares.

    Starts from OLS; the residual scale is re-estimated by the normalized MAD
    at every iteration.  Stops when no coefficient moves by more than 1e-8,
    or after 50 iterations.
    """
    ols = ols_fit(data)
    X, y = data.X, data.y
    A = np.column_stack([np.ones(data.n), X])
    coef = np.concatenate([[ols.intercept], ols.slope])
    resid = ols.residuals
    for _ in range(IRLS_MAX_ITER):
        s = _mad_scale(resid)
        if s == 0.0:
            warnings.warn("median absolute deviation is zero; returning current fit", DegenerateScale)
            return FitResult(float(coef[0]), coef[1:], resid, ols.leverage, 0.0)
        absr = np.abs(resid)
        w = np.ones_like(absr)
        big = absr > tuning * s
        w[big] = tuning * s / absr[big]
        sw = np.sqrt(w)
        new, *_ = np.linalg.lstsq(A * sw[:, None], y * sw, rcond=None)
        delta = np.max(np.abs(new - coef))
        coef = new
        resid = y - A @ coef
        if delta < IRLS_TOL:
            break
    return FitResult(float(coef[0]), coef[1:], resid, ols.leverage, _mad_scale(resid))


def cooks_distance(fit: FitResult, p_params: int) -> np.ndarray:
    if not fit.scale > 0:
        raise ValueError("Cook's distance needs a positive residual scale")
    h = fit.leverage
    if np.any(h >= 1 - 1e-12):
        raise LeverageOne("an observation has leverage one")
    r = fit.residuals
    return (r ** 2 / (p_params * fit.scale ** 2)) * (h / (1 - h) ** 2)


def trim_order(distances: np.ndarray, count: int) -> np.ndarray:
    """Indices of the ``count`` largest distances; on ties the higher index goes first."""
    idx = np.arange(len(distances))
    order = np.lexsort((-idx, -distances))
    return np.sort(order[:count])


def trimmed_fit(data: DataSet, fraction: float = 0.10, base: Regressor = ols_fit) -> FitResult:
    """Refit after dropping the floor(fraction * n) most influential observations."""
    if not 0 <= fraction < 0.5:
        raise ValueError("trim fraction must lie in [0, 0.5)")
    fit = base(data)
    k = int(np.floor(fraction * data.n))
    if k == 0:
        return fit
    dropped = trim_order(cooks_distance(fit, data.p + 1), k)
    keep = np.setdiff1d(np.arange(data.n), dropped)
    return base(data.subset(keep))


def make_regressor(name: str, tuning: float = HUBER_TUNING, fraction: float = 0.10) -> Regressor:
    """Look up a regression routine by name: ``ols``, ``huber`` or ``trim``."""
    if name == "ols":
        return ols_fit
    if name == "huber":
        return partial(huber_m_fit, tuning=tuning)
    if name == "trim":
        return partial(trimmed_fit, fraction=fraction, base=ols_fit)
    raise ValueError(f"unknown regressor {name!r}")


def rank_response(data: DataSet) -> DataSet:
    return data.with_response(ranks(data.y))


# -- eigen-type estimators -------------------------------------------------


def _whitened(data: DataSet):
    mom = sample_moments(data)
    W = inverse_sqrt(mom.cov)
    Z = (data.X - mom.mean) @ W
    return W, Z


def _directions_from(target: np.ndarray, W: np.ndarray, q: int, by_magnitude=False) -> DirectionSet:
    p = target.shape[0]
    if not 1 <= q <= p:
        raise ValueError(f"q must be between 1 and p={p}")
    values, vectors = sym_eigen(target)
    if by_magnitude:
        order = np.argsort(-np.abs(values), kind="stable")
        values, vectors = values[order], vectors[:, order]
    dirs = W @ vectors[:, :q]
    dirs = np.column_stack([normalize_direction(d) for d in dirs.T])
    return DirectionSet(dirs, values[:q].copy())


def residual_hessian_matrix(data: DataSet) -> np.ndarray:
    """``(1/n) sum r_i (x_i - xbar)(x_i - xbar)^T`` with OLS residuals r_i."""
    r = ols_fit(data).residuals
    Xc = data.X - data.X.mean(axis=0)
    return (Xc * r[:, None]).T @ Xc / data.n


def phd_directions(data: DataSet, q: int = 1) -> DirectionSet:
    """Residual-based principal Hessian directions.

    Directions are ordered by the magnitude of their eigenvalue; ``weights``
    keeps the signed eigenvalues.
    """
    Srxx = residual_hessian_matrix(data)
    W = inverse_sqrt(sample_moments(data).cov)
    return _directions_from(W @ Srxx @ W, W, q, by_magnitude=True)


def make_slices(y, H: int) -> SliceAssignment:
    """Equal-count slicing of the sorted response; the first n mod H slices get one extra."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    if not 2 <= H <= n:
        raise ValueError(f"need 2 <= H <= n (H={H}, n={n})")
    base, extra = divmod(n, H)
    counts = np.full(H, base)
    counts[:extra] += 1
    order = np.argsort(y, kind="stable")
    slice_of = np.empty(n, dtype=int)
    slice_of[order] = np.repeat(np.arange(1, H + 1), counts)
    return SliceAssignment(slice_of, counts)


def slice_moments(X: np.ndarray, slices: SliceAssignment):
    """Per-slice proportions, means and covariances (divisor = slice count)."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    props = slices.counts / n
    means = np.zeros((slices.H, p))
    covs = np.zeros((slices.H, p, p))
    for h in range(slices.H):
        Xh = X[slices.slice_of == h + 1]
        means[h] = Xh.mean(axis=0)
        D = Xh - means[h]
        covs[h] = D.T @ D / len(Xh)
    return props, means, covs


def sir_matrix(data: DataSet, H: int | None = None):
    H = default_slices(data.p, data.n) if H is None else H
    W, Z = _whitened(data)
    props, means, _ = slice_moments(Z, make_slices(data.y, H))
    return W, (means * props[:, None]).T @ means


def sir(data: DataSet, H: int | None = None, q: int = 1) -> DirectionSet:
    """Sliced inverse regression; weights are the eigenvalues, descending."""
    W, V = sir_matrix(data, H)
    return _directions_from(V, W, q)


def save_matrix(data: DataSet, H: int | None = None):
    H = default_slices(data.p, data.n) if H is None else H
    slices = make_slices(data.y, H)
    if slices.counts.min() < 2:
        raise SliceTooSmall("every slice needs at least two observations")
    W, Z = _whitened(data)
    props, _, covs = slice_moments(Z, slices)
    D = np.eye(data.p) - covs
    M = np.einsum("h,hab,hbc->ac", props, D, D)
    return W, M


def save_est(data: DataSet, H: int | None = None, q: int = 1) -> DirectionSet:
    """Sliced average variance estimate."""
    W, M = save_matrix(data, H)
    return _directions_from(M, W, q)


def _cumulative(data: DataSet, second_moments: bool):
    """Cumulative slice moments at every observed response value.

    Returns the whitening matrix, counts ``#{i: y_i <= y_j}`` and the
    cumulative first (and optionally second) moments of z.
    """
    W, Z = _whitened(data)
    n = data.n
    order = np.argsort(data.y, kind="stable")
    cut = np.searchsorted(data.y[order], data.y, side="right")
    Zs = Z[order]
    csum = np.vstack([np.zeros(data.p), np.cumsum(Zs, axis=0)])
    m = csum[cut] / n
    if not second_moments:
        return W, cut, m, None
    outer = np.einsum("ia,ib->iab", Zs, Zs)
    c2 = np.concatenate([np.zeros((1, data.p, data.p)), np.cumsum(outer, axis=0)])
    return W, cut, m, c2[cut] / n


def cume(data: DataSet, q: int = 1) -> DirectionSet:
    """Cumulative mean estimation, every observed y used as a cut point."""
    W, _, m, _ = _cumulative(data, second_moments=False)
    return _directions_from(m.T @ m / data.n, W, q)


def cuve(data: DataSet, q: int = 1) -> DirectionSet:
    """Cumulative variance estimation."""
    n, p = data.n, data.p
    W, cut, m, second = _cumulative(data, second_moments=True)
    V = second - np.einsum("ja,jb->jab", m, m)
    A = (cut / n)[:, None, None] * np.eye(p) - V
    target = A.transpose(1, 0, 2).reshape(p, n * p) @ A.reshape(n * p, p) / n
    return _directions_from(target, W, q)
