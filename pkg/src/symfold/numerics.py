"""Dense numeric primitives shared by every estimator.

All moments use the divisor ``n``. Directions are unit vectors whose
largest-magnitude component is positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import DegenerateProjection, NonConvergence, NonFinite, SingularCovariance

Direction = np.ndarray


@dataclass(frozen=True)
class DataSet:
    """Response vector ``y`` (length n) and predictor matrix ``X`` (n x p)."""

    y: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if y.ndim != 1 or X.ndim != 2:
            raise ValueError("y must be 1-d and X 2-d")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"y has {y.shape[0]} rows but X has {X.shape[0]}")
        if y.shape[0] < 2 or X.shape[1] < 1:
            raise ValueError("need n >= 2 observations and p >= 1 predictors")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise NonFinite("data contains non-finite entries")
        y.setflags(write=False)
        X.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def with_response(self, y) -> "DataSet":
        return DataSet(y, self.X)

    def with_predictors(self, X) -> "DataSet":
        return DataSet(self.y, X)

    def subset(self, index) -> "DataSet":
        return DataSet(self.y[index], self.X[index])


@dataclass(frozen=True)
class MomentSet:
    mean: np.ndarray
    cov: np.ndarray
    cov_xy: np.ndarray
    y_mean: float


def normalize_direction(v) -> Direction:
    """Scale ``v`` to unit length and flip it so its largest entry is positive."""
    v = np.asarray(v, dtype=float).ravel()
    norm = np.linalg.norm(v)
    if not np.isfinite(norm) or norm == 0.0:
        raise ValueError("cannot normalize a zero or non-finite vector")
    v = v / norm
    # argmax returns the first index on ties
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return v


def sample_moments(data: DataSet) -> MomentSet:
    X, y = data.X, data.y
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise NonFinite("data contains non-finite entries")
    n = data.n
    mean = X.mean(axis=0)
    y_mean = float(y.mean())
    Xc = X - mean
    cov = Xc.T @ Xc / n
    cov = (cov + cov.T) / 2
    cov_xy = Xc.T @ (y - y_mean) / n
    return MomentSet(mean=mean, cov=cov, cov_xy=cov_xy, y_mean=y_mean)


def sym_eigen(M) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix, eigenvalues descending.

    Each eigenvector column follows the direction sign convention.
    """
    M = np.asarray(M, dtype=float)
    M = (M + M.T) / 2
    try:
        values, vectors = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(str(exc)) from exc
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return values, vectors * signs


def inverse_sqrt(M) -> np.ndarray:
    """Symmetric inverse square root ``V diag(lambda^-1/2) V^T``."""
    values, vectors = sym_eigen(M)
    top = values.max()
    if not top > 0 or values.min() <= 1e-10 * top:
        raise SingularCovariance(
            f"matrix is singular or not positive definite (eigenvalues {values.min():.3g}..{top:.3g})"
        )
    W = (vectors / np.sqrt(values)) @ vectors.T
    return (W + W.T) / 2


def _pearson_sq(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    saa = a @ a
    sbb = b @ b
    if saa <= 0 or sbb <= 0:
        raise DegenerateProjection("projection has zero variance")
    r2 = (a @ b) ** 2 / (saa * sbb)
    return float(min(max(r2, 0.0), 1.0))


def squared_projection_correlation(X, b_true, b_hat) -> float:
    """Squared Pearson correlation between ``X @ b_true`` and ``X @ b_hat``."""
    X = np.asarray(X, dtype=float)
    return _pearson_sq(X @ np.asarray(b_true, dtype=float), X @ np.asarray(b_hat, dtype=float))


def canonical_correlations(A, B) -> np.ndarray:
    """Canonical correlations between the centered column spaces of A and B."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if B.ndim == 1:
        B = B[:, None]
    n = A.shape[0]
    Ac = A - A.mean(axis=0)
    Bc = B - B.mean(axis=0)
    Wa = inverse_sqrt(Ac.T @ Ac / n)
    Wb = inverse_sqrt(Bc.T @ Bc / n)
    cross = Wa @ (Ac.T @ Bc / n) @ Wb
    s = np.linalg.svd(cross, compute_uv=False)
    return np.clip(s, 0.0, 1.0)


def ranks(y) -> np.ndarray:
    """Ranks starting at 1, ties get the average rank."""
    return rankdata(np.asarray(y, dtype=float), method="average")
