"""Simulation models, the method registry, and the Monte Carlo runner.

Every replication draws from its own generator seeded by
``SeedSequence([seed, replication])``, so a cell gives identical results
whether its replications run serially or across worker processes.
"""

from __future__ import annotations

import logging
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import SymfoldError
from .estimators import (
    HUBER_TUNING,
    cume,
    cuve,
    huber_m_fit,
    make_regressor,
    ols_fit,
    phd_directions,
    rank_response,
    save_est,
    sir,
)
from .numerics import DataSet, canonical_correlations, normalize_direction, squared_projection_correlation
from .pipelines import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    composed_transform_estimator,
    two_direction_ols,
)
from .transforms import DEFAULT_NEIGHBORS

log = logging.getLogger(__name__)

THREADS_ENV = "SYMFOLD_THREADS"
UNRELIABLE_FAILURE_RATE = 0.05


# -- models ----------------------------------------------------------------


def _beta(p, head):
    b = np.zeros(p)
    b[: len(head)] = head
    return b


MODEL_DEFAULTS = {
    1: dict(p=10, noise_sd=0.05),
    2: dict(p=10, noise_sd=0.05),
    3: dict(p=20, noise_sd=0.05),
    4: dict(p=10, noise_sd=0.3),
}


@dataclass(frozen=True)
class ModelSpec:
    model: int
    n: int
    p: int
    beta_set: tuple
    noise_sd: float
    seed: int = 0

    @classmethod
    def create(cls, model: int, n: int, p: int | None = None, seed: int = 0, noise_sd: float | None = None):
        if model not in MODEL_DEFAULTS:
            raise ValueError(f"unknown model {model!r}; expected 1-4")
        p = MODEL_DEFAULTS[model]["p"] if p is None else int(p)
        noise_sd = MODEL_DEFAULTS[model]["noise_sd"] if noise_sd is None else float(noise_sd)
        if model == 4:
            if p < 4:
                raise ValueError("model 4 needs p >= 4")
            betas = (_beta(p, [1, 2, -3]), _beta(p, [1, 1, 0, -2]))
        else:
            if p < 2:
                raise ValueError(f"model {model} needs p >= 2")
            betas = (_beta(p, [1, -2]),)
        if n < 2:
            raise ValueError("n must be at least 2")
        return cls(model=model, n=int(n), p=p, beta_set=betas, noise_sd=noise_sd, seed=int(seed))


def replication_rng(seed: int, replication: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(replication)]))


def generate(spec: ModelSpec, replication: int = 0) -> tuple[DataSet, list]:
    """Draw one data set: standard normal predictors and errors."""
    rng = replication_rng(spec.seed, replication)
    X = rng.standard_normal((spec.n, spec.p))
    eps = rng.standard_normal(spec.n)
    u = [X @ b for b in spec.beta_set]
    if spec.model == 1:
        signal = np.sin(0.5 * u[0])
    elif spec.model == 2:
        signal = np.cos(0.5 * u[0])
    elif spec.model == 3:
        signal = 1.0 / np.abs(u[0])
    else:
        signal = np.sin(0.5 * u[0]) + np.cos(0.5 * u[1])
    y = signal + spec.noise_sd * eps
    return DataSet(y, X), list(spec.beta_set)


# -- methods ----------------------------------------------------------------


@dataclass(frozen=True)
class MethodConfig:
    H: int | None = None
    m: int = DEFAULT_NEIGHBORS
    tuning: float = HUBER_TUNING
    trim: float = 0.10
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER


def _slope(regressor_name):
    def run(data, cfg, q):
        fit = make_regressor(regressor_name, cfg.tuning, cfg.trim)(data)
        return normalize_direction(fit.slope)[:, None]

    return run


def _composed(init, final, method, iterate=False):
    def run(data, cfg, q):
        b = composed_transform_estimator(
            data, init=init, final=final, method=method, iterate=iterate,
            H=cfg.H, m=cfg.m, tuning=cfg.tuning, fraction=cfg.trim,
            tol=cfg.tol, max_iter=cfg.max_iter,
        )
        return b[:, None]

    return run


def _eigen(estimator, rank=False, sliced=False):
    def run(data, cfg, q):
        d = rank_response(data) if rank else data
        if sliced:
            return estimator(d, cfg.H, q).directions
        return estimator(d, q).directions

    return run


def _two_dir(method, robust):
    def run(data, cfg, q):
        reg = (lambda d: huber_m_fit(d, cfg.tuning)) if robust else ols_fit
        return two_direction_ols(data, method=method, regressor=reg, m=cfg.m).directions

    return run


@dataclass(frozen=True)
class Method:
    run: Callable
    max_directions: int = 1
    description: str = ""


METHODS: dict[str, Method] = {
    "OLS": Method(_slope("ols"), 1, "least squares slope"),
    "RR": Method(_slope("huber"), 1, "Huber M-estimation slope"),
    "OLS-trim": Method(_slope("trim"), 1, "least squares after Cook's distance trimming"),
    "PHD": Method(_eigen(phd_directions), None, "residual-based principal Hessian directions"),
    "PHD-rank": Method(_eigen(phd_directions, rank=True), None, "PHD on the ranked response"),
    "SIR": Method(_eigen(sir, sliced=True), None, "sliced inverse regression"),
    "SAVE": Method(_eigen(save_est, sliced=True), None, "sliced average variance estimate"),
    "CUME": Method(_eigen(cume), None, "cumulative mean estimation"),
    "CUVE": Method(_eigen(cuve), None, "cumulative variance estimation"),
    "M1": Method(_composed("phd", "ols", 1), 1, "OLS on folded response about PHD"),
    "M2": Method(_composed("phd", "ols", 2), 1, "OLS on folded predictors about PHD"),
    "M1-it": Method(_composed("phd", "ols", 1, True), 1, "iterated M1"),
    "M2-it": Method(_composed("phd", "ols", 2, True), 1, "iterated M2"),
    "M1-rank": Method(_composed("phd-rank", "ols", 1), 1, "M1 about rank-PHD"),
    "M2-rank": Method(_composed("phd-rank", "ols", 2), 1, "M2 about rank-PHD"),
    "RM1": Method(_composed("phd-rank", "huber", 1), 1, "Huber on folded response about rank-PHD"),
    "RM2": Method(_composed("phd-rank", "huber", 2), 1, "Huber on folded predictors about rank-PHD"),
    "M1-trim": Method(_composed("phd-rank", "trim", 1), 1, "trimmed OLS on folded response about rank-PHD"),
    "M2-trim": Method(_composed("phd-rank", "trim", 2), 1, "trimmed OLS on folded predictors about rank-PHD"),
    "SAVE-SIR-M1": Method(_composed("save", "sir", 1), 1, "SIR on response folded about SAVE"),
    "SAVE-SIR-M2": Method(_composed("save", "sir", 2), 1, "SIR on predictors folded about SAVE"),
    "SAVE-SIR-M2-it": Method(_composed("save", "sir", 2, True), 1, "iterated SAVE-SIR-M2"),
    "CUVE-CUME-M1": Method(_composed("cuve", "cume", 1), 1, "CUME on response folded about CUVE"),
    "CUVE-CUME-M2": Method(_composed("cuve", "cume", 2), 1, "CUME on predictors folded about CUVE"),
    "CUVE-CUME-M2-it": Method(_composed("cuve", "cume", 2, True), 1, "iterated CUVE-CUME-M2"),
    "two-dir-ols-m1": Method(_two_dir(1, False), 2, "OLS slope plus M1 second direction"),
    "two-dir-ols-m2": Method(_two_dir(2, False), 2, "OLS slope plus M2 second direction"),
    "two-dir-rr-m1": Method(_two_dir(1, True), 2, "Huber slope plus robust M1 second direction"),
    "two-dir-rr-m2": Method(_two_dir(2, True), 2, "Huber slope plus robust M2 second direction"),
}

PRESETS = {
    "all-table1": ["OLS", "PHD", "M1", "M1-it", "M2", "M2-it"],
    "all-table2": ["OLS", "RR", "PHD-rank", "M1-rank", "M2-rank", "RM1", "RM2", "M1-trim", "M2-trim"],
    "all-table3": ["SIR", "CUME", "SAVE", "CUVE", "SAVE-SIR-M2", "SAVE-SIR-M2-it", "CUVE-CUME-M2", "CUVE-CUME-M2-it"],
    "all-table4": ["SIR", "PHD", "two-dir-ols-m1", "two-dir-ols-m2"],
}


def resolve_methods(name: str) -> list[str]:
    if name in PRESETS:
        return list(PRESETS[name])
    names = [s.strip() for s in name.split(",") if s.strip()]
    unknown = [s for s in names if s not in METHODS]
    if unknown or not names:
        raise ValueError(f"unknown method {', '.join(unknown) or name!r}")
    return names


def estimate(method: str, data: DataSet, q: int = 1, config: MethodConfig | None = None) -> np.ndarray:
    """Run a registered method and return a p x q matrix of directions."""
    config = config or MethodConfig()
    spec = METHODS[method]
    if spec.max_directions is not None and q > spec.max_directions:
        raise ValueError(f"method {method} estimates at most {spec.max_directions} direction(s)")
    dirs = spec.run(data, config, q)
    return dirs[:, :q]


def score(data: DataSet, betas: list, dirs: np.ndarray) -> np.ndarray:
    """cor^2 for one true direction, canonical correlations for several."""
    if len(betas) == 1:
        return np.array([squared_projection_correlation(data.X, betas[0], dirs[:, 0])])
    true = data.X @ np.column_stack(betas)
    return canonical_correlations(true, data.X @ dirs)


# -- runner -----------------------------------------------------------------


@dataclass
class McSummary:
    method: str
    model: int
    n: int
    p: int
    means: np.ndarray
    sds: np.ndarray
    replications: int
    failures: int
    scores: np.ndarray = field(repr=False)  # replications x metrics, NaN rows for failures

    @property
    def single_replication(self) -> bool:
        return self.replications - self.failures == 1

    @property
    def unreliable(self) -> bool:
        return self.failures > UNRELIABLE_FAILURE_RATE * self.replications


def _one_replication(args):
    spec, method, config, rep = args
    data, betas = generate(spec, rep)
    q = len(betas)
    try:
        return rep, score(data, betas, estimate(method, data, q, config)), None
    except (SymfoldError, np.linalg.LinAlgError, ValueError) as exc:
        return rep, np.full(q, np.nan), f"{type(exc).__name__}: {exc}"


def default_workers() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_cell(
    spec: ModelSpec,
    method: str,
    replications: int,
    config: MethodConfig | None = None,
    workers: int = 1,
) -> McSummary:
    if replications < 1:
        raise ValueError("replications must be at least 1")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    config = config or MethodConfig()
    jobs = [(spec, method, config, r) for r in range(replications)]
    if workers > 1 and replications > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_replication, jobs, chunksize=max(1, replications // (4 * workers))))
    else:
        results = [_one_replication(j) for j in jobs]
    results.sort(key=lambda t: t[0])
    scores = np.vstack([r[1] for r in results])
    failures = sum(1 for r in results if r[2] is not None)
    for rep, _, err in results:
        if err is not None:
            log.debug("replication %d of %s failed: %s", rep, method, err)
    ok = scores[~np.isnan(scores).any(axis=1)]
    k = scores.shape[1]
    if len(ok) == 0:
        means = np.full(k, np.nan)
        sds = np.full(k, np.nan)
    else:
        means = ok.mean(axis=0)
        sds = ok.std(axis=0, ddof=1) if len(ok) > 1 else np.zeros(k)
    summary = McSummary(method, spec.model, spec.n, spec.p, means, sds, replications, failures, scores)
    if summary.unreliable:
        log.warning("%s (n=%d, p=%d): %d of %d replications failed", method, spec.n, spec.p, failures, replications)
    return summary


def table(cells: list[McSummary]) -> dict:
    """Group cells by method (rows) and (n, p) (columns).

    A later cell with the same (method, n, p) replaces an earlier one.
    """
    if not cells:
        raise ValueError("no cells to tabulate")
    rows: dict[str, dict] = {}
    columns: list[tuple[int, int]] = []
    for cell in cells:
        key = (cell.n, cell.p)
        row = rows.setdefault(cell.method, {})
        if key in row:
            warnings.warn(f"duplicate cell ({cell.method}, n={cell.n}, p={cell.p}); keeping the later one")
        row[key] = cell
        if key not in columns:
            columns.append(key)
    return {
        "columns": columns,
        "rows": [{"method": method, "cells": row} for method, row in rows.items()],
    }


def with_seed(spec: ModelSpec, seed: int) -> ModelSpec:
    return replace(spec, seed=int(seed))
