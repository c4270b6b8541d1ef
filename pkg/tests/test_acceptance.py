"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Monte Carlo criteria use R = 500 replications with seed 1.
"""

import os

import numpy as np
import pytest
import scipy.linalg

from symfold.cli import main
from symfold.estimators import cooks_distance, make_slices, ols_fit, slice_moments
from symfold.io import load_csv
from symfold.numerics import DataSet, canonical_correlations
from symfold.pipelines import quadratic_direction_fit
from symfold.simulation import MethodConfig, ModelSpec, estimate, run_cell
from symfold.transforms import fold_predictors, local_mean_at_center

R = 500
SEED = 1
OZONE_ENV = "SYMFOLD_OZONE_CSV"

pytestmark = pytest.mark.slow


def mc_mean(model, n, p, method):
    cell = run_cell(ModelSpec.create(model, n, p, seed=SEED), method, R, MethodConfig())
    return cell.means


def check_targets(rows):
    """rows: (label, observed, target, tol) -> (all ok, detail string)."""
    parts, ok = [], True
    for label, got, want, tol in rows:
        good = abs(got - want) <= tol
        ok &= good
        parts.append(f"{label}={got:.3f}{'' if good else '!'}")
    return ok, " ".join(parts)


def check_bounds(rows):
    parts, ok = [], True
    for label, got, bound in rows:
        good = got <= bound
        ok &= good
        parts.append(f"{label}={got:.3f}{'' if good else '!'}")
    return ok, " ".join(parts)


def test_criterion1_model2_single_direction(report):
    rows = []
    for method, n, p, want, tol in [
        ("OLS", 500, 10, 0.210, 0.03),
        ("PHD", 500, 10, 0.987, 0.03),
        ("M1", 100, 10, 0.990, 0.03),
        ("M1-it", 100, 10, 0.994, 0.03),
        ("M2", 100, 10, 0.989, 0.03),
        ("M2-it", 200, 10, 0.997, 0.03),
        ("PHD", 100, 20, 0.792, 0.04),
        ("M1", 100, 20, 0.950, 0.04),
    ]:
        rows.append((f"{method}(n{n},p{p})", mc_mean(2, n, p, method)[0], want, tol))
    ok, detail = check_targets(rows)
    report("1 model-2 single direction", ok, detail)
    assert ok, detail


def test_criterion2_model3_robust(report):
    rows = [(m, mc_mean(3, 200, 20, m)[0], want, 0.04) for m, want in [
        ("PHD-rank", 0.947), ("RM1", 0.970), ("RM2", 0.961), ("M1-trim", 0.933), ("M2-trim", 0.874)]]
    ok1, d1 = check_targets(rows)
    ok2, d2 = check_bounds([("OLS", mc_mean(3, 200, 20, "OLS")[0], 0.02), ("RR", mc_mean(3, 200, 20, "RR")[0], 0.08)])
    ok = ok1 and ok2
    report("2 model-3 robust variants", ok, f"{d1} {d2}")
    assert ok, f"{d1} {d2}"


def test_criterion3_model3_inverse(report):
    bounds = [(f"{m}(n{n})", mc_mean(3, n, 20, m)[0], 0.12) for m in ("SIR", "CUME") for n in (100, 200)]
    targets = [
        ("CUVE(n100)", mc_mean(3, 100, 20, "CUVE")[0], 0.889, 0.03),
        ("CUVE(n200)", mc_mean(3, 200, 20, "CUVE")[0], 0.957, 0.03),
        ("CUVE-CUME-M2(n100)", mc_mean(3, 100, 20, "CUVE-CUME-M2")[0], 0.972, 0.02),
        ("CUVE-CUME-M2(n200)", mc_mean(3, 200, 20, "CUVE-CUME-M2")[0], 0.993, 0.02),
        ("SAVE-SIR-M2(n200)", mc_mean(3, 200, 20, "SAVE-SIR-M2")[0], 0.835, 0.06),
    ]
    ok1, d1 = check_bounds(bounds)
    ok2, d2 = check_targets(targets)
    ok = ok1 and ok2
    report("3 model-3 inverse regression", ok, f"{d1} {d2}")
    assert ok, f"{d1} {d2}"


def test_criterion4_model4_two_directions(report):
    m1 = mc_mean(4, 500, 10, "two-dir-ols-m1")
    m2 = mc_mean(4, 500, 10, "two-dir-ols-m2")
    ok1, d1 = check_targets([
        ("OLS,M1[1]", m1[0], 0.991, 0.03), ("OLS,M1[2]", m1[1], 0.934, 0.03),
        ("OLS,M2[1]", m2[0], 0.993, 0.03), ("OLS,M2[2]", m2[1], 0.935, 0.03),
    ])
    ok2, d2 = check_bounds([
        ("SIR[2]", mc_mean(4, 500, 10, "SIR")[1], 0.55), ("PHD[2]", mc_mean(4, 500, 10, "PHD")[1], 0.55)])
    ok = ok1 and ok2
    report("4 model-4 two directions", ok, f"{d1} {d2}")
    assert ok, f"{d1} {d2}"


def _angle(a, b):
    c = abs(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b))
    return np.degrees(np.arccos(min(c, 1.0)))


def test_criterion5_folding_identities(report):
    rng = np.random.default_rng(SEED)
    n, p = 50_000, 5
    A = rng.standard_normal((p, p))
    sigma = A @ A.T / p + 0.5 * np.eye(p)
    # unit diagonal so the absolute 0.02 tolerance is on a correlation scale
    d = 1 / np.sqrt(np.diag(sigma))
    sigma *= np.outer(d, d)
    beta = rng.standard_normal(p)
    v = beta / np.linalg.norm(beta)
    X = rng.multivariate_normal(np.zeros(p), sigma, size=n)
    u = X @ beta
    y = u ** 2 + 0.5 * rng.standard_normal(n)

    t = fold_predictors(X, v, np.zeros(p))
    tc = t - t.mean(axis=0)
    cov_ty = tc.T @ (y - y.mean()) / n
    mean_t = t.mean(axis=0)
    a_cov = _angle(cov_ty, sigma @ beta)
    a_mean = _angle(mean_t, sigma @ v)
    c4 = v @ mean_t / (v @ sigma @ v)
    sv = sigma @ v
    var_err = np.max(np.abs(tc.T @ tc / n - (sigma - c4 ** 2 * np.outer(sv, sv))))
    ok = a_cov < 2 and a_mean < 2 and var_err < 0.02
    detail = f"cov-angle={a_cov:.3f}deg mean-angle={a_mean:.3f}deg var-max-err={var_err:.4f}"
    report("5 folding identities (n=50000, p=5)", ok, detail)
    assert ok, detail


def test_criterion6_oracle_equivalences(report):
    rng = np.random.default_rng(SEED)
    errs = {}

    X = rng.standard_normal((60, 4))
    y = X @ [1.0, -2, 0.5, 0] + rng.standard_normal(60)
    data = DataSet(y, X)
    fit = ols_fit(data)
    A = np.column_stack([np.ones(60), X])
    coef = np.linalg.solve(A.T @ A, A.T @ y)
    errs["ols"] = np.max(np.abs(np.r_[fit.intercept, fit.slope] - coef))

    D = cooks_distance(fit, 5)
    s2 = fit.residuals @ fit.residuals / (60 - 5)
    loo = np.empty(60)
    for i in range(60):
        keep = np.arange(60) != i
        ci = np.linalg.lstsq(A[keep], y[keep], rcond=None)[0]
        d = A @ (coef - ci)
        loo[i] = d @ d / (5 * s2)
    errs["cook"] = np.max(np.abs(D - loo))

    yy = rng.standard_normal(41)
    XX = rng.standard_normal((41, 3))
    props, means, covs = slice_moments(XX, make_slices(yy, 2))
    order = np.argsort(yy, kind="stable")
    groups = [order[:21], order[21:]]
    e = 0.0
    for h, g in enumerate(groups):
        e = max(e, abs(props[h] - len(g) / 41), np.max(np.abs(means[h] - XX[g].mean(axis=0))),
                np.max(np.abs(covs[h] - np.cov(XX[g].T, bias=True))))
    errs["slices"] = e

    Xl = rng.standard_normal((80, 3))
    dl = DataSet(rng.standard_normal(80), Xl)
    vl = np.array([0.6, 0.0, -0.8])
    ctx = local_mean_at_center(dl, vl, 10)
    proj = Xl @ vl
    near = np.argsort(np.abs(proj - proj.mean()), kind="stable")[:10]
    errs["local_mean"] = abs(ctx.local_mean - dl.y[near].mean())

    e = 0.0
    for _ in range(5):
        P = rng.standard_normal((200, 3))
        Q = P[:, :2] @ rng.standard_normal((2, 2)) + rng.standard_normal((200, 2))
        rho = canonical_correlations(P, Q)
        S = np.cov(np.column_stack([P, Q]).T, bias=True)
        Spp, Sqq, Spq = S[:3, :3], S[3:, 3:], S[:3, 3:]
        M = Spq @ np.linalg.solve(Sqq, Spq.T)
        w = np.sort(scipy.linalg.eigh(M, Spp, eigvals_only=True))[::-1][:2]
        e = max(e, np.max(np.abs(rho - np.sqrt(np.clip(w, 0, 1)))))
    errs["cca"] = e

    ok = all(v < 1e-8 for v in errs.values())
    detail = " ".join(f"{k}={v:.1e}" for k, v in errs.items())
    report("6 oracle equivalences (1e-8)", ok, detail)
    assert ok, detail


def test_criterion7_determinism(report, tmp_path):
    outputs = []
    for i, threads in enumerate((1, 2, 3, 1)):
        out = tmp_path / f"run{i}.csv"
        code = main(["simulate", "--model", "3", "--n", "100,150", "--p", "20", "--method", "RM2,CUVE-CUME-M2-it",
                     "--reps", "12", "--seed", "11", "--threads", str(threads), "--output", str(out)])
        assert code == 0
        outputs.append(out.read_bytes())
    ok = all(o == outputs[0] for o in outputs)
    report("7 simulate determinism across thread counts", ok, "threads 1,2,3,1")
    assert ok


def test_criterion8_ozone(report, tmp_path):
    path = os.environ.get(OZONE_ENV)
    if not path or not os.path.exists(path):
        report("8 ozone quadratic fit", None, f"(set {OZONE_ENV} to a CSV with column O3)")
        pytest.skip(f"{OZONE_ENV} not set")
    loaded = load_csv(path, "O3")
    data = loaded.data.with_response(np.sqrt(loaded.data.y))
    dirs = estimate("two-dir-rr-m1", data, 2)
    fit = quadratic_direction_fit(data, dirs)
    pv = fit.p_values[1:]
    ok = 0.70 <= fit.r_squared <= 0.80 and bool(np.all(pv < 0.01))
    detail = f"R2={fit.r_squared:.4f} max-p={pv.max():.1e}"
    report("8 ozone quadratic fit", ok, detail)
    assert ok, detail
