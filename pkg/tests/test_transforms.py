import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from symfold.estimators import huber_m_fit, ols_fit
from symfold.numerics import DataSet, normalize_direction, squared_projection_correlation
from symfold.simulation import ModelSpec, generate
from symfold.transforms import (
    TransformContext,
    fold_predictors,
    local_mean_at_center,
    method1,
    method2,
    transform_predictors,
    transform_response,
)


def grid_data():
    X = np.column_stack([np.arange(-2.0, 3.0), np.zeros(5)])
    return DataSet([4.0, 1.0, 0.0, 1.0, 4.0], X)


def test_local_mean_all_points(rng):
    data = DataSet(rng.standard_normal(12), rng.standard_normal((12, 3)))
    ctx = local_mean_at_center(data, [1.0, 0, 0], m=12)
    assert np.isclose(ctx.local_mean, data.y.mean())


def test_local_mean_exact_center():
    ctx = local_mean_at_center(grid_data(), [1.0, 0.0], m=1)
    assert ctx.local_mean == 0 and ctx.center == 0


def test_local_mean_sort_oracle():
    data, _ = generate(ModelSpec.create(2, 100, seed=4))
    v = normalize_direction(np.arange(1.0, 11.0))
    ctx = local_mean_at_center(data, v, 10)
    center = sum(data.X.mean(axis=0) * v)
    dist = sorted((abs(float(x @ v) - center), i) for i, x in enumerate(data.X))
    expected = np.mean([data.y[i] for _, i in dist[:10]])
    assert ctx.local_mean == pytest.approx(expected, abs=1e-15)


def test_local_mean_clamps_m():
    ctx = local_mean_at_center(DataSet([1.0, 2.0, 3.0], [[0.0], [1.0], [2.0]]), [1.0])
    assert ctx.m == 3 and ctx.local_mean == 2.0


def test_transform_response_branches():
    X = np.array([[-1.0], [0.0], [2.0]])
    data = DataSet([3.0, 1.0, 5.0], X)
    ctx = TransformContext(v=np.array([1.0]), center=0.0, local_mean=1.0, m=1)
    y_star = transform_response(data, ctx)
    assert y_star[2] == 5.0  # upper branch untouched
    assert y_star[0] == -1.0  # 2 * 1 - 3
    assert y_star[1] == 1.0  # equals the local mean: fixed point on the boundary


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=20), st.floats(-1e3, 1e3))
def test_lower_branch_involution(ys, local_mean):
    y = np.array(ys)
    X = -np.ones((len(y), 1)) - np.arange(len(y))[:, None]
    ctx = TransformContext(v=np.array([1.0]), center=0.0, local_mean=local_mean, m=1)
    once = transform_response(DataSet(y, X), ctx)
    twice = transform_response(DataSet(once, X), ctx)
    np.testing.assert_allclose(twice, y, rtol=1e-9, atol=1e-6)


def test_transform_predictors(rng):
    X = rng.standard_normal((25, 3))
    X = np.vstack([X, X.mean(axis=0)])  # a row exactly at the mean
    X[-1] = X[:-1].mean(axis=0)
    data = DataSet(rng.standard_normal(26), X)
    v = normalize_direction([1.0, 0.5, -0.2])
    ctx = local_mean_at_center(data, v)
    Xs = transform_predictors(data, ctx)
    xbar = X.mean(axis=0)
    upper = X @ v > ctx.center
    np.testing.assert_allclose(Xs[upper], (X - xbar)[upper])
    np.testing.assert_allclose(Xs[~upper], -(X - xbar)[~upper])
    np.testing.assert_allclose(fold_predictors(X, v, xbar), Xs)


def test_flipping_direction_flips_rows(rng):
    X = rng.standard_normal((30, 4))
    data = DataSet(rng.standard_normal(30), X)
    v = normalize_direction([1.0, 2.0, -1.0, 0.3])
    a = transform_predictors(data, local_mean_at_center(data, v))
    ctx = local_mean_at_center(data, v)
    flipped = TransformContext(v=-ctx.v, center=-ctx.center, local_mean=ctx.local_mean, m=ctx.m)
    np.testing.assert_allclose(transform_predictors(data, flipped), -a)


def test_boundary_row_is_zero():
    X = np.array([[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
    data = DataSet([1.0, 2.0, 3.0], X)
    Xs = transform_predictors(data, local_mean_at_center(data, [1.0, 0.0]))
    np.testing.assert_array_equal(Xs[1], 0.0)


def test_folded_model_two_curve():
    """With v along beta and no noise, (v'x*, y) lies on the folded cosine."""
    rng = np.random.default_rng(3)
    X = rng.standard_normal((400, 10))
    X -= X.mean(axis=0)
    beta = np.zeros(10)
    beta[:2] = [1, -2]
    data = DataSet(np.cos(0.5 * X @ beta), X)
    ctx = local_mean_at_center(data, beta)
    u = transform_predictors(data, ctx) @ ctx.v * np.linalg.norm(beta)
    assert np.all(u >= -1e-12)
    np.testing.assert_allclose(data.y, np.cos(0.5 * u), atol=1e-10)


def _oracle_scores(method, n, reps, **kw):
    out = []
    for s in range(reps):
        data, (beta,) = generate(ModelSpec.create(2, n, seed=s, noise_sd=0.0))
        out.append(squared_projection_correlation(data.X, beta, method(data, beta, **kw)))
    return np.array(out)


def test_method1_oracle_direction():
    assert _oracle_scores(method1, 500, 50).mean() > 0.999


def test_method2_oracle_direction():
    assert _oracle_scores(method2, 500, 50).mean() > 0.999


def test_method2_raw_covariance_form():
    # consistent, but reusing Var(x) shrinks the signal along v, so it needs larger n
    assert _oracle_scores(method2, 5000, 10, raw_covariance=True).mean() > 0.99


@pytest.mark.parametrize("model,regressor", [(2, ols_fit), (3, huber_m_fit)])
@pytest.mark.parametrize("method", [method1, method2])
def test_consistency_with_oracle_direction(model, regressor, method):
    scores = {}
    for n in (500, 2000):
        r2 = []
        for r in range(20):
            data, (beta,) = generate(ModelSpec.create(model, n, seed=100 + r))
            r2.append(squared_projection_correlation(data.X, beta, method(data, beta, regressor)))
        scores[n] = np.mean(r2)
    assert scores[2000] > 0.98
    assert 1 - scores[2000] <= 1 - scores[500] + 1e-3
