"""Weighted smoother, ridge fits in both modes, and feasible prediction."""

import numpy as np
import pytest

from frechetreg import (
    Design,
    QuantileMatrix,
    frechet_weights,
    make_grid,
    predict_quantiles,
    ridge_smoother,
)


def _monotone_response(rng, n, m, scale=10.0):
    # rows with wide increasing gaps stay feasible through smoothing
    base = np.linspace(0.0, scale, m)
    return base[None, :] + rng.normal(size=(n, 1))


def test_weights_uniform_at_the_mean():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(9, 4))
    d = Design.from_raw(X)
    s = frechet_weights(d, X.mean(axis=0))
    assert np.allclose(s, 1.0 / 9.0, atol=1e-12)


def test_weights_sum_to_one():
    rng = np.random.default_rng(1)
    for trial in range(20):
        n = int(rng.integers(2, 30))
        p = int(rng.integers(1, 8))
        d = Design.from_raw(rng.normal(size=(n, p)))
        s = frechet_weights(d, rng.normal(size=p))
        assert np.sum(s) == pytest.approx(1.0, abs=1e-10)


def test_weights_two_point_design():
    d = Design.from_raw(np.array([[-1.0], [1.0]]))
    s = frechet_weights(d, np.array([1.0]))
    assert np.allclose(s, [0.0, 1.0], atol=1e-12)


def test_weights_reject_bad_shape():
    d = Design.from_raw(np.zeros((4, 2)))
    with pytest.raises(ValueError):
        frechet_weights(d, np.zeros(3))


def test_design_centers_columns():
    rng = np.random.default_rng(2)
    X = rng.normal(loc=3.0, size=(11, 3))
    d = Design.from_raw(X)
    assert np.allclose(d.X.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(d.center(X), d.X)
    assert d.names == ("x1", "x2", "x3")
    with pytest.raises(ValueError):
        Design.from_raw(np.array([[1.0, np.nan]]))


def test_ridge_zero_lambda_returns_column_means():
    rng = np.random.default_rng(3)
    d = Design.from_raw(rng.normal(size=(7, 3)))
    Y = rng.normal(size=(7, 5))
    fit = ridge_smoother(d, Y, np.zeros(3))
    assert np.allclose(fit.Yhat, np.tile(Y.mean(axis=0), (7, 1)), atol=1e-12)


def test_ridge_large_lambda_approaches_unpenalized_fit():
    rng = np.random.default_rng(4)
    d = Design.from_raw(rng.normal(size=(10, 3)))
    Y = rng.normal(size=(10, 6))
    fit = ridge_smoother(d, Y, np.full(3, 1e6))
    proj = d.X @ np.linalg.pinv(d.X.T @ d.X) @ (d.X.T @ Y)
    want = Y.mean(axis=0) + proj
    assert np.allclose(fit.Yhat, want, atol=1e-4)


def test_ridge_modes_agree():
    rng = np.random.default_rng(5)
    # tall case runs in covariate space; check against the dense sample-space form
    d = Design.from_raw(rng.normal(size=(8, 3)))
    Y = rng.normal(size=(8, 4))
    lam = rng.uniform(0.5, 2.0, size=3)
    fit = ridge_smoother(d, Y, lam)
    assert fit.mode == "F"
    Xt = d.scaled()
    G = np.linalg.inv(Xt @ np.diag(lam) @ Xt.T + np.eye(8))
    assert np.allclose(fit.Yhat, Y.mean(axis=0) + Y - G @ Y, atol=1e-10)
    assert np.allclose(fit.H, G @ Xt, atol=1e-10)

    # wide case runs in sample space; check against the covariate-space form
    d = Design.from_raw(rng.normal(size=(3, 8)))
    Y = rng.normal(size=(3, 4))
    lam = rng.uniform(0.5, 2.0, size=8)
    fit = ridge_smoother(d, Y, lam)
    assert fit.mode == "G"
    Xt = d.scaled()
    F = np.linalg.inv(np.diag(lam) @ Xt.T @ Xt + np.eye(8))
    assert np.allclose(fit.Yhat, Y.mean(axis=0) + Xt @ F @ np.diag(lam) @ Xt.T @ Y, atol=1e-10)
    assert np.allclose(fit.H, Xt @ F, atol=1e-10)


def test_ridge_preserves_column_means():
    rng = np.random.default_rng(6)
    d = Design.from_raw(rng.normal(size=(12, 4)))
    Y = rng.normal(size=(12, 7))
    fit = ridge_smoother(d, Y, rng.uniform(0.0, 3.0, size=4))
    assert np.allclose(fit.Yhat.mean(axis=0), Y.mean(axis=0), atol=1e-10)


def test_ridge_snaps_negligible_lambda():
    rng = np.random.default_rng(7)
    d = Design.from_raw(rng.normal(size=(6, 2)))
    Y = rng.normal(size=(6, 3))
    snapped = ridge_smoother(d, Y, np.array([1.0, 1e-14]))
    exact = ridge_smoother(d, Y, np.array([1.0, 0.0]))
    assert np.array_equal(snapped.Yhat, exact.Yhat)
    assert snapped.lam[1] == 0.0


def test_ridge_rejects_negative_lambda():
    d = Design.from_raw(np.random.default_rng(8).normal(size=(5, 2)))
    Y = np.zeros((5, 3))
    with pytest.raises(ValueError):
        ridge_smoother(d, Y, np.array([1.0, -0.1]))


def test_predict_reproduces_training_rows():
    rng = np.random.default_rng(9)
    n, p, m = 10, 3, 6
    X = rng.normal(size=(n, p))
    d = Design.from_raw(X)
    Y = _monotone_response(rng, n, m)
    qm = QuantileMatrix(grid=make_grid(m), values=Y)
    lam = rng.uniform(0.5, 2.0, size=p)
    fit = ridge_smoother(d, Y, lam)
    pred = predict_quantiles(d, qm, X, lam=lam)
    # smoothed rows keep the wide gaps, so projection is a no-op
    assert np.allclose(pred.values, fit.Yhat, atol=1e-8)


def test_predict_at_mean_returns_average_row():
    rng = np.random.default_rng(10)
    n, p, m = 8, 2, 5
    X = rng.normal(size=(n, p))
    d = Design.from_raw(X)
    Y = _monotone_response(rng, n, m)
    qm = QuantileMatrix(grid=make_grid(m), values=Y)
    pred = predict_quantiles(d, qm, X.mean(axis=0)[None, :])
    assert np.allclose(pred.values[0], Y.mean(axis=0), atol=1e-8)


def test_predict_matches_weight_route():
    rng = np.random.default_rng(11)
    n, p, m = 9, 3, 4
    X = rng.normal(size=(n, p))
    d = Design.from_raw(X)
    Y = _monotone_response(rng, n, m, scale=20.0)
    qm = QuantileMatrix(grid=make_grid(m), values=Y)
    for trial in range(5):
        x_star = rng.normal(size=p) * 0.5
        s = frechet_weights(d, x_star)
        pred = predict_quantiles(d, qm, x_star[None, :])
        assert np.allclose(pred.values[0], s @ Y, atol=1e-8)


def test_predict_rows_are_feasible():
    rng = np.random.default_rng(12)
    n, p, m = 15, 4, 10
    X = rng.normal(size=(n, p))
    d = Design.from_raw(X)
    Y = np.sort(rng.normal(size=(n, m)), axis=1) + 5.0
    qm = QuantileMatrix(grid=make_grid(m), values=Y, box=(0.0, 12.0))
    X_new = rng.normal(size=(6, p)) * 2.0
    pred = predict_quantiles(d, qm, X_new, lam=rng.uniform(0, 4, size=p))
    pred.validate()
    assert pred.box == (0.0, 12.0)
    assert np.all(np.diff(pred.values, axis=1) >= -1e-9)
