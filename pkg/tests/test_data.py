"""Grids, constraint systems, empirical quantile rows, Wasserstein distance."""

import warnings

import numpy as np
import pytest

from frechetreg import (
    ConstraintSystem,
    DataError,
    QuantileMatrix,
    check_feasible,
    empirical_quantiles,
    make_grid,
    wasserstein2_sq,
    wasserstein2_sq_rows,
)


def test_grid_midpoints():
    g = make_grid(2)
    assert np.allclose(g.points, [0.25, 0.75])
    g = make_grid(4)
    assert np.allclose(g.points, [0.125, 0.375, 0.625, 0.875])
    g = make_grid(100)
    assert g.points[0] == pytest.approx(0.005)
    assert g.points[-1] == pytest.approx(0.995)
    assert g.m == 100


def test_grid_rejects_tiny_m():
    with pytest.raises(ValueError):
        make_grid(1)
    with pytest.raises(ValueError):
        make_grid(0)


def test_empirical_quantiles_linear_interpolation():
    qm = empirical_quantiles({"a": np.array([1.0, 2.0, 3.0, 4.0])}, make_grid(2))
    assert np.allclose(qm.values[0], [1.75, 3.25])


def test_empirical_quantiles_single_reading_constant_row():
    with pytest.warns(UserWarning, match="1 readings"):
        qm = empirical_quantiles({"a": np.array([5.0])}, make_grid(7))
    assert np.all(qm.values[0] == 5.0)


def test_empirical_quantiles_clips_into_box():
    # readings clipped to {40, 400} first, then interpolated on (0.25, 0.75)
    qm = empirical_quantiles(
        {"a": np.array([30.0, 500.0])}, make_grid(2), box=(40.0, 400.0)
    )
    assert np.allclose(qm.values[0], [130.0, 310.0])
    assert qm.box == (40.0, 400.0)
    qm.validate()


def test_empirical_quantiles_rows_sorted_by_subject():
    data = {
        "zeta": np.array([9.0, 9.0, 9.0]),
        "alpha": np.array([1.0, 1.0, 1.0]),
        "mid": np.array([4.0, 4.0, 4.0]),
    }
    qm = empirical_quantiles(data, make_grid(3))
    assert qm.subject_ids == ("alpha", "mid", "zeta")
    assert np.allclose(qm.values[:, 0], [1.0, 4.0, 9.0])


def test_empirical_quantiles_explicit_roster():
    data = {"a": np.array([1.0]), "b": np.array([2.0])}
    with pytest.warns(UserWarning):
        qm = empirical_quantiles(data, make_grid(2), subjects=["b", "a"])
    assert qm.subject_ids == ("b", "a")
    with pytest.raises(DataError), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        empirical_quantiles(data, make_grid(2), subjects=["a", "missing"])


def test_empirical_quantiles_rejects_bad_readings():
    with pytest.raises(DataError):
        empirical_quantiles({"a": np.array([])}, make_grid(2))
    with pytest.raises(DataError):
        empirical_quantiles({"a": np.array([1.0, np.inf])}, make_grid(2))


def test_empirical_quantiles_rows_nondecreasing_random():
    rng = np.random.default_rng(11)
    for trial in range(25):
        m = int(rng.integers(2, 12))
        data = {
            f"s{i}": rng.normal(size=rng.integers(1, 40)) for i in range(5)
        }
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # short samples are fine here
            qm = empirical_quantiles(data, make_grid(m))
        assert np.all(np.diff(qm.values, axis=1) >= 0.0)


def test_wasserstein_constant_shift():
    a = np.full(6, 2.0)
    b = np.full(6, 5.5)
    assert wasserstein2_sq(a, b) == pytest.approx(3.5**2)
    assert wasserstein2_sq(a, a) == 0.0


def test_wasserstein_hand_value():
    assert wasserstein2_sq(np.array([0.0, 1.0]), np.array([1.0, 0.0])) == 1.0


def test_wasserstein_rows_matches_scalar():
    rng = np.random.default_rng(3)
    Q = rng.normal(size=(8, 5))
    P = rng.normal(size=(8, 5))
    rows = wasserstein2_sq_rows(Q, P)
    for i in range(8):
        assert rows[i] == pytest.approx(wasserstein2_sq(Q[i], P[i]))


def test_wasserstein_shape_mismatch():
    with pytest.raises(ValueError):
        wasserstein2_sq(np.zeros(3), np.zeros(4))


def test_sqrt_wasserstein_triangle_inequality():
    rng = np.random.default_rng(19)
    for trial in range(200):
        m = int(rng.integers(2, 9))
        a, b, c = rng.normal(size=(3, m))
        dab = np.sqrt(wasserstein2_sq(a, b))
        dbc = np.sqrt(wasserstein2_sq(b, c))
        dac = np.sqrt(wasserstein2_sq(a, c))
        assert dac <= dab + dbc + 1e-12


def test_constraint_matrix_structure():
    for m in (2, 3, 7):
        cs = ConstraintSystem(m)
        A = cs.matrix()
        assert A.shape == (m, m + 1)
        assert np.allclose(A[:, 0], np.eye(m)[:, 0])
        assert np.allclose(A[:, -1], -np.eye(m)[:, -1])
        for c in range(1, m):
            e = np.zeros(m)
            e[c] = 1.0
            e[c - 1] = -1.0
            assert np.allclose(A[:, c], e)
        # columns telescope to zero
        assert np.allclose(A @ np.ones(m + 1), 0.0)


def test_gram_of_constraints_is_tridiagonal():
    for m in (2, 4, 10):
        cs = ConstraintSystem(m)
        G = cs.matrix().T @ cs.matrix()
        diag = np.diag(G)
        assert diag[0] == 1.0 and diag[-1] == 1.0
        assert np.all(diag[1:-1] == 2.0)
        assert np.all(np.diag(G, 1) == -1.0)
        off = G - np.diag(diag) - np.diag(np.diag(G, 1), 1) - np.diag(np.diag(G, -1), -1)
        assert np.all(off == 0.0)


def test_constraint_values_match_dense_product():
    rng = np.random.default_rng(5)
    for m in (2, 5, 20):
        cs = ConstraintSystem(m, b_lower=-1.0, b_upper=4.0)
        Q = rng.normal(size=(6, m))
        assert np.allclose(cs.constraint_values(Q), Q @ cs.matrix())


def test_check_feasible_monotone_vector():
    cs = ConstraintSystem(3)
    ok, violated = check_feasible(np.array([1.0, 2.0, 3.0]), cs)
    assert ok and violated.size == 0


def test_check_feasible_flags_decreasing_step():
    cs = ConstraintSystem(2)
    ok, violated = check_feasible(np.array([2.0, 1.0]), cs)
    assert not ok
    assert violated.tolist() == [2]


def test_check_feasible_flags_upper_box():
    cs = ConstraintSystem(2, b_lower=40.0, b_upper=55.0)
    ok, violated = check_feasible(np.array([50.0, 60.0]), cs)
    assert not ok
    assert violated.tolist() == [3]
    ok, violated = check_feasible(np.array([30.0, 60.0]), cs)
    assert violated.tolist() == [1, 3]


def test_check_feasible_respects_tolerance():
    cs = ConstraintSystem(2)
    ok, _ = check_feasible(np.array([1.0, 1.0 - 1e-12]), cs)
    assert ok


def test_constraint_system_rejects_bad_box():
    with pytest.raises(ValueError):
        ConstraintSystem(3, b_lower=2.0, b_upper=2.0)
    with pytest.raises(ValueError):
        ConstraintSystem(1)


def test_quantile_matrix_validate():
    qm = QuantileMatrix(grid=make_grid(3), values=np.array([[0.0, 1.0, 2.0]]))
    qm.validate()
    bad = QuantileMatrix(grid=make_grid(3), values=np.array([[0.0, 2.0, 1.0]]))
    with pytest.raises(DataError):
        bad.validate()
    boxed = QuantileMatrix(
        grid=make_grid(3), values=np.array([[0.0, 1.0, 2.0]]), box=(0.5, 99.0)
    )
    with pytest.raises(DataError):
        boxed.validate()


def test_quantile_matrix_shape_guard():
    with pytest.raises(ValueError):
        QuantileMatrix(grid=make_grid(3), values=np.zeros((2, 4)))
