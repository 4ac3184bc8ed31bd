"""Geodesic descent, the coordinate baseline, and the shared path driver."""

import math
import warnings

import numpy as np
import pytest

from frechetreg import (
    ConstraintSystem,
    Design,
    SolverOptions,
    gsd_fit,
    mcd_fit,
    solution_path,
    sparsity_objective,
)
from frechetreg.objective import SparsityProblem
from frechetreg.simulate import SimConfigA, gen_experiment_a
from frechetreg.solvers import rotate, select_angle, tangent_direction


def _instance(seed, n=20, p=5, m=12):
    d, qm = gen_experiment_a(SimConfigA(n=n, p=p, m=m), seed=seed)
    return d, qm.values, ConstraintSystem(m)


class _FlatCurvature:
    """Stand-in evaluation with a fixed curvature, for the angle rule."""

    def __init__(self, g2):
        self.g2 = g2

    def curvature_along(self, gamma, v_unit):
        return self.g2


def test_tangent_direction_is_orthogonal():
    rng = np.random.default_rng(0)
    for trial in range(30):
        p = int(rng.integers(2, 9))
        gamma = rng.uniform(0.1, 2.0, size=p)
        v = tangent_direction(gamma, rng.normal(size=p))
        assert abs(gamma @ v) <= 1e-10 * np.linalg.norm(gamma) * (1 + np.linalg.norm(v))


def test_tangent_direction_of_radial_gradient_vanishes():
    gamma = np.array([1.0, 2.0, 2.0])
    v = tangent_direction(gamma, 3.5 * gamma)
    assert np.allclose(v, 0.0, atol=1e-12)
    with pytest.raises(ValueError):
        tangent_direction(np.zeros(3), np.ones(3))


def test_rotate_identity_at_zero_angle():
    gamma = np.array([0.6, 0.8, 0.0])
    v = np.array([0.0, 0.0, 1.0])
    assert np.allclose(rotate(gamma, v, 0.0), gamma)


def test_rotate_quarter_turn_lands_on_direction():
    gamma = np.array([2.0, 0.0])
    v = np.array([0.0, -3.0])
    out = rotate(gamma, v, math.pi / 2)
    # radius 2 toward v, absolute value folds the sign back up
    assert np.allclose(out, [0.0, 2.0], atol=1e-12)
    raw = rotate(gamma, v, math.pi / 2, take_abs=False)
    assert np.allclose(raw, [0.0, -2.0], atol=1e-12)


def test_rotate_preserves_radius():
    rng = np.random.default_rng(1)
    for trial in range(50):
        p = int(rng.integers(2, 10))
        gamma = rng.uniform(0.05, 1.5, size=p)
        v = tangent_direction(gamma, rng.normal(size=p))
        if np.linalg.norm(v) == 0.0:
            continue
        theta = float(rng.uniform(0, math.pi / 4))
        out = rotate(gamma, v, theta)
        assert np.linalg.norm(out) == pytest.approx(np.linalg.norm(gamma), abs=1e-12)


def test_rotate_matches_rotation_matrix():
    rng = np.random.default_rng(2)
    for trial in range(20):
        p = int(rng.integers(2, 8))
        gamma = rng.uniform(0.1, 1.2, size=p)
        v = tangent_direction(gamma, rng.normal(size=p))
        vn = np.linalg.norm(v)
        if vn == 0.0:
            continue
        u_hat = gamma / np.linalg.norm(gamma)
        v_hat = v / vn
        theta = float(rng.uniform(0, math.pi))
        R = (
            np.eye(p)
            + math.sin(theta) * (np.outer(v_hat, u_hat) - np.outer(u_hat, v_hat))
            + (math.cos(theta) - 1.0) * (np.outer(u_hat, u_hat) + np.outer(v_hat, v_hat))
        )
        assert np.allclose(R.T @ R, np.eye(p), atol=1e-10)
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-10)
        z = rng.normal(size=p)
        z -= u_hat * (u_hat @ z) + v_hat * (v_hat @ z)
        assert np.allclose(R @ z, z, atol=1e-10)
        assert np.allclose(R @ gamma, rotate(gamma, v, theta, take_abs=False), atol=1e-10)


def test_angle_rule_interior_and_cap():
    gamma = np.array([1.0, 0.0])
    v = np.array([0.0, 0.5])  # g1 = -0.5 on the unit sphere
    assert select_angle(gamma, v, _FlatCurvature(10.0)) == pytest.approx(0.05)
    # |g1 / g2| = 10 exceeds the cap
    assert select_angle(gamma, v, _FlatCurvature(0.05)) == pytest.approx(math.pi / 4)
    # flat or concave curvature falls back to the cap
    assert select_angle(gamma, v, _FlatCurvature(0.0)) == pytest.approx(math.pi / 4)
    assert select_angle(gamma, v, _FlatCurvature(-3.0)) == pytest.approx(math.pi / 4)
    assert select_angle(gamma, np.zeros(2), _FlatCurvature(1.0)) == 0.0
    tighter = SolverOptions(theta_max=0.1, damp_alpha=0.5)
    assert select_angle(gamma, v, _FlatCurvature(10.0), tighter) == pytest.approx(0.025)


def test_angle_rule_on_a_real_instance():
    d, Y, cs = _instance(3, n=10, p=4, m=8)
    problem = SparsityProblem(d, Y, cs, SolverOptions())
    gamma = np.sqrt(np.full(4, 0.5))
    ev = problem.evaluate(gamma * gamma)
    v = tangent_direction(gamma, ev.sphere_grad(gamma))
    vn = float(np.linalg.norm(v))
    g1 = -math.sqrt(2.0) * vn
    g2 = ev.curvature_along(gamma, v / vn)
    want = min(abs(g1 / g2), math.pi / 4) if g2 > 0 else math.pi / 4
    assert select_angle(gamma, v, ev) == pytest.approx(want, rel=1e-12)


def test_gsd_identical_rows_converges_immediately():
    rng = np.random.default_rng(4)
    d = Design.from_raw(rng.normal(size=(9, 3)))
    Y = np.tile(np.linspace(0.0, 4.0, 6), (9, 1))
    lam, diag = gsd_fit(d, Y, ConstraintSystem(6), tau=1.5)
    assert diag.converged
    assert diag.f_value == pytest.approx(0.0, abs=1e-18)
    assert np.sum(lam) == pytest.approx(1.5, rel=1e-12)


def test_gsd_improves_on_uniform_start():
    for seed in range(5):
        d, Y, cs = _instance(seed)
        tau = 3.0
        f0 = sparsity_objective(d, Y, np.full(5, tau / 5), cs)
        lam, diag = gsd_fit(d, Y, cs, tau)
        assert diag.f_value <= f0 + 1e-8


def test_gsd_output_is_on_the_simplex():
    rng = np.random.default_rng(5)
    for seed in range(8):
        d, Y, cs = _instance(seed, n=15, p=6, m=9)
        tau = float(rng.uniform(0.5, 8.0))
        lam, _ = gsd_fit(d, Y, cs, tau)
        assert np.all(lam >= 0.0)
        assert np.sum(lam) == pytest.approx(tau, rel=1e-12)
        # snapped coordinates are exact zeros, not small numbers
        tiny = (lam > 0) & (lam < 1e-8 * tau)
        assert not np.any(tiny)


def test_gsd_rejects_bad_inputs():
    d, Y, cs = _instance(6)
    with pytest.raises(ValueError):
        gsd_fit(d, Y, cs, tau=0.0)
    with pytest.raises(ValueError):
        gsd_fit(d, Y, cs, tau=1.0, lam0=np.array([1.0, -0.2, 0.0, 0.0, 0.2]))


def test_gsd_iteration_cap_warns():
    d, Y, cs = _instance(7)
    with pytest.warns(UserWarning, match="iteration cap"):
        gsd_fit(d, Y, cs, tau=4.0, opts=SolverOptions(max_iter=1, eps=1e-14))


def test_mcd_single_coordinate_gets_full_budget():
    rng = np.random.default_rng(8)
    d = Design.from_raw(rng.normal(size=(10, 1)))
    Y = np.sort(rng.normal(size=(10, 5)), axis=1)
    lam, diag = mcd_fit(d, Y, ConstraintSystem(5), tau=2.5)
    assert np.allclose(lam, [2.5])
    assert diag.method == "mcd"


def test_mcd_improves_on_uniform_start():
    for seed in range(5):
        d, Y, cs = _instance(seed, n=18, p=4, m=10)
        tau = 2.0
        f0 = sparsity_objective(d, Y, np.full(4, tau / 4), cs)
        lam, diag = mcd_fit(d, Y, cs, tau)
        assert diag.f_value <= f0 + 1e-10
        assert np.sum(lam) == pytest.approx(tau, rel=1e-12)
        assert np.all(lam >= 0.0)


def test_solvers_reach_comparable_objectives():
    d, Y, cs = _instance(9, n=30, p=6, m=15)
    opts = SolverOptions(eps=1e-7)
    for tau in (1.0, 4.0, 9.0):
        _, dg = gsd_fit(d, Y, cs, tau, opts=opts)
        _, dm = mcd_fit(d, Y, cs, tau, opts=opts)
        assert abs(math.log10(dm.f_value / dg.f_value)) < 0.02


def test_path_objective_decreases_with_budget():
    d, Y, cs = _instance(10, n=25, p=5, m=10)
    taus = np.array([0.5, 1.0, 2.0, 4.0, 8.0])
    path = solution_path(d, Y, cs, taus)
    assert path.method == "gsd"
    assert path.lambdas.shape == (5, 5)
    assert np.allclose(path.lambdas.sum(axis=1), taus, rtol=1e-12)
    # a larger budget can only help
    assert np.all(np.diff(path.f_values) <= 1e-6 * path.f_values[:-1])


def test_path_warm_start_matches_cold_support():
    d, Y, cs = _instance(11, n=24, p=5, m=8)
    taus = np.array([2.0, 4.0, 6.0])
    cold = solution_path(d, Y, cs, taus, warm_start=False)
    warm = solution_path(d, Y, cs, taus, warm_start=True)
    for a, b in zip(cold.supports(), warm.supports()):
        assert np.array_equal(a, b)
    assert np.allclose(cold.f_values, warm.f_values, rtol=1e-4)


def test_path_input_validation():
    d, Y, cs = _instance(12)
    with pytest.raises(ValueError):
        solution_path(d, Y, cs, np.array([1.0, -2.0]))
    with pytest.raises(ValueError):
        solution_path(d, Y, cs, np.array([1.0]), method="newton")


def test_gsd_recovers_planted_support():
    # mu depends on x2 + x3 and sigma on x1, so variables 4..p are noise
    d, qm = gen_experiment_a(SimConfigA(n=150, p=8, m=20), seed=42)
    cs = ConstraintSystem(20)
    lam, _ = gsd_fit(d, qm.values, cs, tau=6.0)
    support = set(np.flatnonzero(lam > 1e-6).tolist())
    assert {0, 1, 2} <= support
    # the planted variables soak up nearly the entire budget
    assert lam[[0, 1, 2]].sum() >= 0.9 * 6.0
