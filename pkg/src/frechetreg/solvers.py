"""Allowance-vector solvers on the simplex of fixed budget tau.

The geodesic solver (gsd_fit) reparameterizes lambda = gamma * gamma so the
simplex becomes a sphere of radius sqrt(tau), walks along great circles in
the direction of the projected negative gradient, and picks the step angle by
a damped Newton rule with the closed-form geodesic curvature.  The baseline
(mcd_fit) is minimal coordinate descent: golden-section line searches along
segments joining the current point to each simplex corner.  Both share one
objective evaluation path.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import ConstraintSystem
from .objective import SparsityProblem
from .options import SolverOptions
from .regression import Design

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0


def tangent_direction(gamma: np.ndarray, grad_g: np.ndarray) -> np.ndarray:
    """Negative gradient projected onto the tangent space of the sphere."""
    gamma = np.asarray(gamma, dtype=float)
    grad_g = np.asarray(grad_g, dtype=float)
    tau = float(gamma @ gamma)
    if tau <= 0.0:
        raise ValueError("gamma must be nonzero")
    return -(grad_g - gamma * (float(gamma @ grad_g) / tau))


def rotate(
    gamma: np.ndarray, v: np.ndarray, theta: float, take_abs: bool = True
) -> np.ndarray:
    """Rotate gamma by angle theta toward v inside their common plane.

    The output stays on the sphere of radius ||gamma||; by default the
    elementwise absolute value maps it back to the nonnegative orthant, which
    leaves the induced allowance lambda = gamma * gamma unchanged.
    """
    gamma = np.asarray(gamma, dtype=float)
    v = np.asarray(v, dtype=float)
    vnorm = float(np.linalg.norm(v))
    if vnorm == 0.0:
        return gamma.copy()
    radius = float(np.linalg.norm(gamma))
    out = math.cos(theta) * gamma + (radius * math.sin(theta)) * (v / vnorm)
    return np.abs(out) if take_abs else out


def _cap_angle(g1: float, g2: float, opts: SolverOptions) -> float:
    """Damped Newton angle min(|alpha * g1 / g2|, theta_max).

    Nonpositive or nonfinite curvature falls back to the angle cap, letting
    the iteration escape flat or concave stretches.
    """
    if not np.isfinite(g2) or g2 <= 0.0:
        return opts.theta_max
    return min(abs(opts.damp_alpha * g1 / g2), opts.theta_max)


def select_angle(gamma, v, ev, opts: SolverOptions | None = None) -> float:
    """Rotation angle toward tangent direction v at the point gamma.

    Uses the directional derivative and curvature of the objective along
    the great circle through gamma and v (taken from the evaluation bundle
    ev at gamma), damped and capped per opts.  A zero direction gives 0.
    """
    opts = opts or SolverOptions()
    gamma = np.asarray(gamma, dtype=float)
    v = np.asarray(v, dtype=float)
    vnorm = float(np.linalg.norm(v))
    if vnorm == 0.0:
        return 0.0
    tau = float(gamma @ gamma)
    g1 = -math.sqrt(tau) * vnorm
    g2 = ev.curvature_along(gamma, v / vnorm)
    return _cap_angle(g1, g2, opts)


@dataclass(frozen=True)
class FitDiagnostics:
    method: str
    iterations: int
    converged: bool
    f_value: float
    last_step: float
    n_evaluations: int
    wall_time: float


def gsd_fit(
    design: Design,
    Y: np.ndarray,
    cs: ConstraintSystem,
    tau: float,
    lam0: np.ndarray | None = None,
    opts: SolverOptions | None = None,
    problem: SparsityProblem | None = None,
) -> tuple[np.ndarray, FitDiagnostics]:
    """Geodesic second-order descent for the allowance vector at budget tau.

    Starts from lam0 (uniform by default) nudged off the boundary, iterates
    rotations until the sup-norm change of gamma drops to opts.eps, then
    snaps allowances below the zero tolerance to exactly zero and rescales
    the rest to keep the budget.  Non-convergence at the iteration cap is a
    warning, not an error.
    """
    opts = opts or SolverOptions()
    if problem is None:
        problem = SparsityProblem(design, Y, cs, opts)
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    p = design.p
    start = time.perf_counter()

    if lam0 is None:
        lam0 = np.full(p, tau / p)
    else:
        lam0 = np.asarray(lam0, dtype=float)
        if lam0.shape != (p,) or np.any(lam0 < 0):
            raise ValueError("lam0 must be a nonnegative vector of length p")
    beta = opts.resolve_nudge(tau, p)
    gamma = np.sqrt(lam0) + beta
    gamma *= math.sqrt(tau) / np.linalg.norm(gamma)

    eta = None
    step = math.inf
    converged = False
    iterations = 0
    n_evals = 0
    for iterations in range(1, opts.max_iter + 1):
        ev = problem.evaluate(gamma * gamma, eta0=eta if opts.warm_start_eta else None)
        n_evals += 1
        eta = ev.sol.Eta
        grad_g = ev.sphere_grad(gamma)
        v = tangent_direction(gamma, grad_g)
        vnorm = float(np.linalg.norm(v))
        if vnorm <= 1e-14 * (1.0 + float(np.linalg.norm(grad_g))):
            step = 0.0
            converged = True
            break
        g1 = -math.sqrt(tau) * vnorm
        v_unit = v / vnorm
        g2 = ev.curvature_along(gamma, v_unit)
        theta = _cap_angle(g1, g2, opts)
        gamma_next = rotate(gamma, v_unit, theta)
        step = float(np.max(np.abs(gamma_next - gamma)))
        gamma = gamma_next
        if step <= opts.eps:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"geodesic descent hit the iteration cap ({opts.max_iter}) "
            f"with last step {step:.3e}",
            stacklevel=2,
        )

    gamma *= math.sqrt(tau) / np.linalg.norm(gamma)
    lam = gamma * gamma
    lam[lam < opts.resolve_zero_tol(tau)] = 0.0
    lam *= tau / lam.sum()

    final = problem.evaluate(lam)
    n_evals += 1
    diag = FitDiagnostics(
        method="gsd",
        iterations=iterations,
        converged=converged,
        f_value=final.f_value,
        last_step=step,
        n_evaluations=n_evals,
        wall_time=time.perf_counter() - start,
    )
    return lam, diag


def _golden_min(fun, tol: float) -> tuple[float, float]:
    """Golden-section minimization on [0, 1]; returns (argmin, value)."""
    a, b = 0.0, 1.0
    h = b - a
    c = a + _INVPHI2 * h
    d = a + _INVPHI * h
    fc = fun(c)
    fd = fun(d)
    while h > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            h = b - a
            c = a + _INVPHI2 * h
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + _INVPHI * h
            fd = fun(d)
    return (c, fc) if fc < fd else (d, fd)


def mcd_fit(
    design: Design,
    Y: np.ndarray,
    cs: ConstraintSystem,
    tau: float,
    lam0: np.ndarray | None = None,
    opts: SolverOptions | None = None,
    problem: SparsityProblem | None = None,
) -> tuple[np.ndarray, FitDiagnostics]:
    """Minimal coordinate descent over the allowance simplex.

    Each sweep line-searches every coordinate k along the segment through the
    current point and the corner tau * e_k (parameterized so alpha = 1 is the
    corner and alpha = 0 the opposite face), accepting the golden-section
    minimizer when it improves the objective.  Coordinates whose complement
    mass is below the corner tolerance are skipped because the segment
    degenerates.
    """
    opts = opts or SolverOptions()
    if problem is None:
        problem = SparsityProblem(design, Y, cs, opts)
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    p = design.p
    start = time.perf_counter()

    if lam0 is None:
        lam = np.full(p, tau / p)
    else:
        lam = np.asarray(lam0, dtype=float).copy()
        if lam.shape != (p,) or np.any(lam < 0):
            raise ValueError("lam0 must be a nonnegative vector of length p")

    eta = None
    n_evals = 1
    ev0 = problem.evaluate(lam)
    f_cur = ev0.f_value
    if opts.warm_start_eta:
        eta = ev0.sol.Eta
    converged = False
    step = math.inf
    sweeps = 0
    for sweeps in range(1, opts.mcd_max_sweeps + 1):
        lam_prev = lam.copy()
        for k in range(p):
            rest = tau - lam[k]
            if rest <= opts.mcd_corner_tol:
                continue
            base = lam * (tau / rest)
            base[k] = 0.0

            def segment(alpha: float) -> np.ndarray:
                cand = base * (1.0 - alpha)
                cand[k] = alpha * tau
                return cand

            evals = 0

            def line_value(alpha: float) -> float:
                nonlocal evals, eta
                evals += 1
                ev = problem.evaluate(segment(alpha), eta0=eta)
                if opts.warm_start_eta:
                    eta = ev.sol.Eta
                return ev.f_value

            alpha_hat, f_hat = _golden_min(line_value, opts.mcd_line_tol)
            n_evals += evals
            if f_hat < f_cur:
                lam = segment(alpha_hat)
                f_cur = f_hat
        step = float(np.max(np.abs(lam - lam_prev)))
        if step <= opts.eps:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"coordinate descent hit the sweep cap ({opts.mcd_max_sweeps}) "
            f"with last step {step:.3e}",
            stacklevel=2,
        )

    diag = FitDiagnostics(
        method="mcd",
        iterations=sweeps,
        converged=converged,
        f_value=f_cur,
        last_step=step,
        n_evaluations=n_evals,
        wall_time=time.perf_counter() - start,
    )
    return lam, diag


@dataclass(frozen=True)
class SolutionPath:
    """Allowance vectors along a grid of budgets tau."""

    taus: np.ndarray = field(repr=False)
    lambdas: np.ndarray = field(repr=False)
    f_values: np.ndarray = field(repr=False)
    diagnostics: tuple[FitDiagnostics, ...] = field(repr=False)
    names: tuple[str, ...]
    method: str

    def supports(self) -> list[np.ndarray]:
        """Indices of strictly positive allowances at each tau."""
        return [np.flatnonzero(row > 0.0) for row in self.lambdas]

    @property
    def total_time(self) -> float:
        return float(sum(d.wall_time for d in self.diagnostics))


def solution_path(
    design: Design,
    Y: np.ndarray,
    cs: ConstraintSystem,
    taus: np.ndarray,
    method: str = "gsd",
    opts: SolverOptions | None = None,
    warm_start: bool = False,
) -> SolutionPath:
    """Fit the allowance vector at every budget in taus.

    Each budget starts from the uniform allowance by default; `warm_start`
    instead rescales the previous solution to the next budget, which speeds
    up fine grids at the cost of coupling the fits.
    """
    opts = opts or SolverOptions()
    taus = np.asarray(taus, dtype=float)
    if taus.ndim != 1 or taus.size == 0 or np.any(taus <= 0):
        raise ValueError("taus must be a nonempty vector of positive budgets")
    if method not in ("gsd", "mcd"):
        raise ValueError(f"unknown method {method!r}")
    fit = gsd_fit if method == "gsd" else mcd_fit

    problem = SparsityProblem(design, Y, cs, opts)
    lambdas = np.zeros((taus.size, design.p))
    f_values = np.zeros(taus.size)
    diags: list[FitDiagnostics] = []
    prev: np.ndarray | None = None
    for t, tau in enumerate(taus):
        lam0 = None
        if warm_start and prev is not None and prev.sum() > 0:
            lam0 = prev * (tau / prev.sum())
        lam, diag = fit(design, Y, cs, tau, lam0=lam0, opts=opts, problem=problem)
        lambdas[t] = lam
        f_values[t] = diag.f_value
        diags.append(diag)
        prev = lam
    return SolutionPath(
        taus=taus.copy(),
        lambdas=lambdas,
        f_values=f_values,
        diagnostics=tuple(diags),
        names=design.names,
        method=method,
    )
