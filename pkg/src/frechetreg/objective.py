"""Objective and derivatives of the sparse allowance problem.

For an allowance vector lambda >= 0 the objective is

    f(lambda) = 0.5 * || Q(lambda) - Y ||_F^2

where Q(lambda) projects the ridge-smoothed rows Yhat(lambda) onto the
feasible set.  Because the projection is row-wise and piecewise affine, f is
differentiable wherever the active sets are locally constant, and both the
gradient and the Hessian have closed forms built from the smoother matrices
and the block projectors of the active sets.  The sphere reparameterization
lambda = gamma * gamma turns the simplex constraint into a sphere constraint;
its chain-rule derivatives are provided both densely and as the fast
quadratic form used inside the geodesic solver, whose largest intermediate is
p x n.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .data import ConstraintSystem
from .options import SolverOptions
from .projection import (
    EmbeddedSolution,
    RowProjectors,
    active_projectors,
    solve_embedded,
)
from .regression import Design, RidgeFit, _snap_lambda


@dataclass(frozen=True)
class GradientBundle:
    """Objective value and derivative pieces at one allowance vector."""

    f_value: float
    grad_lambda: np.ndarray = field(repr=False)
    N: np.ndarray = field(repr=False)
    Etilde: np.ndarray = field(repr=False)
    hess_lambda: np.ndarray | None = field(default=None, repr=False)


class SparsityProblem:
    """Shared data and evaluation routines for one (design, Y, box) problem.

    Caches X^T X and X^T Y so repeated evaluations along a solver trajectory
    only pay for the per-lambda linear algebra.
    """

    def __init__(
        self,
        design: Design,
        Y: np.ndarray,
        cs: ConstraintSystem,
        opts: SolverOptions | None = None,
    ):
        Y = np.asarray(Y, dtype=float)
        if Y.ndim != 2 or Y.shape[0] != design.n:
            raise ValueError(f"Y must be (n, m) with n={design.n}, got {Y.shape}")
        if Y.shape[1] != cs.m:
            raise ValueError("Y columns do not match the constraint system")
        self.design = design
        self.Y = Y
        self.cs = cs
        self.opts = opts or SolverOptions()
        self.Xt = design.scaled()
        self.XtX = self.Xt.T @ self.Xt
        self.XtY = self.Xt.T @ Y
        self.ybar = Y.mean(axis=0)
        self.n, self.p = design.n, design.p
        self.m = cs.m
        self.active_tol = self.opts.resolve_active_tol(cs)

    def ridge(self, lam: np.ndarray) -> RidgeFit:
        """Smoother fit reusing the cached cross products."""
        lam = _snap_lambda(lam)
        if self.p <= self.n:
            M = lam[:, None] * self.XtX
            M[np.diag_indices_from(M)] += 1.0
            F = np.linalg.solve(M, np.eye(self.p))
            H = self.Xt @ F
            Yhat = self.ybar + H @ (lam[:, None] * self.XtY)
            return RidgeFit(Yhat=Yhat, H=H, lam=lam, mode="F")
        M = (self.Xt * lam) @ self.Xt.T
        M[np.diag_indices_from(M)] += 1.0
        factor = cho_factor(M, lower=True)
        H = cho_solve(factor, self.Xt)
        Yhat = self.ybar + self.Y - cho_solve(factor, self.Y)
        return RidgeFit(Yhat=Yhat, H=H, lam=lam, mode="G")

    def evaluate(self, lam: np.ndarray, eta0: np.ndarray | None = None) -> "Evaluation":
        fit = self.ridge(lam)
        sol = solve_embedded(fit.Yhat, self.cs, opts=self.opts, eta0=eta0)
        return Evaluation(problem=self, fit=fit, sol=sol)


class Evaluation:
    """One evaluated allowance vector: fit, projection, derivatives on demand."""

    def __init__(self, problem: SparsityProblem, fit: RidgeFit, sol: EmbeddedSolution):
        self.problem = problem
        self.fit = fit
        self.sol = sol
        diff = sol.Q - problem.Y
        self.f_value = 0.5 * float(np.sum(diff * diff))
        self._proj: RowProjectors | None = None
        self._Etilde: np.ndarray | None = None
        self._YGX: np.ndarray | None = None
        self._XtGX: np.ndarray | None = None
        self._T: np.ndarray | None = None
        self._grad: np.ndarray | None = None

    @property
    def proj(self) -> RowProjectors:
        if self._proj is None:
            self._proj = active_projectors(
                self.sol.Q, self.problem.cs, tol=self.problem.active_tol
            )
        return self._proj

    @property
    def Etilde(self) -> np.ndarray:
        """Rows (yhat_i - y_i)^T (I - P_i), the projected smoother residuals."""
        if self._Etilde is None:
            self._Etilde = self.proj.apply_complement(self.fit.Yhat - self.problem.Y)
        return self._Etilde

    @property
    def YGX(self) -> np.ndarray:
        """Y^T G Xtilde (m x p)."""
        if self._YGX is None:
            self._YGX = self.problem.Y.T @ self.fit.H
        return self._YGX

    @property
    def XtGX(self) -> np.ndarray:
        """Xtilde^T G Xtilde (p x p)."""
        if self._XtGX is None:
            self._XtGX = self.problem.Xt.T @ self.fit.H
        return self._XtGX

    @property
    def _ET(self) -> np.ndarray:
        """Etilde @ (Y^T G Xtilde), the n x p core of gradient and N."""
        if self._T is None:
            self._T = self.Etilde @ self.YGX
        return self._T

    @property
    def grad_lambda(self) -> np.ndarray:
        if self._grad is None:
            self._grad = np.einsum("ik,ik->k", self.fit.H, self._ET)
        return self._grad

    @property
    def N(self) -> np.ndarray:
        """N = Xtilde^T G Etilde Y^T G Xtilde; the gradient is its diagonal."""
        return self.fit.H.T @ self._ET

    def hessian(self) -> np.ndarray:
        """Dense p x p Hessian of f, treating active sets as locally constant."""
        H = self.fit.H
        SY = self.YGX.T
        SS = SY @ SY.T
        N = self.N
        hess = (H.T @ H) * SS - self.XtGX * (N + N.T)
        for i in range(self.problem.n):
            SPS = SS - SY @ self.proj.apply_complement_row(i, SY).T
            hess -= np.outer(H[i], H[i]) * SPS
        return hess

    def sphere_grad(self, gamma: np.ndarray) -> np.ndarray:
        return 2.0 * gamma * self.grad_lambda

    def sphere_hessian_dense(self, gamma: np.ndarray) -> np.ndarray:
        """2 diag(grad f) + 4 (gamma gamma^T) o hess f, for cross-checks."""
        return 2.0 * np.diag(self.grad_lambda) + 4.0 * np.outer(gamma, gamma) * self.hessian()

    def curvature_along(self, gamma: np.ndarray, v_unit: np.ndarray) -> float:
        """Second derivative at angle 0 of g along the geodesic toward v_unit.

        Computes tau * v^T (grad^2 g) v - gamma^T grad g through the
        quadratic-form shortcut whose largest intermediate is p x n.
        """
        tau = float(gamma @ gamma)
        gamma_unit = gamma / np.sqrt(tau)
        u = gamma_unit * v_unit
        M1 = self.YGX * u
        Vt = self.fit.H @ M1.T
        term_v = self.proj.complement_inner(Vt)
        M2 = (M1 @ self.XtGX) * u
        term_w = float(np.sum(M2 * (self.Etilde.T @ self.fit.H)))
        grad = self.grad_lambda
        gg = self.sphere_grad(gamma)
        return (
            2.0 * tau * float(np.sum(v_unit * v_unit * grad))
            + 4.0 * tau * tau * term_v
            - 8.0 * tau * tau * term_w
            - float(gamma @ gg)
        )


def sparsity_objective(
    design: Design,
    Y: np.ndarray,
    lam: np.ndarray,
    cs: ConstraintSystem,
    opts: SolverOptions | None = None,
) -> float:
    """f(lambda) = half the squared Frobenius distance of Q(lambda) to Y."""
    return SparsityProblem(design, Y, cs, opts).evaluate(lam).f_value


def sparsity_gradient(
    design: Design,
    Y: np.ndarray,
    lam: np.ndarray,
    cs: ConstraintSystem,
    opts: SolverOptions | None = None,
) -> GradientBundle:
    """Objective, gradient, N matrix and projected residuals at lambda."""
    ev = SparsityProblem(design, Y, cs, opts).evaluate(lam)
    return GradientBundle(
        f_value=ev.f_value,
        grad_lambda=ev.grad_lambda.copy(),
        N=ev.N,
        Etilde=ev.Etilde.copy(),
    )


def sparsity_hessian(
    design: Design,
    Y: np.ndarray,
    lam: np.ndarray,
    cs: ConstraintSystem,
    opts: SolverOptions | None = None,
) -> GradientBundle:
    """Gradient bundle including the dense Hessian of f at lambda."""
    ev = SparsityProblem(design, Y, cs, opts).evaluate(lam)
    return GradientBundle(
        f_value=ev.f_value,
        grad_lambda=ev.grad_lambda.copy(),
        N=ev.N,
        Etilde=ev.Etilde.copy(),
        hess_lambda=ev.hessian(),
    )


def sphere_gradient(
    design: Design,
    Y: np.ndarray,
    gamma: np.ndarray,
    cs: ConstraintSystem,
    opts: SolverOptions | None = None,
) -> np.ndarray:
    """Gradient of g(gamma) = f(gamma * gamma), equal to 2 gamma o grad f."""
    gamma = np.asarray(gamma, dtype=float)
    ev = SparsityProblem(design, Y, cs, opts).evaluate(gamma * gamma)
    return ev.sphere_grad(gamma)


def sphere_hessian_quadform(
    design: Design,
    Y: np.ndarray,
    gamma: np.ndarray,
    v_unit: np.ndarray,
    cs: ConstraintSystem,
    opts: SolverOptions | None = None,
) -> float:
    """Geodesic second derivative of g at gamma toward the unit tangent v_unit."""
    gamma = np.asarray(gamma, dtype=float)
    v_unit = np.asarray(v_unit, dtype=float)
    ev = SparsityProblem(design, Y, cs, opts).evaluate(gamma * gamma)
    return ev.curvature_along(gamma, v_unit)
