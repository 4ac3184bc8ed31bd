"""Global distributional regression with quantile-function responses.

The conditional mean at a covariate value is a weighted average of the
training quantile rows with weights 1/n + x*^T (X^T X)^- x_i; stacked over
the training rows this is a linear smoother of Y.  The ridge-type variant
shrinks each covariate direction by an allowance lambda_k >= 0, interpolating
between the overall mean (lambda = 0) and the unpenalized fit
(lambda -> inf), and is what the sparsity solvers differentiate through.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .data import QuantileMatrix
from .options import SolverOptions
from .projection import solve_embedded

_PINV_RCOND = 1e-10
_LAMBDA_SNAP = 1e-12


@dataclass(frozen=True)
class Design:
    """Column-centered covariate matrix with the centering statistics kept."""

    X: np.ndarray = field(repr=False)
    column_means: np.ndarray = field(repr=False)
    names: tuple[str, ...]

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise ValueError(f"X must be 2-D, got shape {X.shape}")
        if len(self.names) != X.shape[1]:
            raise ValueError("names length does not match number of columns")
        if np.asarray(self.column_means).shape != (X.shape[1],):
            raise ValueError("column_means shape does not match X")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @classmethod
    def from_raw(cls, X_raw: np.ndarray, names: tuple[str, ...] | None = None) -> "Design":
        X_raw = np.asarray(X_raw, dtype=float)
        if not np.all(np.isfinite(X_raw)):
            raise ValueError("covariates must be finite")
        if names is None:
            names = tuple(f"x{k + 1}" for k in range(X_raw.shape[1]))
        means = X_raw.mean(axis=0)
        return cls(X=X_raw - means, column_means=means, names=tuple(names))

    def center(self, X_new: np.ndarray) -> np.ndarray:
        """Apply the training centering to new covariate rows."""
        return np.atleast_2d(np.asarray(X_new, dtype=float)) - self.column_means

    def scaled(self) -> np.ndarray:
        """X / sqrt(n), the scaling used by the ridge smoother."""
        return self.X / np.sqrt(self.n)


def frechet_weights(design: Design, x_star: np.ndarray) -> np.ndarray:
    """Smoother weights s_i = 1/n + x*^T (X^T X)^- x_i for one target point.

    `x_star` is given in raw units and centered with the training statistics.
    The weights always sum to one; at the covariate mean they are uniform.
    """
    xc = design.center(x_star)
    if xc.shape != (1, design.p):
        raise ValueError(f"x_star must have {design.p} entries")
    XtX = design.X.T @ design.X
    pinv = np.linalg.pinv(XtX, rcond=_PINV_RCOND, hermitian=True)
    return 1.0 / design.n + design.X @ (pinv @ xc[0])


@dataclass(frozen=True)
class RidgeFit:
    """Ridge-type smoother output plus the pieces reused by derivatives.

    H equals G @ Xtilde (= Xtilde @ F by the push-through identity), where
    G = (Xtilde D Xtilde^T + I_n)^{-1} and F = (D Xtilde^T Xtilde + I_p)^{-1}.
    The inverse is assembled in whichever of the two spaces is smaller.
    """

    Yhat: np.ndarray = field(repr=False)
    H: np.ndarray = field(repr=False)
    lam: np.ndarray = field(repr=False)
    mode: str


def _snap_lambda(lam: np.ndarray) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1:
        raise ValueError("lambda must be a vector")
    if np.any(lam < 0):
        raise ValueError("lambda entries must be nonnegative")
    thresh = _LAMBDA_SNAP * lam.sum()
    out = lam.copy()
    out[out < thresh] = 0.0
    return out


def ridge_smoother(design: Design, Y: np.ndarray, lam: np.ndarray) -> RidgeFit:
    """Conditional-mean rows Yhat(lambda) for the training covariates.

    Yhat = Ybar + (I - G) Y with G = (Xtilde D_lam Xtilde^T + I)^{-1} and
    Xtilde = X / sqrt(n).  For p <= n the p x p form F is inverted instead
    and the identity G Xtilde = Xtilde F keeps everything in covariate space.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] != design.n:
        raise ValueError(f"Y must be (n, m) with n={design.n}, got {Y.shape}")
    lam = _snap_lambda(lam)
    if lam.shape != (design.p,):
        raise ValueError(f"lambda must have {design.p} entries")
    Xt = design.scaled()
    ybar = Y.mean(axis=0)

    if design.p <= design.n:
        M = lam[:, None] * (Xt.T @ Xt)
        M[np.diag_indices_from(M)] += 1.0
        F = np.linalg.solve(M, np.eye(design.p))
        H = Xt @ F
        Yhat = ybar + H @ (lam[:, None] * (Xt.T @ Y))
        return RidgeFit(Yhat=Yhat, H=H, lam=lam, mode="F")

    M = (Xt * lam) @ Xt.T
    M[np.diag_indices_from(M)] += 1.0
    factor = cho_factor(M, lower=True)
    H = cho_solve(factor, Xt)
    Yhat = ybar + Y - cho_solve(factor, Y)
    return RidgeFit(Yhat=Yhat, H=H, lam=lam, mode="G")


def predict_quantiles(
    design: Design,
    qm: QuantileMatrix,
    X_star: np.ndarray,
    lam: np.ndarray | None = None,
    opts: SolverOptions | None = None,
) -> QuantileMatrix:
    """Predicted quantile rows at new covariate values, projected to feasibility.

    Without `lam` this is the unpenalized fit
    Yhat* = (1/n) 1 Y + X*_c (X^T X)^- X^T Y; with `lam` the ridge analogue
    replaces the pseudoinverse by the shrunken smoother, so training rows
    reproduce the rows of the penalized fit.  Each predicted row is then
    projected onto the nondecreasing-in-box set.
    """
    Y = qm.values
    if Y.shape[0] != design.n:
        raise ValueError("quantile matrix rows do not match the design")
    Xc = design.center(X_star)
    if Xc.shape[1] != design.p:
        raise ValueError(f"X_star must have {design.p} columns")
    ybar = Y.mean(axis=0)

    if lam is None:
        XtX = design.X.T @ design.X
        pinv = np.linalg.pinv(XtX, rcond=_PINV_RCOND, hermitian=True)
        Yhat_star = ybar + Xc @ (pinv @ (design.X.T @ Y))
    else:
        lam = _snap_lambda(lam)
        Xt = design.scaled()
        M = lam[:, None] * (Xt.T @ Xt)
        M[np.diag_indices_from(M)] += 1.0
        coef = np.linalg.solve(M, lam[:, None] * (Xt.T @ Y))
        Yhat_star = ybar + (Xc / np.sqrt(design.n)) @ coef

    sol = solve_embedded(Yhat_star, qm.constraint_system(), opts=opts)
    return QuantileMatrix(grid=qm.grid, values=sol.Q, box=qm.box)
