"""Solver options shared by the projection and descent routines."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .data import ConstraintSystem


@dataclass(frozen=True)
class SolverOptions:
    """Tuning knobs for the embedded projection and the descent solvers.

    Fields left at None are derived from the problem: the initial nudge off
    the simplex boundary defaults to 1e-3 * sqrt(tau / p), the zero-snap
    tolerance for returned allowances to 1e-8 * tau, the dual iteration cap
    to 100 * m, and the active-constraint tolerance to
    1e-7 * (1 + box width) when the box is finite.
    """

    eps: float = 1e-5
    theta_max: float = math.pi / 4
    damp_alpha: float = 1.0
    nudge_beta: float | None = None
    max_iter: int = 2000
    zero_tol: float | None = None
    eps_dual: float = 1e-8
    dual_max_iter: int | None = None
    active_tol: float | None = None
    warm_start_eta: bool = True
    mcd_corner_tol: float = 1e-10
    mcd_line_tol: float = 1e-6
    mcd_max_sweeps: int = 100

    def with_eps(self, eps: float) -> "SolverOptions":
        return replace(self, eps=eps)

    def resolve_nudge(self, tau: float, p: int) -> float:
        if self.nudge_beta is not None:
            return self.nudge_beta
        return 1e-3 * math.sqrt(tau / p)

    def resolve_zero_tol(self, tau: float) -> float:
        if self.zero_tol is not None:
            return self.zero_tol
        return 1e-8 * tau

    def resolve_dual_max_iter(self, m: int) -> int:
        if self.dual_max_iter is not None:
            return self.dual_max_iter
        return 100 * m

    def resolve_active_tol(self, cs: ConstraintSystem) -> float:
        if self.active_tol is not None:
            return self.active_tol
        width = cs.b_upper - cs.b_lower
        scale = 1.0 + width if np.isfinite(width) else 1.0
        return 1e-7 * scale
