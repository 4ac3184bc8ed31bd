"""Projection of fitted rows onto the feasible set of quantile vectors.

The embedded problem is min 0.5 * ||Q - Yhat||_F^2 subject to every row of Q
being nondecreasing and inside the box.  Its dual is solved by projected
gradient ascent with the fixed step 1/2, which only ever touches rows that
violate a constraint and costs O(m) per row and iteration thanks to the
banded constraint matrix.  A pool-adjacent-violators oracle provides the
exact row-wise solution for cross-checking, and the converged active sets
yield block-structured projectors used by the objective derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .data import ConstraintSystem
from .errors import ConvergenceError
from .options import SolverOptions


def _c_matrix(Yhat: np.ndarray, cs: ConstraintSystem) -> np.ndarray:
    """C = B - Yhat @ A, one row per fitted row, one column per constraint."""
    n, m = Yhat.shape
    C = np.empty((n, m + 1))
    C[:, 0] = cs.b_lower - Yhat[:, 0]
    C[:, 1:-1] = -np.diff(Yhat, axis=1)
    C[:, -1] = Yhat[:, -1] - cs.b_upper
    return C


def _eta_to_rows(Eta: np.ndarray) -> np.ndarray:
    """Eta @ A^T without materializing A: column j is Eta_j - Eta_{j+1}."""
    return Eta[:, :-1] - Eta[:, 1:]


@dataclass(frozen=True)
class EmbeddedSolution:
    """Converged projection: rows Q, multipliers Eta, and dual diagnostics."""

    Q: np.ndarray = field(repr=False)
    Eta: np.ndarray = field(repr=False)
    iterations: int
    max_residual: float
    violated_rows: np.ndarray = field(repr=False)


@njit(cache=True)
def _ascend_rows(C, Eta, eps_dual, max_iter):
    """Run the clamped half-step ascent on each row of Eta in place.

    Rows are independent, so each one iterates until its own sup-norm
    change drops to eps_dual or the cap is hit.  Returns the largest
    iteration count and the largest final residual over rows; a residual
    left above the tolerance means that row hit the cap.
    """
    k, w = C.shape
    it_worst = 0
    res_worst = 0.0
    cur = np.empty(w)
    nxt = np.empty(w)
    for i in range(k):
        for j in range(w):
            cur[j] = Eta[i, j]
        res = np.inf
        it = 0
        while it < max_iter:
            it += 1
            res = 0.0
            for j in range(w):
                left = cur[j - 1] if j > 0 else cur[0]
                right = cur[j + 1] if j < w - 1 else cur[w - 1]
                x = 0.5 * (C[i, j] + left + right)
                if x < 0.0:
                    x = 0.0
                nxt[j] = x
                d = abs(x - cur[j])
                if d > res:
                    res = d
            cur, nxt = nxt, cur
            if res <= eps_dual:
                break
        for j in range(w):
            Eta[i, j] = cur[j]
        if it > it_worst:
            it_worst = it
        if res > res_worst:
            res_worst = res
    return it_worst, res_worst


def solve_embedded(
    Yhat: np.ndarray,
    cs: ConstraintSystem,
    opts: SolverOptions | None = None,
    eta0: np.ndarray | None = None,
) -> EmbeddedSolution:
    """Project each row of Yhat onto the nondecreasing-in-box set.

    Rows with no violated constraint are returned unchanged with zero
    multipliers.  For the rest, the dual variables iterate

        Eta <- max(0, 0.5 * (C + shifted column sums of Eta))

    row by row (rows are independent) until each row's sup-norm change
    drops to eps_dual or the iteration cap is hit; a row left at the cap
    with residual above 10 * eps_dual raises ConvergenceError.  `eta0`
    warm-starts the multipliers of violated rows.
    """
    opts = opts or SolverOptions()
    Yhat = np.asarray(Yhat, dtype=float)
    if Yhat.ndim != 2 or Yhat.shape[1] != cs.m:
        raise ValueError(f"expected an (n, {cs.m}) matrix, got {Yhat.shape}")
    n, m = Yhat.shape
    max_iter = opts.resolve_dual_max_iter(m)

    C_full = _c_matrix(Yhat, cs)
    with np.errstate(invalid="ignore"):
        violated = np.where(np.any(C_full > 0.0, axis=1))[0]

    Eta_full = np.zeros((n, m + 1))
    if violated.size == 0:
        return EmbeddedSolution(
            Q=Yhat.copy(),
            Eta=Eta_full,
            iterations=0,
            max_residual=0.0,
            violated_rows=violated,
        )

    C = C_full[violated]
    if eta0 is not None:
        Eta = np.maximum(np.asarray(eta0, dtype=float)[violated], 0.0)
    else:
        Eta = np.maximum(C, 0.0)
        Eta[~np.isfinite(Eta)] = 0.0

    it_worst, res_worst = _ascend_rows(C, Eta, opts.eps_dual, max_iter)
    iterations, residual = int(it_worst), float(res_worst)

    if residual > 10.0 * opts.eps_dual:
        raise ConvergenceError(
            f"dual ascent stalled after {iterations} iterations "
            f"(residual {residual:.3e}, tolerance {opts.eps_dual:.3e})",
            residual=residual,
        )

    Eta_full[violated] = Eta
    Q = Yhat.copy()
    Q[violated] += _eta_to_rows(Eta)
    return EmbeddedSolution(
        Q=Q,
        Eta=Eta_full,
        iterations=iterations,
        max_residual=residual,
        violated_rows=violated,
    )


def pava_box_oracle(y: np.ndarray, cs: ConstraintSystem) -> np.ndarray:
    """Exact projection of one row: pool adjacent violators, then clip.

    Clipping the unconstrained isotonic fit into the box preserves both
    monotonicity and optimality, so this is the exact minimizer of
    0.5 * ||q - y||^2 over the feasible set.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.shape[0] != cs.m:
        raise ValueError(f"expected a length-{cs.m} row, got shape {y.shape}")
    means: list[float] = []
    counts: list[int] = []
    for v in y:
        cur_mean = float(v)
        cur_count = 1
        while means and means[-1] > cur_mean:
            cur_mean = (means[-1] * counts[-1] + cur_mean * cur_count) / (
                counts[-1] + cur_count
            )
            cur_count += counts[-1]
            means.pop()
            counts.pop()
        means.append(cur_mean)
        counts.append(cur_count)
    fit = np.repeat(means, counts)
    return np.clip(fit, cs.b_lower, cs.b_upper)


@dataclass(frozen=True)
class RowProjectors:
    """Per-row projectors onto the span of active constraint columns.

    Active monotonicity constraints pool coordinates into blocks; on a block
    the projector is the within-block centering map, upgraded to the full
    identity when the block also holds an active box constraint.  All
    applications are O(n * m) via segment sums.
    """

    seg: np.ndarray = field(repr=False)
    zero_mask: np.ndarray = field(repr=False)
    lo_active: np.ndarray = field(repr=False)
    hi_active: np.ndarray = field(repr=False)
    _gid: np.ndarray = field(repr=False)
    _counts: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.seg.shape[0]

    @property
    def m(self) -> int:
        return self.seg.shape[1]

    def apply_complement(self, R: np.ndarray) -> np.ndarray:
        """Row-wise (I - P_i) @ R_i: block means, zeroed on box-active blocks."""
        R = np.asarray(R, dtype=float)
        if R.shape != self.seg.shape:
            raise ValueError(f"expected shape {self.seg.shape}, got {R.shape}")
        sums = np.bincount(self._gid.ravel(), weights=R.ravel(), minlength=self._counts.size)
        means = sums / self._counts
        out = means[self._gid]
        out[self.zero_mask] = 0.0
        return out

    def apply(self, R: np.ndarray) -> np.ndarray:
        """Row-wise P_i @ R_i."""
        return np.asarray(R, dtype=float) - self.apply_complement(R)

    def complement_inner(self, V: np.ndarray) -> float:
        """Sum over rows of V_i^T (I - P_i) V_i."""
        return float(np.sum(np.asarray(V) * self.apply_complement(V)))

    def row_blocks(self, i: int) -> list[tuple[int, int, bool]]:
        """Blocks of row i as (start, stop, box_active) with stop exclusive."""
        seg_row = self.seg[i]
        starts = np.flatnonzero(np.r_[True, np.diff(seg_row) != 0])
        stops = np.r_[starts[1:], self.m]
        out = []
        for s, e in zip(starts, stops):
            boxed = (self.lo_active[i] and s == 0) or (self.hi_active[i] and e == self.m)
            out.append((int(s), int(e), bool(boxed)))
        return out

    def apply_complement_row(self, i: int, M: np.ndarray) -> np.ndarray:
        """(I - P_i) applied from the right to the rows of a (k, m) matrix."""
        M = np.atleast_2d(np.asarray(M, dtype=float))
        out = np.empty_like(M)
        for s, e, boxed in self.row_blocks(i):
            if boxed:
                out[:, s:e] = 0.0
            else:
                out[:, s:e] = M[:, s:e].mean(axis=1, keepdims=True)
        return out

    def materialize(self, i: int) -> np.ndarray:
        """Dense m x m projector P_i, intended for tests and diagnostics."""
        P = np.zeros((self.m, self.m))
        for s, e, boxed in self.row_blocks(i):
            width = e - s
            if boxed:
                P[s:e, s:e] = np.eye(width)
            elif width > 1:
                P[s:e, s:e] = np.eye(width) - np.full((width, width), 1.0 / width)
        return P

    def n_active(self) -> np.ndarray:
        """Number of active constraints per row."""
        counts = np.empty(self.n, dtype=int)
        for i in range(self.n):
            blocks = self.row_blocks(i)
            counts[i] = sum(e - s - 1 for s, e, _ in blocks)
        counts += self.lo_active.astype(int) + self.hi_active.astype(int)
        return counts


def active_projectors(
    Q: np.ndarray, cs: ConstraintSystem, tol: float | None = None
) -> RowProjectors:
    """Identify active constraints of converged rows and build projectors.

    A constraint counts as active when |b_c - (Q @ A)_c| <= tol; the default
    tolerance is 1e-7 scaled by (1 + box width) when the box is finite.
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[1] != cs.m:
        raise ValueError(f"expected an (n, {cs.m}) matrix, got {Q.shape}")
    if tol is None:
        tol = SolverOptions().resolve_active_tol(cs)
    n, m = Q.shape

    mono_active = np.abs(np.diff(Q, axis=1)) <= tol
    if np.isfinite(cs.b_lower):
        lo_active = np.abs(Q[:, 0] - cs.b_lower) <= tol
    else:
        lo_active = np.zeros(n, dtype=bool)
    if np.isfinite(cs.b_upper):
        hi_active = np.abs(cs.b_upper - Q[:, -1]) <= tol
    else:
        hi_active = np.zeros(n, dtype=bool)

    seg = np.zeros((n, m), dtype=np.int64)
    np.cumsum(~mono_active, axis=1, out=seg[:, 1:])
    gid = seg + (np.arange(n, dtype=np.int64) * m)[:, None]
    counts = np.bincount(gid.ravel(), minlength=n * m).astype(float)
    counts[counts == 0.0] = 1.0

    zero_mask = (lo_active[:, None] & (seg == 0)) | (
        hi_active[:, None] & (seg == seg[:, -1:])
    )
    return RowProjectors(
        seg=seg,
        zero_mask=zero_mask,
        lo_active=lo_active,
        hi_active=hi_active,
        _gid=gid,
        _counts=counts,
    )
