"""Quantile-function data on a uniform grid.

A distribution-valued observation is stored as its quantile function sampled
at the grid points u_j = (j - 0.5) / m, j = 1..m.  On that grid the squared
2-Wasserstein distance between two distributions is the mean squared
difference of their quantile vectors.  Feasible quantile vectors are
nondecreasing and bounded by an optional box [b_lower, b_upper]; the
constraint system encodes exactly that feasible set as b - q @ A <= 0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class QuantileGrid:
    """Uniform probability grid with points (j - 0.5) / m for j = 1..m."""

    m: int
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"grid needs m >= 2, got m={self.m}")
        pts = np.asarray(self.points, dtype=float)
        if pts.shape != (self.m,):
            raise ValueError(f"grid points shape {pts.shape} does not match m={self.m}")
        if not (np.all(pts > 0.0) and np.all(pts < 1.0) and np.all(np.diff(pts) > 0)):
            raise ValueError("grid points must be strictly increasing inside (0, 1)")
        gaps = np.diff(pts)
        if np.max(np.abs(gaps - gaps[0])) > 1e-12 * max(1.0, abs(gaps[0])):
            raise ValueError("grid points must be uniformly spaced")


def make_grid(m: int) -> QuantileGrid:
    """Return the uniform m-point quantile grid."""
    if m < 2:
        raise ValueError(f"grid needs m >= 2, got m={m}")
    points = (np.arange(m, dtype=float) + 0.5) / m
    return QuantileGrid(m=m, points=points)


@dataclass(frozen=True)
class ConstraintSystem:
    """Monotonicity-plus-box constraints on an m-point quantile vector.

    The m x (m+1) matrix A has column 1 equal to e_1 (lower box), column c
    for 2 <= c <= m equal to e_c - e_{c-1} (nondecreasing steps), and column
    m+1 equal to -e_m (upper box).  With b = (b_lower, 0, ..., 0, -b_upper),
    a vector q is feasible iff b - q @ A <= 0.
    """

    m: int
    b_lower: float = -np.inf
    b_upper: float = np.inf

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"constraint system needs m >= 2, got m={self.m}")
        if not self.b_lower < self.b_upper:
            raise ValueError(
                f"box must satisfy b_lower < b_upper, got [{self.b_lower}, {self.b_upper}]"
            )

    @property
    def box(self) -> tuple[float, float]:
        return (self.b_lower, self.b_upper)

    def matrix(self) -> np.ndarray:
        """Dense A, mainly for tests; solvers use the banded structure."""
        m = self.m
        A = np.zeros((m, m + 1))
        A[0, 0] = 1.0
        for c in range(1, m):
            A[c - 1, c] = -1.0
            A[c, c] = 1.0
        A[m - 1, m] = -1.0
        return A

    def rhs(self) -> np.ndarray:
        b = np.zeros(self.m + 1)
        b[0] = self.b_lower
        b[-1] = -self.b_upper
        return b

    def constraint_values(self, Q: np.ndarray) -> np.ndarray:
        """Q @ A for rows Q (n x m) without materializing A."""
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        out = np.empty((Q.shape[0], self.m + 1))
        out[:, 0] = Q[:, 0]
        out[:, 1:-1] = np.diff(Q, axis=1)
        out[:, -1] = -Q[:, -1]
        return out


def check_feasible(
    q: np.ndarray, cs: ConstraintSystem, atol: float = 1e-9
) -> tuple[bool, np.ndarray]:
    """Check one quantile vector against a constraint system.

    Returns (feasible, violated) where violated holds the constraint numbers
    with b - q @ A > atol, counted from 1 in the math convention: 1 is the
    lower box, 2..m the monotonicity steps, m+1 the upper box.
    """
    q = np.asarray(q, dtype=float)
    if q.ndim != 1 or q.shape[0] != cs.m:
        raise ValueError(f"expected a length-{cs.m} vector, got shape {q.shape}")
    slack = cs.rhs() - cs.constraint_values(q)[0]
    violated = np.flatnonzero(slack > atol) + 1
    return violated.size == 0, violated


@dataclass(frozen=True)
class QuantileMatrix:
    """n quantile rows on a shared grid, with an optional box attached."""

    grid: QuantileGrid
    values: np.ndarray = field(repr=False)
    subject_ids: tuple[str, ...] | None = None
    box: tuple[float, float] | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[1] != self.grid.m:
            raise ValueError(
                f"values shape {vals.shape} does not match grid m={self.grid.m}"
            )
        if self.subject_ids is not None and len(self.subject_ids) != vals.shape[0]:
            raise ValueError("subject_ids length does not match number of rows")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def constraint_system(self) -> ConstraintSystem:
        lo, hi = self.box if self.box is not None else (-np.inf, np.inf)
        return ConstraintSystem(m=self.grid.m, b_lower=lo, b_upper=hi)

    def validate(self, atol: float = 1e-9) -> None:
        """Raise DataError if any row fails monotonicity or leaves the box."""
        vals = self.values
        if not np.all(np.isfinite(vals)):
            raise DataError("quantile values must be finite")
        if np.any(np.diff(vals, axis=1) < -atol):
            bad = int(np.where(np.diff(vals, axis=1) < -atol)[0][0])
            raise DataError(f"row {bad} is not nondecreasing")
        if self.box is not None:
            lo, hi = self.box
            if np.any(vals < lo - atol) or np.any(vals > hi + atol):
                raise DataError(f"values leave the box [{lo}, {hi}]")


def empirical_quantiles(
    values_by_subject: dict[str, np.ndarray],
    grid: QuantileGrid,
    box: tuple[float, float] | None = None,
    method: str = "linear",
    subjects: list[str] | None = None,
) -> QuantileMatrix:
    """Sample quantile rows from raw per-subject readings.

    Each subject's readings are reduced to sample quantiles at the grid
    points using the linear-interpolation estimator by default (numpy's
    "linear", the common statistical-software default); `method` accepts any
    numpy quantile method name.  When a box is given, raw readings are
    clipped into it before the quantiles are taken and the resulting row is
    clipped again, so every row is feasible for the box by construction.

    `subjects` optionally fixes the roster and row order; subjects missing
    from the data raise DataError.  Without it the roster is every subject in
    the data, sorted by id so row order never depends on input order.
    Subjects with fewer readings than grid points are kept but trigger a
    warning, since their rows interpolate a short sample.
    """
    roster = list(subjects) if subjects is not None else sorted(values_by_subject)
    if not roster:
        raise DataError("no subjects to process")
    rows = np.empty((len(roster), grid.m))
    for i, sid in enumerate(roster):
        vals = np.asarray(values_by_subject.get(sid, ()), dtype=float)
        vals = vals[~np.isnan(vals)] if vals.size else vals
        if vals.size == 0:
            raise DataError(f"subject {sid!r} has no readings")
        if not np.all(np.isfinite(vals)):
            raise DataError(f"subject {sid!r} has non-finite readings")
        if vals.size < grid.m:
            warnings.warn(
                f"subject {sid!r} has {vals.size} readings for {grid.m} grid points",
                stacklevel=2,
            )
        if box is not None:
            vals = np.clip(vals, box[0], box[1])
        rows[i] = np.quantile(vals, grid.points, method=method)
    if box is not None:
        np.clip(rows, box[0], box[1], out=rows)
    return QuantileMatrix(grid=grid, values=rows, subject_ids=tuple(roster), box=box)


def wasserstein2_sq(q: np.ndarray, p: np.ndarray) -> float:
    """Squared 2-Wasserstein distance between two same-grid quantile rows."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if q.shape != p.shape or q.ndim != 1:
        raise ValueError(f"quantile rows must share one grid, got {q.shape} and {p.shape}")
    return float(np.mean((q - p) ** 2))


def wasserstein2_sq_rows(Q: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Row-wise squared 2-Wasserstein distances between two stacked matrices."""
    Q = np.asarray(Q, dtype=float)
    P = np.asarray(P, dtype=float)
    if Q.shape != P.shape:
        raise ValueError(f"shape mismatch: {Q.shape} vs {P.shape}")
    return np.mean((Q - P) ** 2, axis=-1)
