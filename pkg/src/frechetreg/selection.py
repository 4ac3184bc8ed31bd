"""Variable selection with error control, plus a cross-validation comparator.

Complementary-pairs stability selection refits the allowance vector on B
disjoint half-sample pairs per budget tau and records how often each variable
survives.  A variable is selected when its selection proportion clears a
threshold calibrated so the expected number of low-selection-probability
variables kept is at most K; thresholds come either from the classical
quadratic bound ("mb") or from the sharper tail bounds for r-concave
selection-proportion distributions ("r-concave"), taking the better of the
-1/2-concave bound over all 2B half-samples and the -1/4-concave bound on
simultaneous selection over the B pairs.  The "any vote" rule unions the
per-tau selections over budgets whose average model size stays below a
fraction of p.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import brentq, minimize_scalar

from .data import ConstraintSystem, wasserstein2_sq_rows
from .errors import ConvergenceError
from .objective import SparsityProblem
from .options import SolverOptions
from .projection import solve_embedded
from .regression import Design
from .solvers import gsd_fit, solution_path

_PINV_RCOND = 1e-10


@dataclass(frozen=True)
class SubsamplePlan:
    """B complementary pairs of disjoint half-samples of size floor(n/2)."""

    n: int
    B: int
    seed: int
    pairs: tuple[tuple[np.ndarray, np.ndarray], ...] = field(repr=False)

    @classmethod
    def draw(cls, n: int, B: int, seed: int) -> "SubsamplePlan":
        if n < 4:
            raise ValueError("need at least 4 observations to split in halves")
        if B < 1:
            raise ValueError("B must be positive")
        rng = np.random.default_rng(seed)
        half = n // 2
        pairs = []
        for _ in range(B):
            perm = rng.permutation(n)
            pairs.append((np.sort(perm[:half]), np.sort(perm[half : 2 * half])))
        return cls(n=n, B=B, seed=seed, pairs=tuple(pairs))


@dataclass(frozen=True)
class StabilityResult:
    """Selection proportions Pi_hat and average model sizes q_hat per tau."""

    taus: np.ndarray = field(repr=False)
    pi_hat: np.ndarray = field(repr=False)
    q_hat: np.ndarray = field(repr=False)
    B: int
    seed: int
    names: tuple[str, ...]
    failed_pairs: np.ndarray = field(repr=False)

    @property
    def p(self) -> int:
        return self.pi_hat.shape[1]


def _half_supports(
    X_half: np.ndarray,
    Y_half: np.ndarray,
    cs: ConstraintSystem,
    taus: np.ndarray,
    opts: SolverOptions,
) -> tuple[np.ndarray, np.ndarray]:
    """Fit one half-sample at every tau; returns (supports, failed) arrays."""
    design = Design.from_raw(X_half)
    problem = SparsityProblem(design, Y_half, cs, opts)
    supports = np.zeros((taus.size, design.p), dtype=bool)
    failed = np.zeros(taus.size, dtype=bool)
    for t, tau in enumerate(taus):
        try:
            lam, _ = gsd_fit(design, Y_half, cs, float(tau), opts=opts, problem=problem)
            supports[t] = lam > 0.0
        except ConvergenceError:
            failed[t] = True
    return supports, failed


def stability_paths(
    design: Design,
    Y: np.ndarray,
    cs: ConstraintSystem,
    taus: np.ndarray,
    B: int = 50,
    seed: int = 0,
    opts: SolverOptions | None = None,
    n_jobs: int = 1,
) -> StabilityResult:
    """Selection proportions over B complementary half-sample pairs.

    Covariates are re-centered within each half-sample.  The 2B fits per tau
    are independent jobs, so execution order cannot change the result; a fit
    that fails to converge drops its whole pair from the denominator at that
    tau (with a warning).
    """
    opts = opts or SolverOptions()
    taus = np.asarray(taus, dtype=float)
    Y = np.asarray(Y, dtype=float)
    plan = SubsamplePlan.draw(design.n, B, seed)

    jobs = []
    for idx_a, idx_b in plan.pairs:
        jobs.append((design.X[idx_a], Y[idx_a]))
        jobs.append((design.X[idx_b], Y[idx_b]))
    results = Parallel(n_jobs=n_jobs)(
        delayed(_half_supports)(Xh, Yh, cs, taus, opts) for Xh, Yh in jobs
    )

    T, p = taus.size, design.p
    counts = np.zeros((T, p))
    pair_failed = np.zeros((B, T), dtype=bool)
    for b in range(B):
        _, fail_a = results[2 * b]
        _, fail_b = results[2 * b + 1]
        pair_failed[b] = fail_a | fail_b
    for b in range(B):
        sup_a, _ = results[2 * b]
        sup_b, _ = results[2 * b + 1]
        ok = ~pair_failed[b]
        counts[ok] += sup_a[ok]
        counts[ok] += sup_b[ok]

    n_failed = pair_failed.sum(axis=0)
    if np.any(n_failed):
        warnings.warn(
            f"{int(n_failed.sum())} subsample pair fits failed and were dropped",
            stacklevel=2,
        )
    denom = 2.0 * (B - n_failed)
    denom[denom == 0] = np.nan
    pi_hat = counts / denom[:, None]
    return StabilityResult(
        taus=taus.copy(),
        pi_hat=pi_hat,
        q_hat=np.nansum(pi_hat, axis=1),
        B=B,
        seed=seed,
        names=design.names,
        failed_pairs=n_failed,
    )


# ---------------------------------------------------------------------------
# threshold calibration


def _powerlaw_mean(a: float, j: int, s: float) -> float:
    i = np.arange(j + 1, dtype=float)
    w = (a + i) ** (-s)
    return float((i * w).sum() / w.sum())


def _solve_body_root(j: int, mu: float, s: float) -> float:
    """a such that the power-law body on {0..j} has mean mu; inf if unreachable."""
    hi = 1e12
    if _powerlaw_mean(hi, j, s) <= mu:
        return math.inf
    lo = 1e-12
    if _powerlaw_mean(lo, j, s) >= mu:
        return lo
    root = brentq(
        lambda la: _powerlaw_mean(math.exp(la), j, s) - mu,
        math.log(lo),
        math.log(hi),
        rtol=1e-12,
        maxiter=200,
    )
    return math.exp(root)


def _mixture_tail(a: float, k: int, t_idx: int, mu: float, s: float) -> float:
    """Tail mass at >= t_idx of the power-law body {0..k} plus atom at k+1.

    The atom weight is pinned by the mean constraint; the expression below is
    the resulting P(X >= t_idx) in closed form.
    """
    i = np.arange(k + 1, dtype=float)
    w = (a + i) ** (-s)
    num = (k + 1 - mu) * w[:t_idx].sum()
    denom = ((k + 1 - i) * w).sum()
    return 1.0 - num / denom


def _rconcave_tail_max(t_idx: int, n: int, mean_frac: float, s: float) -> float:
    """Max of P(X >= t_idx/n) over r-concave pmfs on the {0..n}/n lattice.

    r = -1/s; the pmf must have mean at most mean_frac.  The maximizer lies
    in the family of truncated power laws p_i proportional to (a + i)^(-s)
    on {0..k} with a boundary atom at k+1 no heavier than the power-law
    extension, so the search sweeps k and optimizes a within the bracket
    where the atom weight stays in [0, 1].  Thresholds at or below twice the
    mean return the trivial bound 1.
    """
    if t_idx <= 0:
        return 1.0
    if t_idx > n:
        return 0.0
    mu = mean_frac * n
    if mu <= 0.0:
        return 0.0
    if t_idx <= 2.0 * mu:
        return 1.0

    roots = {j: _solve_body_root(j, mu, s) for j in range(t_idx - 1, n + 1)}
    best = 0.0
    for k in range(t_idx - 1, n):
        a_lo = roots[k + 1]
        a_hi = roots[k]
        if not math.isfinite(a_hi):
            a_hi = max(1e8, 1e4 * a_lo)
        if a_hi <= a_lo:
            best = max(best, _mixture_tail(a_lo, k, t_idx, mu, s))
            continue
        res = minimize_scalar(
            lambda a: -_mixture_tail(a, k, t_idx, mu, s),
            bounds=(a_lo, a_hi),
            method="bounded",
            options={"xatol": 1e-10 * (1.0 + a_hi)},
        )
        cand = max(
            -float(res.fun),
            _mixture_tail(a_lo, k, t_idx, mu, s),
            _mixture_tail(a_hi, k, t_idx, mu, s),
        )
        best = max(best, cand)
    return min(1.0, best)


def _bound_value(j: int, B: int, phi: float) -> float:
    """d(B, pi, phi) at lattice threshold pi = j / (2B): best applicable tail bound."""
    d_half = _rconcave_tail_max(j, 2 * B, phi, s=2.0)
    d = min(1.0, d_half)
    if j > B:
        d_quarter = _rconcave_tail_max(j - B, B, phi * phi, s=4.0)
        d = min(d, d_quarter)
    return d


@dataclass(frozen=True)
class ThresholdResult:
    pi_thr: float
    saturated: bool
    bound_value: float
    mode: str


def threshold_for_bound(
    B: int, phi: float, K: float, p: int, mode: str = "r-concave"
) -> ThresholdResult:
    """Smallest usable threshold with expected false selections at most K.

    phi is the average relative model size q_hat / p.  Mode "mb" uses the
    closed form pi = min(1, (1 + phi^2 p / K) / 2); mode "r-concave" scans
    the lattice {j/(2B)} above 1/2 for the first point where the r-concave
    tail bound times p drops to K.  If even pi = 1 fails, the threshold
    saturates at 1 and is flagged.
    """
    if not 0.0 <= phi <= 1.0:
        raise ValueError(f"phi must be in [0, 1], got {phi}")
    if K <= 0 or p < 1 or B < 1:
        raise ValueError("need K > 0, p >= 1, B >= 1")

    if mode == "mb":
        pi = 0.5 * (1.0 + p * phi * phi / K)
        lattice_floor = (B + 1) / (2.0 * B)
        if pi > 1.0:
            return ThresholdResult(1.0, True, p * phi * phi, mode)
        pi = max(pi, lattice_floor)
        return ThresholdResult(pi, False, p * phi * phi / (2.0 * pi - 1.0), mode)

    if mode != "r-concave":
        raise ValueError(f"unknown bound mode {mode!r}")

    lo, hi = B + 1, 2 * B
    d_hi = _bound_value(hi, B, phi)
    if d_hi * p > K:
        return ThresholdResult(1.0, True, d_hi * p, mode)
    # d is nonincreasing in the threshold, so bisect for the first lattice
    # point where the bound clears K
    d_lo = _bound_value(lo, B, phi)
    if d_lo * p <= K:
        return ThresholdResult(lo / (2.0 * B), False, d_lo * p, mode)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _bound_value(mid, B, phi) * p <= K:
            hi = mid
        else:
            lo = mid
    d_final = _bound_value(hi, B, phi)
    return ThresholdResult(hi / (2.0 * B), False, d_final * p, mode)


@dataclass(frozen=True)
class SelectionReport:
    """Any-vote selection over admissible taus plus the per-tau calibration."""

    selected: np.ndarray = field(repr=False)
    selected_by_tau: np.ndarray = field(repr=False)
    pi_thr: np.ndarray = field(repr=False)
    saturated: np.ndarray = field(repr=False)
    admissible: np.ndarray = field(repr=False)
    K: float
    mode: str


def select_any_vote(
    result: StabilityResult,
    K: float = 1.0,
    mode: str = "r-concave",
    max_rel_size: float = 2.0 / 3.0,
) -> SelectionReport:
    """Union of per-tau stable sets over taus with q_hat/p <= max_rel_size."""
    T, p = result.pi_hat.shape
    pi_thr = np.ones(T)
    saturated = np.zeros(T, dtype=bool)
    with np.errstate(invalid="ignore"):
        rel = result.q_hat / p
    admissible = np.isfinite(rel) & (rel <= max_rel_size)
    for t in range(T):
        if not admissible[t]:
            continue
        thr = threshold_for_bound(result.B, float(np.clip(rel[t], 0.0, 1.0)), K, p, mode)
        pi_thr[t] = thr.pi_thr
        saturated[t] = thr.saturated
    selected_by_tau = (result.pi_hat >= pi_thr[:, None] - 1e-12) & admissible[:, None]
    selected = np.flatnonzero(np.any(selected_by_tau, axis=0))
    return SelectionReport(
        selected=selected,
        selected_by_tau=selected_by_tau,
        pi_thr=pi_thr,
        saturated=saturated,
        admissible=admissible,
        K=K,
        mode=mode,
    )


# ---------------------------------------------------------------------------
# cross-validation comparator


@dataclass(frozen=True)
class CrossValidationResult:
    best_tau: float
    taus: np.ndarray = field(repr=False)
    cv_curve: np.ndarray = field(repr=False)
    support: np.ndarray = field(repr=False)
    lam_best: np.ndarray = field(repr=False)
    n_folds: int
    seed: int


def _refit_predict(
    X_tr: np.ndarray,
    Y_tr: np.ndarray,
    X_te: np.ndarray,
    support: np.ndarray,
    cs: ConstraintSystem,
    opts: SolverOptions,
) -> np.ndarray:
    """Unpenalized fit on the support columns, projected test predictions."""
    ybar = Y_tr.mean(axis=0)
    if support.size == 0:
        Yhat = np.tile(ybar, (X_te.shape[0], 1))
    else:
        Xs = X_tr[:, support]
        Xs_te = X_te[:, support]
        pinv = np.linalg.pinv(Xs.T @ Xs, rcond=_PINV_RCOND, hermitian=True)
        Yhat = ybar + Xs_te @ (pinv @ (Xs.T @ Y_tr))
    return solve_embedded(Yhat, cs, opts=opts).Q


def _cv_fold_errors(
    X: np.ndarray,
    Y: np.ndarray,
    tr_idx: np.ndarray,
    te_idx: np.ndarray,
    cs: ConstraintSystem,
    taus: np.ndarray,
    opts: SolverOptions,
    method: str,
    warm_start: bool,
) -> np.ndarray:
    X_tr = X[tr_idx]
    keep = np.flatnonzero(np.ptp(X_tr, axis=0) > 0.0)
    if keep.size < X_tr.shape[1]:
        warnings.warn(
            f"dropping {X_tr.shape[1] - keep.size} constant covariate column(s) "
            "inside a fold",
            stacklevel=2,
        )
        X_tr = X_tr[:, keep]
    d_tr = Design.from_raw(X_tr)
    Y_tr = Y[tr_idx]
    X_te = d_tr.center(X[np.ix_(te_idx, keep)])
    path = solution_path(
        d_tr, Y_tr, cs, taus, method=method, opts=opts, warm_start=warm_start
    )
    errors = np.zeros(taus.size)
    cache: dict[tuple[int, ...], np.ndarray] = {}
    for t, support in enumerate(path.supports()):
        key = tuple(support.tolist())
        if key not in cache:
            cache[key] = _refit_predict(d_tr.X, Y_tr, X_te, support, cs, opts)
        errors[t] = float(np.sum(wasserstein2_sq_rows(cache[key], Y[te_idx])))
    return errors


def cross_validate_tau(
    design: Design,
    Y: np.ndarray,
    cs: ConstraintSystem,
    taus: np.ndarray,
    n_folds: int = 10,
    seed: int = 0,
    opts: SolverOptions | None = None,
    method: str = "gsd",
    warm_start: bool = True,
    n_jobs: int = 1,
) -> CrossValidationResult:
    """Pick the budget tau by K-fold prediction error.

    Each fold fits the full path on the training part, refits the selected
    support without penalty, and accumulates held-out squared Wasserstein
    error; the winning tau is refit on all data to report the final support.
    Folds re-center covariates on their own training rows.
    """
    opts = opts or SolverOptions()
    taus = np.asarray(taus, dtype=float)
    Y = np.asarray(Y, dtype=float)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(design.n)
    folds = np.array_split(perm, n_folds)

    fold_jobs = []
    for f in range(n_folds):
        te_idx = folds[f]
        tr_idx = np.concatenate([folds[g] for g in range(n_folds) if g != f])
        fold_jobs.append((tr_idx, te_idx))
    per_fold = Parallel(n_jobs=n_jobs)(
        delayed(_cv_fold_errors)(
            design.X, Y, tr, te, cs, taus, opts, method, warm_start
        )
        for tr, te in fold_jobs
    )
    cv_curve = np.sum(per_fold, axis=0)

    best_tau = float(taus[int(np.argmin(cv_curve))])
    lam_best, _ = gsd_fit(design, Y, cs, best_tau, opts=opts)
    support = np.flatnonzero(lam_best > 0.0)
    return CrossValidationResult(
        best_tau=best_tau,
        taus=taus.copy(),
        cv_curve=cv_curve,
        support=support,
        lam_best=lam_best,
        n_folds=n_folds,
        seed=seed,
    )
