"""Synthetic distribution-on-covariate generators used in the experiments.

Experiment A draws Gaussian response distributions whose mean depends on two
covariates and whose spread depends on a third, so exactly three covariates
matter.  Experiment B draws zero-inflated negative binomial distributions
whose zero mass, success probability, and size each follow their own
covariate, so exactly four matter.  Covariates and latent distribution
parameters come from separate random streams, which keeps the covariates
identical when only the grid size changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit
from scipy.stats import nbinom, norm

from .data import QuantileMatrix, make_grid
from .errors import DataError
from .regression import Design

_MAX_REDRAWS = 100


@dataclass(frozen=True)
class SimConfigA:
    """Gaussian quantile responses: mu ~ x2 + x3, sigma ~ x1."""

    n: int
    p: int
    m: int
    mu0: float = 0.0
    beta: float = 3.0
    nu1: float = 1.0
    sigma0: float = 3.0
    kappa: float = 0.5
    nu2: float = 0.5
    x1_bound: float = 3.0


@dataclass(frozen=True)
class SimConfigB:
    """Zero-inflated negative binomial responses: alpha ~ x4, pi ~ x3, r ~ x1 + x2."""

    n: int
    p: int
    m: int
    mu_alpha: float = logit(0.2)
    beta_alpha: float = 0.4
    sd_alpha: float = 0.1
    mu_pi: float = logit(0.5)
    beta_pi: float = 0.1
    sd_pi: float = 0.15
    mu_r: float = math.log(10.0)
    beta_r: float = 0.2
    sd_r: float = 0.15


def _truncated_normal(rng: np.random.Generator, size: int, bound: float) -> np.ndarray:
    lo, hi = norm.cdf(-bound), norm.cdf(bound)
    return norm.ppf(lo + rng.random(size) * (hi - lo))


def gen_experiment_a(cfg: SimConfigA, seed: int) -> tuple[Design, QuantileMatrix]:
    """Draw one Experiment-A dataset: centered design plus quantile rows."""
    if cfg.p < 3:
        raise ValueError("experiment A needs p >= 3")
    if cfg.nu2 <= 0 or cfg.nu1 < 0:
        raise ValueError("variance parameters must be positive")
    rng_cov, rng_lat = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2)
    )

    X = rng_cov.standard_normal((cfg.n, cfg.p))
    X[:, 0] = _truncated_normal(rng_cov, cfg.n, cfg.x1_bound)
    sigma_mean = cfg.sigma0 + cfg.kappa * X[:, 0]
    for _ in range(_MAX_REDRAWS):
        bad = sigma_mean <= 0.0
        if not np.any(bad):
            break
        X[bad, 0] = _truncated_normal(rng_cov, int(bad.sum()), cfg.x1_bound)
        sigma_mean = cfg.sigma0 + cfg.kappa * X[:, 0]
    else:
        raise DataError("could not draw x1 with positive spread parameter")

    mu = rng_lat.normal(cfg.mu0 + cfg.beta * (X[:, 1] + X[:, 2]), math.sqrt(cfg.nu1))
    sigma = rng_lat.gamma(shape=sigma_mean**2 / cfg.nu2, scale=cfg.nu2 / sigma_mean)

    grid = make_grid(cfg.m)
    rows = mu[:, None] + sigma[:, None] * norm.ppf(grid.points)[None, :]
    design = Design.from_raw(X)
    return design, QuantileMatrix(grid=grid, values=rows, box=None)


def gen_experiment_b(cfg: SimConfigB, seed: int) -> tuple[Design, QuantileMatrix]:
    """Draw one Experiment-B dataset of zero-inflated count quantile rows."""
    if cfg.p < 4:
        raise ValueError("experiment B needs p >= 4")
    rng_cov, rng_lat = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2)
    )

    X = rng_cov.standard_normal((cfg.n, cfg.p))
    alpha = expit(rng_lat.normal(cfg.mu_alpha + cfg.beta_alpha * X[:, 3], cfg.sd_alpha))
    pi = expit(rng_lat.normal(cfg.mu_pi + cfg.beta_pi * X[:, 2], cfg.sd_pi))
    r = np.exp(rng_lat.normal(cfg.mu_r + cfg.beta_r * (X[:, 0] + X[:, 1]), cfg.sd_r))

    grid = make_grid(cfg.m)
    u = grid.points[None, :]
    zero = u <= alpha[:, None]
    q = (u - alpha[:, None]) / (1.0 - alpha[:, None])
    vals = nbinom.ppf(np.where(zero, 0.5, q), n=r[:, None], p=pi[:, None])
    rows = np.where(zero, 0.0, vals)
    design = Design.from_raw(X)
    return design, QuantileMatrix(grid=grid, values=rows, box=(0.0, np.inf))
