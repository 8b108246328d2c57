"""Point estimators of the average treatment effect from observed data.

The workhorse is the two-step adjusted estimator: regress the observed
outcomes on the centered covariates separately within each arm and difference
the fitted intercepts. The debiased variant subtracts a leverage-weighted
residual correction. The one-step interacted regression is kept as an
algebraically equivalent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .design import DesignMatrix
from .errors import (
    ArmRankDeficient,
    ArmTooSmall,
    DimensionMismatch,
    EmptyArm,
    SingularSystem,
)
from .population import PotentialOutcomes
from .randomization import Assignment

_RANK_RTOL = 1e-11


@dataclass(frozen=True)
class ObservedData:
    """One realized experiment: observed outcomes, assignment, design."""

    y_obs: np.ndarray
    assignment: Assignment
    design: DesignMatrix

    def __post_init__(self) -> None:
        y = np.asarray(self.y_obs, dtype=float)
        object.__setattr__(self, "y_obs", y)
        if y.ndim != 1 or y.size != self.design.n or self.assignment.n != self.design.n:
            raise DimensionMismatch("observed outcomes, assignment, and design disagree")
        if not np.all(np.isfinite(y)):
            raise DimensionMismatch("observed outcomes must be finite")


def observe(po: PotentialOutcomes, assignment: Assignment, design: DesignMatrix) -> ObservedData:
    """Reveal one potential outcome per unit according to the assignment."""
    y = po.y0.copy()
    y[assignment.treated] = po.y1[assignment.treated]
    return ObservedData(y_obs=y, assignment=assignment, design=design)


@dataclass(frozen=True)
class ArmFit:
    """Within-arm least-squares fit of outcomes on the centered covariates.

    ``arm_leverages`` is the hat-matrix diagonal of the arm's covariate rows
    alone (no intercept column), the quantity the leverage-rescaled variance
    estimators need. ``indices`` are the arm's unit indices in the full
    sample, so full-sample leverages can be aligned with the residuals.
    """

    arm: int
    mu_hat: float
    beta_hat: np.ndarray
    resid: np.ndarray
    arm_leverages: np.ndarray
    gram_condition: float
    indices: np.ndarray
    n_total: int
    y_mean: float

    @property
    def n_arm(self) -> int:
        return self.indices.size

    @property
    def p(self) -> int:
        return self.beta_hat.size


def diff_in_means(obs: ObservedData) -> float:
    """Mean observed outcome among treated minus among controls."""
    a = obs.assignment
    if a.n1 == 0 or a.n0 == 0:
        raise EmptyArm("both arms must be non-empty")
    return float(np.mean(obs.y_obs[a.treated]) - np.mean(obs.y_obs[a.control]))


def generic_adjusted(obs: ObservedData, beta1: np.ndarray, beta0: np.ndarray) -> float:
    """Adjusted difference of means for fixed coefficient vectors.

    Unbiased for the ATE for any fixed beta1, beta0 because the centered
    covariates average to zero over the randomization.
    """
    beta1 = np.asarray(beta1, dtype=float)
    beta0 = np.asarray(beta0, dtype=float)
    p = obs.design.p
    if beta1.shape != (p,) or beta0.shape != (p,):
        raise DimensionMismatch(f"coefficient vectors must have length {p}")
    a = obs.assignment
    x = obs.design.x
    treated_part = np.mean(obs.y_obs[a.treated] - x[a.treated] @ beta1)
    control_part = np.mean(obs.y_obs[a.control] - x[a.control] @ beta0)
    return float(treated_part - control_part)


def fit_arm(obs: ObservedData, arm: int) -> ArmFit:
    """Least-squares fit with intercept on one arm's rows.

    Uses the full-sample-centered covariates; the arm's covariate mean is
    absorbed by the intercept. Solved through a thin QR factorization with a
    relative-pivot rank guard.
    """
    if arm not in (0, 1):
        raise ValueError("arm must be 0 or 1")
    a = obs.assignment
    idx = a.treated if arm == 1 else a.control
    n_t = idx.size
    p = obs.design.p
    if n_t < p + 2:
        raise ArmTooSmall(f"arm {arm} has {n_t} units; need at least p + 2 = {p + 2}")

    x_t = obs.design.x[idx]
    y_t = obs.y_obs[idx]
    z = np.column_stack([np.ones(n_t), x_t])
    q, r = np.linalg.qr(z)
    diag = np.abs(np.diag(r))
    if diag.min() <= _RANK_RTOL * diag.max():
        raise ArmRankDeficient(f"arm {arm} covariate block is singular to tolerance")
    coef = solve_triangular(r, q.T @ y_t)
    resid = y_t - z @ coef

    if p > 0:
        qx, rx = np.linalg.qr(x_t)
        arm_lev = np.clip(np.einsum("ij,ij->i", qx, qx), 0.0, 1.0)
        sv = np.linalg.svd(rx, compute_uv=False)
        gram_condition = float((sv[0] / sv[-1]) ** 2) if sv[-1] > 0 else np.inf
    else:
        arm_lev = np.zeros(n_t)
        gram_condition = 1.0

    return ArmFit(
        arm=arm,
        mu_hat=float(coef[0]),
        beta_hat=coef[1:],
        resid=resid,
        arm_leverages=arm_lev,
        gram_condition=gram_condition,
        indices=idx,
        n_total=obs.design.n,
        y_mean=float(np.mean(y_t)),
    )


def adjusted_estimate(fit1: ArmFit, fit0: ArmFit) -> float:
    """Difference of the fitted within-arm intercepts."""
    return fit1.mu_hat - fit0.mu_hat


@dataclass(frozen=True)
class PointEstimates:
    """All point estimates from one realized experiment."""

    tau_unadj: float
    tau_adj: float
    tau_adj_de: float
    delta_hat1: float
    delta_hat0: float


def debiased_estimate(fit1: ArmFit, fit0: ArmFit, d: DesignMatrix) -> PointEstimates:
    """Adjusted estimate minus its leverage-weighted bias correction.

    Each correction term averages the arm's fitted residuals against the
    full-sample leverage scores restricted to that arm.
    """
    lev = d.leverages
    delta_hat1 = float(np.mean(fit1.resid * lev[fit1.indices]))
    delta_hat0 = float(np.mean(fit0.resid * lev[fit0.indices]))
    n1, n0 = fit1.n_arm, fit0.n_arm
    tau_adj = adjusted_estimate(fit1, fit0)
    tau_adj_de = tau_adj - (n1 / n0 * delta_hat0 - n0 / n1 * delta_hat1)
    return PointEstimates(
        tau_unadj=fit1.y_mean - fit0.y_mean,
        tau_adj=tau_adj,
        tau_adj_de=tau_adj_de,
        delta_hat1=delta_hat1,
        delta_hat0=delta_hat0,
    )


def lin_interacted(obs: ObservedData) -> float:
    """Treatment coefficient in the single OLS with full interactions.

    Regresses the observed outcomes on an intercept, the treatment
    indicator, the centered covariates, and their products with the
    indicator. Algebraically identical to the two-step adjusted estimator;
    kept as an independent implementation for cross-checking.
    """
    a = obs.assignment
    x = obs.design.x
    t = a.indicator()
    z = np.column_stack([np.ones(a.n), t, x, t[:, None] * x])
    coef, _, rank, _ = np.linalg.lstsq(z, obs.y_obs, rcond=None)
    if rank < z.shape[1]:
        raise SingularSystem("interacted regression is rank deficient")
    return float(coef[1])
