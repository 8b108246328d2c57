"""Conservative variance estimators and Wald-type confidence intervals.

All four HC estimators target the variance of sqrt(n) times the estimation
error, combining per-arm sums of (possibly rescaled) squared residuals with
n / (n_t (n_t - 1)) weights. Intervals therefore divide the estimate by n
before taking the square root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import DegenerateDf, LeverageAtOne, NegativeVariance
from .estimators import ArmFit

_LEVERAGE_GUARD = 1e-12

# target convention marker: estimates approximate Var(sqrt(n) * (tau_hat - tau))
SE_SCALE = "sqrt_n"


@dataclass(frozen=True)
class VarianceEstimates:
    """The four leverage-corrected variance estimates for one experiment."""

    hc0: float
    hc1: float
    hc2: float
    hc3: float
    se_scale: str = SE_SCALE

    def by_name(self) -> dict[str, float]:
        return {"hc0": self.hc0, "hc1": self.hc1, "hc2": self.hc2, "hc3": self.hc3}


@dataclass(frozen=True)
class WaldInterval:
    lower: float
    upper: float
    level: float
    critical: float

    @property
    def half_width(self) -> float:
        return (self.upper - self.lower) / 2.0


def _scaled_residuals(fit: ArmFit, j: int, n: int, p: int, hc1_arm_level: bool) -> np.ndarray:
    e = fit.resid
    if j == 0:
        return e
    if j == 1:
        if p == 0:
            # no regressors, nothing to correct
            return e
        if hc1_arm_level:
            df = fit.n_arm - p - 1
            if df <= 0:
                raise DegenerateDf(f"arm df = {df} for HC1 rescaling")
            return math.sqrt((fit.n_arm - 1) / df) * e
        if n <= p:
            raise DegenerateDf(f"n = {n} <= p = {p} for HC1 rescaling")
        return math.sqrt((n - 1) / (n - p)) * e
    h = fit.arm_leverages
    if np.any(h >= 1.0 - _LEVERAGE_GUARD):
        raise LeverageAtOne("an arm leverage is at 1; HC2/HC3 undefined")
    if j == 2:
        return e / np.sqrt(1.0 - h)
    if j == 3:
        return e / (1.0 - h)
    raise ValueError("j must be 0, 1, 2, or 3")


def hc_variance(fit1: ArmFit, fit0: ArmFit, j: int, hc1_arm_level: bool = False) -> float:
    """One HC variance estimate from the two within-arm fits.

    ``j`` picks the residual rescaling: 0 raw, 1 degrees-of-freedom, 2 and 3
    leverage-based with the within-arm leverages. The HC1 factor reads the
    total sample size and the covariate count; ``hc1_arm_level`` switches to
    per-arm degrees of freedom for sensitivity runs.
    """
    n = fit1.n_total
    p = fit1.p
    total = 0.0
    for fit in (fit1, fit0):
        e = _scaled_residuals(fit, j, n, p, hc1_arm_level)
        n_t = fit.n_arm
        total += n / (n_t * (n_t - 1)) * float(np.dot(e, e))
    return total


def variance_estimates(fit1: ArmFit, fit0: ArmFit, hc1_arm_level: bool = False) -> VarianceEstimates:
    """All four HC estimates at once."""
    return VarianceEstimates(
        hc0=hc_variance(fit1, fit0, 0, hc1_arm_level),
        hc1=hc_variance(fit1, fit0, 1, hc1_arm_level),
        hc2=hc_variance(fit1, fit0, 2, hc1_arm_level),
        hc3=hc_variance(fit1, fit0, 3, hc1_arm_level),
    )


def wald_interval(tau_hat: float, sigma2_hat: float, n: int, level: float) -> WaldInterval:
    """Normal-approximation interval tau_hat +/- z * sqrt(sigma2_hat / n)."""
    if sigma2_hat < 0:
        raise NegativeVariance(f"variance estimate {sigma2_hat} is negative")
    if not (0.0 < level < 1.0):
        raise ValueError("level must lie strictly between 0 and 1")
    critical = float(ndtri((1.0 + level) / 2.0))
    half = critical * math.sqrt(sigma2_hat / n)
    return WaldInterval(lower=tau_hat - half, upper=tau_hat + half, level=level, critical=critical)
