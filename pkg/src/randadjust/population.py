"""Fixed potential-outcome bookkeeping and population-level diagnostics.

Everything here is a deterministic function of the full potential-outcome
schedule (both arms for every unit), so none of it is observable in a real
experiment. It supplies the targets and diagnostic scales that the Monte
Carlo harness measures estimators against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import DesignMatrix
from .errors import DegenerateArm, DimensionMismatch


@dataclass(frozen=True)
class PotentialOutcomes:
    """Paired fixed outcome vectors y1 = Y(1) and y0 = Y(0)."""

    y1: np.ndarray
    y0: np.ndarray

    def __post_init__(self) -> None:
        y1 = np.asarray(self.y1, dtype=float)
        y0 = np.asarray(self.y0, dtype=float)
        object.__setattr__(self, "y1", y1)
        object.__setattr__(self, "y0", y0)
        if y1.ndim != 1 or y0.ndim != 1 or y1.size != y0.size:
            raise DimensionMismatch("y1 and y0 must be equal-length vectors")
        if not (np.all(np.isfinite(y1)) and np.all(np.isfinite(y0))):
            raise DimensionMismatch("potential outcomes must be finite")

    @property
    def n(self) -> int:
        return self.y1.size

    @property
    def tau(self) -> float:
        """Average treatment effect over the fixed population."""
        return float(np.mean(self.y1 - self.y0))


@dataclass(frozen=True)
class PopulationOls:
    """Population least-squares targets for each arm.

    ``e1`` and ``e0`` are the potential residuals; by construction each is
    orthogonal to the intercept and to every covariate column.
    """

    mu1: float
    mu0: float
    beta1: np.ndarray
    beta0: np.ndarray
    e1: np.ndarray
    e0: np.ndarray

    @property
    def n(self) -> int:
        return self.e1.size


@dataclass(frozen=True)
class ResidualDiagnostics:
    """Scalar summaries of the potential residuals.

    e2 is the larger of the two mean-square residual scales, e_inf the larger
    max-absolute residual, rho_e the sample correlation between the two
    residual vectors (nan when either vector is zero; see
    ``zero_residuals``). ``sigma_lower`` is the audited lower bound
    (1 + rho_e) * min(n1/n0, n0/n1) * e2 on sigma_n2, and ``delta_bound`` is
    the Cauchy-Schwarz cap sqrt(e2 * kappa * p / n) on |delta|.
    """

    e2: float
    e_inf: float
    rho_e: float
    delta1: float
    delta0: float
    delta: float
    sigma_n2: float
    lindeberg: float
    sigma_lower: float
    delta_bound: float
    zero_residuals: bool


def population_ols(d: DesignMatrix, po: PotentialOutcomes) -> PopulationOls:
    """Regress each potential-outcome vector on the centered covariates.

    Because the columns are centered, the intercept is the arm mean and the
    slope solves the pure covariate system; both come from the cached thin
    QR factors, never from an explicit inverse.
    """
    if po.n != d.n:
        raise DimensionMismatch(f"outcomes have n={po.n}, design has n={d.n}")
    out: dict[int, tuple[float, np.ndarray, np.ndarray]] = {}
    for t, y in ((1, po.y1), (0, po.y0)):
        mu = float(np.mean(y))
        beta = d.solve_coeffs(y - mu)
        e = y - mu - d.x @ beta
        out[t] = (mu, beta, e)
    return PopulationOls(
        mu1=out[1][0], mu0=out[0][0],
        beta1=out[1][1], beta0=out[0][1],
        e1=out[1][2], e0=out[0][2],
    )


def delta_terms(pols: PopulationOls, d: DesignMatrix) -> tuple[float, float]:
    """Leverage-weighted mean residual for each arm: n^-1 sum_i e_i(t) H_ii."""
    delta1 = float(np.mean(pols.e1 * d.leverages))
    delta0 = float(np.mean(pols.e0 * d.leverages))
    return delta1, delta0


def _sigma_n2(e1: np.ndarray, e0: np.ndarray, n1: int, n0: int) -> float:
    """Both algebraic forms of the design-based variance, cross-asserted."""
    n = e1.size
    three_term = (
        float(np.dot(e1, e1)) / n1
        + float(np.dot(e0, e0)) / n0
        - float(np.dot(e1 - e0, e1 - e0)) / n
    )
    comb = math.sqrt(n0 / (n1 * n)) * e1 + math.sqrt(n1 / (n0 * n)) * e0
    sum_sq = float(np.dot(comb, comb))
    assert abs(three_term - sum_sq) <= 1e-10 * max(1.0, abs(sum_sq)), \
        "variance forms disagree beyond tolerance"
    # the sum-of-squares form is exact-nonnegative; prefer it for the value
    return sum_sq


def asymptotic_variance(pols: PopulationOls, n1: int, n0: int) -> float:
    """Design-based variance of sqrt(n) times the adjusted estimator's error.

    Computed from the three-term difference form; the equivalent
    sum-of-squares form is evaluated as an internal consistency assertion,
    which also certifies non-negativity.
    """
    n = pols.n
    if n1 + n0 != n:
        raise DimensionMismatch(f"n1 + n0 = {n1 + n0} does not match n = {n}")
    if n1 < 2 or n0 < 2:
        raise DegenerateArm(f"need n1, n0 >= 2, got ({n1}, {n0})")
    return _sigma_n2(pols.e1, pols.e0, n1, n0)


def residual_diagnostics(pols: PopulationOls, d: DesignMatrix, n1: int, n0: int) -> ResidualDiagnostics:
    """All scalar residual diagnostics in one pass.

    A zero residual vector in either arm makes the correlation undefined;
    the report flags it instead of failing, and the correlation-based lower
    bound degrades to zero.
    """
    n = pols.n
    e1, e0 = pols.e1, pols.e0
    norm1 = float(np.linalg.norm(e1))
    norm0 = float(np.linalg.norm(e0))
    e2 = max(norm1**2, norm0**2) / n
    e_inf = max(
        float(np.max(np.abs(e1))) if e1.size else 0.0,
        float(np.max(np.abs(e0))) if e0.size else 0.0,
    )
    # numerically zero: negligible against the larger residual RMS (floor 1)
    tol = 1e-12 * math.sqrt(n) * max(1.0, norm1 / math.sqrt(n), norm0 / math.sqrt(n))
    zero = norm1 <= tol or norm0 <= tol
    rho_e = math.nan if zero else float(np.dot(e1, e0) / (norm1 * norm0))
    delta1, delta0 = delta_terms(pols, d)
    delta = max(abs(delta1), abs(delta0))
    if n1 + n0 != n:
        raise DimensionMismatch(f"n1 + n0 = {n1 + n0} does not match n = {n}")
    # diagnostics tolerate single-unit arms; the standalone variance op does not
    sigma_n2 = _sigma_n2(e1, e0, n1, n0)
    lindeberg = 0.0 if e2 == 0.0 else e_inf**2 / (n * e2)
    ratio = min(n1 / n0, n0 / n1)
    sigma_lower = 0.0 if zero else (1.0 + rho_e) * ratio * e2
    delta_bound = math.sqrt(e2 * d.kappa * d.p / n)
    return ResidualDiagnostics(
        e2=e2,
        e_inf=e_inf,
        rho_e=rho_e,
        delta1=delta1,
        delta0=delta0,
        delta=delta,
        sigma_n2=sigma_n2,
        lindeberg=lindeberg,
        sigma_lower=sigma_lower,
        delta_bound=delta_bound,
        zero_residuals=zero,
    )
