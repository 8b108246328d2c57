"""Covariate matrix construction, leverage diagnostics, and trimming.

The covariate matrix is always used column-centered and with full column
rank. All leverage computations go through a thin orthogonal factorization;
the cross-product matrix is never inverted explicitly, which keeps the
diagnostics stable even when the maximum leverage is close to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AllColumnsConstant,
    InvalidQuantilePair,
    NonFiniteInput,
)

DEFAULT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class RawCovariates:
    """Unprocessed n x q covariate matrix, one row per unit.

    Entries must be finite; n >= 2 and q >= 1.
    """

    data: np.ndarray
    names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ValueError("covariate data must be a 2-d array")
        object.__setattr__(self, "data", data)
        n, q = data.shape
        if n < 2 or q < 1:
            raise ValueError(f"need n >= 2 and q >= 1, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise NonFiniteInput("covariates contain NaN or infinite entries")
        if self.names is not None and len(self.names) != q:
            raise ValueError("names length does not match column count")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def q(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class DesignMatrix:
    """Centered, full-column-rank covariate matrix with cached diagnostics.

    Attributes
    ----------
    x : ndarray, shape (n, p)
        Centered covariates after dropping rank-deficient columns.
    leverages : ndarray, shape (n,)
        Diagonal of the hat matrix of ``x``; each entry lies in [0, 1] and
        they sum to p.
    kappa : float
        Maximum leverage score, in [p/n, 1].
    orthonormal : bool
        True when the columns were rescaled so that x'x/n is the identity.
    kept_columns : tuple of int
        Indices into the raw matrix of the retained columns.

    Instances are immutable and safe to share across threads.
    """

    x: np.ndarray
    leverages: np.ndarray
    kappa: float
    orthonormal: bool
    kept_columns: tuple[int, ...]
    # thin QR factors of x, cached for downstream least-squares solves
    q_factor: np.ndarray = field(repr=False, default=None)
    r_factor: np.ndarray = field(repr=False, default=None)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def hat_matrix(self) -> np.ndarray:
        """Full n x n hat matrix. Materializes O(n^2) memory; small n only."""
        return self.q_factor @ self.q_factor.T

    def solve_coeffs(self, y: np.ndarray) -> np.ndarray:
        """Least-squares coefficients of y on the centered columns."""
        from scipy.linalg import solve_triangular

        return solve_triangular(self.r_factor, self.q_factor.T @ y)


def _finite_or_raise(arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("input contains NaN or infinite entries")


def center_and_reduce(raw: RawCovariates, rank_tol: float = DEFAULT_RANK_TOL) -> DesignMatrix:
    """Center the columns and drop the ones that break full column rank.

    Columns are scanned in input order; a column is retained when its
    residual against the span of the already-retained columns exceeds
    ``rank_tol`` times the largest singular value, so the earliest maximal
    independent set wins. Leverages come from the thin QR of the retained
    block.

    Raises
    ------
    AllColumnsConstant
        If every centered column is numerically zero.
    NonFiniteInput
        If the raw matrix has non-finite entries.
    """
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    data = raw.data
    _finite_or_raise(data)

    centered = data - data.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    top = float(sv[0]) if sv.size else 0.0
    scale = max(1.0, float(np.abs(data).max()))
    if top <= 1e-13 * scale * math.sqrt(data.shape[0]):
        raise AllColumnsConstant("every centered column is numerically zero")
    target_rank = int(np.sum(sv > rank_tol * top))

    kept: list[int] = []
    basis = np.empty((raw.n, 0))
    for j in range(raw.q):
        col = centered[:, j]
        resid = col - basis @ (basis.T @ col)
        # one re-orthogonalization pass guards against cancellation
        resid -= basis @ (basis.T @ resid)
        norm = float(np.linalg.norm(resid))
        if norm > rank_tol * top:
            kept.append(j)
            basis = np.column_stack([basis, resid / norm])
            if len(kept) == target_rank:
                break

    x = centered[:, kept]
    return _finalize(x, kept, orthonormal=False)


def _finalize(x: np.ndarray, kept: list[int] | tuple[int, ...], orthonormal: bool) -> DesignMatrix:
    q, r = np.linalg.qr(x)
    leverages = np.einsum("ij,ij->i", q, q)
    # clip fp fuzz; true leverages live in [0, 1]
    leverages = np.clip(leverages, 0.0, 1.0)
    return DesignMatrix(
        x=x,
        leverages=leverages,
        kappa=float(leverages.max()),
        orthonormal=orthonormal,
        kept_columns=tuple(kept),
        q_factor=q,
        r_factor=r,
    )


def orthonormalize(d: DesignMatrix) -> DesignMatrix:
    """Rescale the columns so that x'x equals n times the identity.

    The column space, hat matrix, and leverages are unchanged; downstream
    estimators are invariant to this transformation, so it exists purely to
    put the matrix in the normalized form where each leverage equals
    ||x_i||^2 / n.
    """
    n = d.n
    u, _, _ = np.linalg.svd(d.x, full_matrices=False)
    x = math.sqrt(n) * u
    return _finalize(x, d.kept_columns, orthonormal=True)


def type1_quantile(values: np.ndarray, q: float) -> float:
    """Empirical quantile as the order statistic at index ceil(q * n).

    ``q = 0`` maps to the minimum and ``q = 1`` to the maximum, so clipping
    at those endpoints is a no-op.
    """
    srt = np.sort(values)
    idx = max(math.ceil(q * srt.size), 1)
    return float(srt[idx - 1])


def trim_columns(raw: RawCovariates, lower_q: float, upper_q: float) -> RawCovariates:
    """Clip each column at its lower_q and upper_q empirical quantiles.

    Trimming looks only at the covariates, never at assignments or outcomes,
    so it can precede regression adjustment without biasing it. Applying the
    same trim twice is a no-op.
    """
    if not (0.0 <= lower_q < upper_q <= 1.0):
        raise InvalidQuantilePair(f"need 0 <= lower < upper <= 1, got ({lower_q}, {upper_q})")
    out = raw.data.copy()
    for j in range(raw.q):
        lo = type1_quantile(out[:, j], lower_q)
        hi = type1_quantile(out[:, j], upper_q)
        np.clip(out[:, j], lo, hi, out=out[:, j])
    return RawCovariates(out, names=raw.names)
