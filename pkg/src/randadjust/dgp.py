"""Data-generating processes for the Monte Carlo experiments.

Synthetic designs draw i.i.d. entries from normal or Student-t laws, one
deterministic substream per column, so the matrix built for a small
dimension is always a column prefix of the matrix built for a larger one
under the same seed. Potential outcomes are linear in the design plus fixed
noise; the worst-case noise mode picks the unit-scale direction that
maximizes the adjusted estimator's bias term.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .design import DesignMatrix, RawCovariates, center_and_reduce
from .errors import (
    DegenerateLeverages,
    DimensionMismatch,
    MissingColumn,
    NonBinaryTreatment,
    ParseError,
)
from .estimators import ObservedData, fit_arm
from .population import PotentialOutcomes
from .randomization import Assignment, RngStream

DESIGN_DISTS = ("normal", "t2", "t1", "dataset")
NOISE_DISTS = ("normal", "t2", "t1", "worst_case")

# substream tags so design, noise, and assignment draws never collide
_TAG_DESIGN = 0
_TAG_NOISE = 1
_TAG_ASSIGN = 2


@dataclass(frozen=True)
class DgpSpec:
    """One cell of the experimental grid.

    The covariate count is ceil(n ** gamma); the treated-arm size is
    floor(n * pi1), recorded rather than assumed integral.
    """

    n: int
    gamma: float
    design_dist: str
    noise_dist: str
    pi1: float
    seed: int
    sigma1: float = 1.0
    sigma0: float = 1.0
    beta1_star: np.ndarray | None = None
    beta0_star: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.design_dist not in DESIGN_DISTS:
            raise ValueError(f"design_dist must be one of {DESIGN_DISTS}")
        if self.noise_dist not in NOISE_DISTS:
            raise ValueError(f"noise_dist must be one of {NOISE_DISTS}")
        if not (0.0 < self.pi1 < 1.0):
            raise ValueError("pi1 must lie strictly between 0 and 1")
        if self.design_dist != "dataset" and self.p > self.n - 4:
            raise ValueError(f"p = {self.p} too large for n = {self.n}")

    @property
    def p(self) -> int:
        return math.ceil(self.n**self.gamma)

    @property
    def n1(self) -> int:
        return math.floor(self.n * self.pi1)

    @property
    def n0(self) -> int:
        return self.n - self.n1


def _draw_iid(dist: str, size: int, gen: np.random.Generator) -> np.ndarray:
    """i.i.d. draws; Student-t as a normal over the root mean chi-square."""
    z = gen.standard_normal(size)
    if dist == "normal":
        return z
    nu = {"t2": 2, "t1": 1}[dist]
    chi2 = (gen.standard_normal((size, nu)) ** 2).sum(axis=1)
    return z / np.sqrt(chi2 / nu)


def synthetic_design(n: int, p: int, dist: str, rng: RngStream) -> RawCovariates:
    """n x p matrix of i.i.d. entries with the column-prefix property.

    Column j is a pure function of (seed, j), so regenerating with a larger
    p extends the matrix without disturbing existing columns.
    """
    if not (1 <= p <= n):
        raise DimensionMismatch(f"need 1 <= p <= n, got p={p}, n={n}")
    if dist not in ("normal", "t2", "t1"):
        raise ValueError(f"cannot draw synthetic entries from {dist!r}")
    cols = np.empty((n, p))
    for j in range(p):
        gen = rng.substream(_TAG_DESIGN, j).generator()
        cols[:, j] = _draw_iid(dist, n, gen)
    return RawCovariates(cols)


def worst_case_residual(d: DesignMatrix) -> np.ndarray:
    """Unit-scale direction maximizing the leverage-weighted residual mean.

    The maximizer over {1'eps = 0, X'eps = 0, ||eps||^2 / n = 1} of
    |sum_i H_ii eps_i| is the rescaled residual of the leverage scores
    regressed on the covariates with an intercept.
    """
    h = d.leverages
    resid = h - h.mean()
    resid = resid - d.q_factor @ (d.q_factor.T @ resid)
    norm = float(np.linalg.norm(resid))
    if norm <= 1e-10 * (float(np.linalg.norm(h)) + 1e-30):
        raise DegenerateLeverages("leverage scores lie in the span of the design")
    return math.sqrt(d.n) * resid / norm


def linear_outcomes(d: DesignMatrix, spec: DgpSpec, rng: RngStream) -> PotentialOutcomes:
    """Potential outcomes Y(t) = X b_t + s_t eps(t) with fixed noise.

    The noise vectors are drawn once per stream and shared by every
    replicate; only the assignment varies across replicates. In worst-case
    mode the control noise is the bias-maximizing direction and the treated
    noise is twice it.
    """
    n, p = d.n, d.p
    beta1 = np.zeros(p) if spec.beta1_star is None else np.asarray(spec.beta1_star, dtype=float)
    beta0 = np.zeros(p) if spec.beta0_star is None else np.asarray(spec.beta0_star, dtype=float)
    if beta1.shape != (p,) or beta0.shape != (p,):
        raise DimensionMismatch(f"coefficient vectors must have length {p}")
    if spec.noise_dist == "worst_case":
        eps = worst_case_residual(d)
        eps1, eps0 = 2.0 * eps, eps
    else:
        eps1 = _draw_iid(spec.noise_dist, n, rng.substream(_TAG_NOISE, 1).generator())
        eps0 = _draw_iid(spec.noise_dist, n, rng.substream(_TAG_NOISE, 0).generator())
    y1 = d.x @ beta1 + spec.sigma1 * eps1
    y0 = d.x @ beta0 + spec.sigma0 * eps0
    return PotentialOutcomes(y1=y1, y0=y0)


def assignment_stream(base: RngStream, replicate: int) -> RngStream:
    """The per-replicate stream the harness uses to draw assignments."""
    return base.substream(_TAG_ASSIGN, replicate)


# ---------------------------------------------------------------------------
# real-dataset ingestion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DatasetBundle:
    """A real dataset prepared for outcome simulation.

    Holds the reduced (full-rank after centering) covariate set plus the
    per-arm fitted coefficients and residual scales harvested from the
    observed outcomes.
    """

    covariates: RawCovariates
    fitted_beta1: np.ndarray
    fitted_beta0: np.ndarray
    fitted_sigma1: float
    fitted_sigma0: float
    name: str
    n: int
    n1: int
    column_names: tuple[str, ...] = field(default=())


def read_numeric_csv(path: str) -> tuple[list[str], np.ndarray]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise ParseError(f"{path} needs a header row and at least one data row")
    header = [name.strip() for name in rows[0]]
    try:
        data = np.array([[float(cell) for cell in row] for row in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ParseError(f"non-numeric cell in {path}: {exc}") from exc
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ParseError(f"ragged rows in {path}")
    return header, data


def expand_interactions(data: np.ndarray, names: list[str]) -> tuple[np.ndarray, list[str]]:
    """Append all two-way products of distinct columns."""
    q = data.shape[1]
    blocks = [data]
    out_names = list(names)
    for i in range(q):
        for j in range(i + 1, q):
            blocks.append((data[:, i] * data[:, j])[:, None])
            out_names.append(f"{names[i]}*{names[j]}")
    return np.hstack(blocks), out_names


def load_dataset(
    path: str,
    outcome_col: str,
    treat_col: str,
    interactions: bool = True,
    name: str | None = None,
) -> DatasetBundle:
    """Read a CSV experiment and harvest a simulation recipe from it.

    The observed outcomes are regressed on the (optionally
    interaction-expanded, then rank-reduced) covariates within each arm;
    the fitted coefficients and residual standard deviations parameterize
    later synthetic outcome generation.
    """
    header, data = read_numeric_csv(path)
    for col in (outcome_col, treat_col):
        if col not in header:
            raise MissingColumn(f"column {col!r} not in {path}")
    y = data[:, header.index(outcome_col)]
    t_raw = data[:, header.index(treat_col)]
    if set(np.unique(t_raw)) != {0.0, 1.0}:
        raise NonBinaryTreatment(f"treatment column {treat_col!r} must take values 0 and 1")

    cov_idx = [k for k, c in enumerate(header) if c not in (outcome_col, treat_col)]
    cov = data[:, cov_idx]
    cov_names = [header[k] for k in cov_idx]
    if interactions:
        cov, cov_names = expand_interactions(cov, cov_names)

    raw = RawCovariates(cov, names=tuple(cov_names))
    d = center_and_reduce(raw)
    kept_names = tuple(cov_names[k] for k in d.kept_columns)
    treated = np.flatnonzero(t_raw == 1.0)
    assignment = Assignment(treated=treated, n=raw.n)
    obs = ObservedData(y_obs=y, assignment=assignment, design=d)
    fits = {arm: fit_arm(obs, arm) for arm in (1, 0)}
    sigmas = {}
    for arm, fit in fits.items():
        df = fit.n_arm - d.p - 1
        if df <= 0:
            raise DimensionMismatch(f"arm {arm} too small to estimate a residual scale")
        sigmas[arm] = math.sqrt(float(np.dot(fit.resid, fit.resid)) / df)

    return DatasetBundle(
        covariates=RawCovariates(raw.data[:, list(d.kept_columns)], names=kept_names),
        fitted_beta1=fits[1].beta_hat,
        fitted_beta0=fits[0].beta_hat,
        fitted_sigma1=sigmas[1],
        fitted_sigma0=sigmas[0],
        name=name or path,
        n=raw.n,
        n1=int(treated.size),
        column_names=kept_names,
    )


def dataset_population(
    bundle: DatasetBundle,
    p_sub: int,
    noise_dist: str,
    rng: RngStream,
) -> tuple[DesignMatrix, PotentialOutcomes]:
    """Draw a size-p column subset and synthesize outcomes that mimic it.

    Columns are chosen uniformly without replacement; the subset is
    re-centered and re-reduced, the fitted coefficients are restricted to
    the surviving positions, and the harvested residual scales are halved.
    """
    q = bundle.covariates.q
    if not (1 <= p_sub <= q):
        raise DimensionMismatch(f"need 1 <= p_sub <= {q}")
    gen = rng.substream(_TAG_DESIGN).generator()
    chosen = np.sort(gen.choice(q, size=p_sub, replace=False))
    raw_sub = RawCovariates(bundle.covariates.data[:, chosen])
    d = center_and_reduce(raw_sub)
    kept_global = chosen[list(d.kept_columns)]
    spec = DgpSpec(
        n=bundle.n,
        gamma=0.0,
        design_dist="dataset",
        noise_dist=noise_dist,
        pi1=bundle.n1 / bundle.n,
        seed=rng.seed,
        sigma1=bundle.fitted_sigma1 / 2.0,
        sigma0=bundle.fitted_sigma0 / 2.0,
        beta1_star=bundle.fitted_beta1[kept_global],
        beta0_star=bundle.fitted_beta0[kept_global],
    )
    return d, linear_outcomes(d, spec, rng)
