"""Monte Carlo replication engine, metric computation, and persistence.

One *cell* fixes a design matrix and a potential-outcome schedule (one outer
seed, one covariate-growth exponent) and replays many random assignments
over it. Per-seed measures follow the repeated-sampling protocol: relative
absolute bias against the population sigma, the standard-deviation inflation
ratio against the adjusted estimator's empirical spread, and the coverage of
nominal-95% t-statistics using the fixed 1.96 cutoff. Cells are summarized
by medians across outer seeds.
"""

from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .design import DesignMatrix, center_and_reduce, trim_columns
from .dgp import (
    DgpSpec,
    assignment_stream,
    linear_outcomes,
    synthetic_design,
)
from .errors import ArmRankDeficient, ConfigError
from .estimators import ObservedData, debiased_estimate, fit_arm, observe
from .population import PotentialOutcomes, population_ols, residual_diagnostics
from .randomization import Assignment, RngStream, sample_assignment
from .variance import variance_estimates, wald_interval

COVERAGE_CRITICAL = 1.96  # fixed cutoff used for all coverage tallies

ESTIMATORS = ("unadj", "adj", "adj_de")
VARIANCE_ESTIMATORS = ("theoretical", "hc0", "hc1", "hc2", "hc3")

# the full covariate-growth grid the experiments sweep: 0, 0.05, ..., 0.75
DEFAULT_GAMMA_GRID = tuple(round(0.05 * k, 2) for k in range(16))

CSV_HEADER = "gamma,p,estimator,var_estimator,rel_bias,sdr,coverage,dropped,kappa,seed_count"


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one simulation run."""

    dgp: DgpSpec
    gammas: tuple[float, ...]
    replicates: int = 2000
    outer_seeds: int = 10
    estimators: tuple[str, ...] = ("adj", "adj_de")
    variance_estimators: tuple[str, ...] = VARIANCE_ESTIMATORS
    level: float = 0.95
    trim: tuple[float, float] | None = None
    workers: int = 1
    hc1_arm_level: bool = False

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.outer_seeds < 1:
            raise ConfigError("outer_seeds must be >= 1")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown:
            raise ConfigError(f"unknown estimators: {sorted(unknown)}")
        unknown = set(self.variance_estimators) - set(VARIANCE_ESTIMATORS)
        if unknown:
            raise ConfigError(f"unknown variance estimators: {sorted(unknown)}")
        if not (0.0 < self.level < 1.0):
            raise ConfigError("level must lie strictly between 0 and 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


@dataclass(frozen=True)
class CellRecords:
    """Per-replicate results for one (gamma, seed) cell.

    ``estimates`` maps estimator name to a replicate-length array;
    ``hc_adj`` holds the variance estimates from the covariate-adjusted arm
    fits (shared by the adjusted and debiased estimators) and ``hc_unadj``
    the intercept-only analogue used with the unadjusted estimator. Invalid
    replicates (rank-deficient arm fits) are masked out, never silently
    imputed.
    """

    gamma: float
    seed: int
    n: int
    n1: int
    p: int
    kappa: float
    tau: float
    sigma_n2: float
    estimates: dict[str, np.ndarray]
    hc_adj: dict[str, np.ndarray]
    hc_unadj: dict[str, np.ndarray] | None
    valid: np.ndarray

    @property
    def dropped(self) -> int:
        return int(self.valid.size - self.valid.sum())

    def variance_array(self, estimator: str, var_estimator: str) -> np.ndarray:
        """Replicate-length array of variance estimates for one pairing."""
        if var_estimator == "theoretical":
            return np.full(self.valid.size, self.sigma_n2)
        table = self.hc_unadj if estimator == "unadj" else self.hc_adj
        if table is None:
            raise KeyError("unadjusted variance estimates were not recorded")
        return table[var_estimator]


@dataclass(frozen=True)
class MetricsRow:
    """One summarized (gamma, estimator, variance-estimator) cell."""

    gamma: float
    p: int
    estimator: str
    var_estimator: str
    rel_bias: float
    sdr: float
    coverage: float
    dropped: int
    kappa: float
    seed_count: int


@dataclass(frozen=True)
class SeedMetrics:
    """Per-seed measures before the median across seeds."""

    gamma: float
    seed: int
    p: int
    kappa: float
    dropped: int
    rel_bias: dict[str, float]
    sdr: dict[str, float]
    coverage_t: dict[tuple[str, str], float]
    coverage_z: dict[str, float]


def _outer_seeds(base_seed: int, count: int) -> list[int]:
    """Well-mixed 64-bit outer seeds derived deterministically from the base."""
    return [int(s) for s in np.random.SeedSequence(base_seed).generate_state(count, np.uint64)]


def build_population(
    cfg: ExperimentConfig, gamma: float, seed: int
) -> tuple[DesignMatrix, PotentialOutcomes, DgpSpec]:
    """Materialize the fixed (X, Y(1), Y(0)) for one cell."""
    spec = dataclasses.replace(cfg.dgp, gamma=gamma, seed=seed)
    if spec.design_dist == "dataset":
        raise ConfigError("dataset-backed grids go through dgp.dataset_population")
    rng = RngStream(seed)
    raw = synthetic_design(spec.n, spec.p, spec.design_dist, rng)
    if cfg.trim is not None:
        raw = trim_columns(raw, cfg.trim[0], cfg.trim[1])
    d = center_and_reduce(raw)
    po = linear_outcomes(d, spec, rng)
    return d, po, spec


def run_cell(cfg: ExperimentConfig, gamma: float, seed: int) -> CellRecords:
    """Replay `replicates` random assignments over one fixed population.

    Results land in preallocated per-replicate slots indexed by replicate
    number, so the outcome is byte-identical for any worker count.
    """
    d, po, spec = build_population(cfg, gamma, seed)
    n, n1 = spec.n, spec.n1
    pols = population_ols(d, po)
    diag = residual_diagnostics(pols, d, n1, spec.n0)

    reps = cfg.replicates
    want_unadj = "unadj" in cfg.estimators
    est = {name: np.full(reps, np.nan) for name in cfg.estimators}
    hc_adj = {name: np.full(reps, np.nan) for name in ("hc0", "hc1", "hc2", "hc3")}
    hc_unadj = (
        {name: np.full(reps, np.nan) for name in ("hc0", "hc1", "hc2", "hc3")}
        if want_unadj
        else None
    )
    valid = np.zeros(reps, dtype=bool)
    base = RngStream(seed)

    def run_range(lo: int, hi: int) -> None:
        for r in range(lo, hi):
            a = sample_assignment(n, n1, assignment_stream(base, r))
            obs = observe(po, a, d)
            try:
                fit1 = fit_arm(obs, 1)
                fit0 = fit_arm(obs, 0)
            except ArmRankDeficient:
                continue
            points = debiased_estimate(fit1, fit0, d)
            if "unadj" in est:
                est["unadj"][r] = points.tau_unadj
            if "adj" in est:
                est["adj"][r] = points.tau_adj
            if "adj_de" in est:
                est["adj_de"][r] = points.tau_adj_de
            ve = variance_estimates(fit1, fit0, cfg.hc1_arm_level)
            for name, value in ve.by_name().items():
                hc_adj[name][r] = value
            if want_unadj:
                # intercept-only refit: the Neyman-style variance for the
                # unadjusted estimator (all four corrections coincide)
                obs0 = observe(po, a, _strip_covariates(d))
                nf1 = fit_arm(obs0, 1)
                nf0 = fit_arm(obs0, 0)
                ve0 = variance_estimates(nf1, nf0)
                for name, value in ve0.by_name().items():
                    hc_unadj[name][r] = value
            valid[r] = True

    if cfg.workers == 1:
        run_range(0, reps)
    else:
        chunk = math.ceil(reps / cfg.workers)
        spans = [(k * chunk, min((k + 1) * chunk, reps)) for k in range(cfg.workers)]
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            for fut in [pool.submit(run_range, lo, hi) for lo, hi in spans if lo < hi]:
                fut.result()

    return CellRecords(
        gamma=gamma,
        seed=seed,
        n=n,
        n1=n1,
        p=d.p,
        kappa=d.kappa,
        tau=po.tau,
        sigma_n2=diag.sigma_n2,
        estimates=est,
        hc_adj=hc_adj,
        hc_unadj=hc_unadj,
        valid=valid,
    )


_STRIPPED_CACHE: dict[int, DesignMatrix] = {}


def _strip_covariates(d: DesignMatrix) -> DesignMatrix:
    """A p = 0 twin of the design, for intercept-only fits."""
    cached = _STRIPPED_CACHE.get(d.n)
    if cached is None:
        empty = np.empty((d.n, 0))
        q, r = np.linalg.qr(empty)
        cached = DesignMatrix(
            x=empty, leverages=np.zeros(d.n), kappa=0.0, orthonormal=True,
            kept_columns=(), q_factor=q, r_factor=r,
        )
        _STRIPPED_CACHE[d.n] = cached
    return cached


def cell_metrics(rec: CellRecords, cfg: ExperimentConfig) -> SeedMetrics:
    """Repeated-sampling measures for one cell.

    The z-score denominator and the SDR baseline both use the adjusted
    estimator's empirical spread on the sqrt(n) scale; when the adjusted
    estimator was not requested, the first requested estimator's spread is
    used instead.
    """
    ok = rec.valid
    if not ok.any():
        raise ArithmeticError("every replicate in the cell was dropped")
    sqrt_n = math.sqrt(rec.n)
    sigma_n = math.sqrt(rec.sigma_n2)

    baseline_name = "adj" if "adj" in rec.estimates else cfg.estimators[0]
    baseline = rec.estimates[baseline_name][ok]
    # undefined with a single replicate; propagate nan without warning spam
    sigma_star = sqrt_n * float(np.std(baseline, ddof=1)) if baseline.size > 1 else math.nan

    rel_bias: dict[str, float] = {}
    coverage_z: dict[str, float] = {}
    for name in cfg.estimators:
        taus = rec.estimates[name][ok]
        rel_bias[name] = abs(float(np.mean(taus)) - rec.tau) / sigma_n
        z_half = COVERAGE_CRITICAL * sigma_star
        coverage_z[name] = float(np.mean(sqrt_n * np.abs(taus - rec.tau) <= z_half))

    sdr: dict[str, float] = {}
    cov_t: dict[tuple[str, str], float] = {}
    for var_name in cfg.variance_estimators:
        base_sigmas = np.sqrt(np.maximum(rec.variance_array(baseline_name, var_name)[ok], 0.0))
        sdr[var_name] = float(np.mean(base_sigmas)) / sigma_star
        for est_name in cfg.estimators:
            sigmas2 = rec.variance_array(est_name, var_name)[ok]
            sigmas = np.sqrt(np.maximum(sigmas2, 0.0))
            taus = rec.estimates[est_name][ok]
            covered = sqrt_n * np.abs(taus - rec.tau) <= COVERAGE_CRITICAL * sigmas
            cov_t[(est_name, var_name)] = float(np.mean(covered))

    return SeedMetrics(
        gamma=rec.gamma,
        seed=rec.seed,
        p=rec.p,
        kappa=rec.kappa,
        dropped=rec.dropped,
        rel_bias=rel_bias,
        sdr=sdr,
        coverage_t=cov_t,
        coverage_z=coverage_z,
    )


def summarize(cells: list[CellRecords], cfg: ExperimentConfig) -> list[MetricsRow]:
    """Median per-seed measures across outer seeds, one row per cell pairing."""
    by_gamma: dict[float, list[SeedMetrics]] = {}
    for rec in cells:
        by_gamma.setdefault(rec.gamma, []).append(cell_metrics(rec, cfg))

    rows: list[MetricsRow] = []
    for gamma in sorted(by_gamma):
        group = by_gamma[gamma]
        p_med = int(np.median([g.p for g in group]))
        kappa_med = float(np.median([g.kappa for g in group]))
        dropped = int(sum(g.dropped for g in group))
        for est_name in cfg.estimators:
            for var_name in cfg.variance_estimators:
                rows.append(
                    MetricsRow(
                        gamma=gamma,
                        p=p_med,
                        estimator=est_name,
                        var_estimator=var_name,
                        rel_bias=float(np.median([g.rel_bias[est_name] for g in group])),
                        sdr=float(np.median([g.sdr[var_name] for g in group])),
                        coverage=float(np.median([g.coverage_t[(est_name, var_name)] for g in group])),
                        dropped=dropped,
                        kappa=kappa_med,
                        seed_count=len(group),
                    )
                )
    return rows


def run_experiment(cfg: ExperimentConfig) -> tuple[list[MetricsRow], list[CellRecords]]:
    """Run the whole (gamma x outer-seed) grid and summarize it."""
    seeds = _outer_seeds(cfg.dgp.seed, cfg.outer_seeds)
    cells = [run_cell(cfg, gamma, seed) for gamma in cfg.gammas for seed in seeds]
    return summarize(cells, cfg), cells


# ---------------------------------------------------------------------------
# CSV persistence
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.6g}"


def emit_csv(rows: list[MetricsRow], path: str) -> None:
    """Write the metrics table with a fixed header, ordering, and format."""
    ordered = sorted(rows, key=lambda r: (r.gamma, r.estimator, r.var_estimator))
    lines = [CSV_HEADER]
    for r in ordered:
        lines.append(
            ",".join(
                [
                    _fmt(r.gamma),
                    str(r.p),
                    r.estimator,
                    r.var_estimator,
                    _fmt(r.rel_bias),
                    _fmt(r.sdr),
                    _fmt(r.coverage),
                    str(r.dropped),
                    _fmt(r.kappa),
                    str(r.seed_count),
                ]
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_csv(path: str) -> list[MetricsRow]:
    """Read back a metrics table written by :func:`emit_csv`."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError(f"{path} does not carry the expected metrics header")
    rows = []
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != 10:
            raise ConfigError(f"malformed metrics row: {ln!r}")
        rows.append(
            MetricsRow(
                gamma=float(cells[0]),
                p=int(cells[1]),
                estimator=cells[2],
                var_estimator=cells[3],
                rel_bias=float(cells[4]),
                sdr=float(cells[5]),
                coverage=float(cells[6]),
                dropped=int(cells[7]),
                kappa=float(cells[8]),
                seed_count=int(cells[9]),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# configuration files
# ---------------------------------------------------------------------------

_DGP_KEYS = {
    "n", "design_dist", "noise_dist", "pi1", "seed", "sigma1", "sigma0",
}
_CONFIG_KEYS = {
    "dgp", "gammas", "replicates", "outer_seeds", "estimators",
    "variance_estimators", "level", "trim", "workers", "hc1_arm_level",
}


def config_from_dict(payload: dict) -> ExperimentConfig:
    """Build a validated config from JSON-compatible data; unknown keys fail."""
    if not isinstance(payload, dict):
        raise ConfigError("config root must be an object")
    unknown = set(payload) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "dgp" not in payload or "gammas" not in payload:
        raise ConfigError("config requires 'dgp' and 'gammas'")
    dgp_payload = payload["dgp"]
    if not isinstance(dgp_payload, dict):
        raise ConfigError("'dgp' must be an object")
    unknown = set(dgp_payload) - _DGP_KEYS
    if unknown:
        raise ConfigError(f"unknown dgp keys: {sorted(unknown)}")
    for key in ("n", "design_dist", "noise_dist", "pi1", "seed"):
        if key not in dgp_payload:
            raise ConfigError(f"dgp requires {key!r}")
    try:
        dgp = DgpSpec(
            n=int(dgp_payload["n"]),
            gamma=0.0,
            design_dist=str(dgp_payload["design_dist"]),
            noise_dist=str(dgp_payload["noise_dist"]),
            pi1=float(dgp_payload["pi1"]),
            seed=int(dgp_payload["seed"]),
            sigma1=float(dgp_payload.get("sigma1", 1.0)),
            sigma0=float(dgp_payload.get("sigma0", 1.0)),
        )
        trim = payload.get("trim")
        cfg = ExperimentConfig(
            dgp=dgp,
            gammas=tuple(float(g) for g in payload["gammas"]),
            replicates=int(payload.get("replicates", 2000)),
            outer_seeds=int(payload.get("outer_seeds", 10)),
            estimators=tuple(payload.get("estimators", ("adj", "adj_de"))),
            variance_estimators=tuple(
                payload.get("variance_estimators", VARIANCE_ESTIMATORS)
            ),
            level=float(payload.get("level", 0.95)),
            trim=None if trim is None else (float(trim[0]), float(trim[1])),
            workers=int(payload.get("workers", 1)),
            hc1_arm_level=bool(payload.get("hc1_arm_level", False)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    return cfg


def load_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return config_from_dict(payload)


# ---------------------------------------------------------------------------
# one-shot real-data analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EstimateReport:
    """Point estimates, variance estimates, intervals, and diagnostics."""

    n: int
    n1: int
    p: int
    kappa: float
    tau_unadj: float
    tau_adj: float
    tau_adj_de: float
    variances: dict[str, float]
    intervals: dict[tuple[str, str], tuple[float, float]]
    max_arm_leverage: float
    gram_condition: float
    level: float


def analyze(
    y: np.ndarray,
    treated: np.ndarray,
    d: DesignMatrix,
    level: float = 0.95,
) -> EstimateReport:
    """Estimate the treatment effect from one observed dataset."""
    assignment = Assignment(treated=np.asarray(treated, dtype=np.intp), n=d.n)
    obs = ObservedData(y_obs=np.asarray(y, dtype=float), assignment=assignment, design=d)
    fit1 = fit_arm(obs, 1)
    fit0 = fit_arm(obs, 0)
    points = debiased_estimate(fit1, fit0, d)
    ve = variance_estimates(fit1, fit0)
    intervals: dict[tuple[str, str], tuple[float, float]] = {}
    for est_name, tau_hat in (("adj", points.tau_adj), ("adj_de", points.tau_adj_de)):
        for var_name, s2 in ve.by_name().items():
            iv = wald_interval(tau_hat, s2, d.n, level)
            intervals[(est_name, var_name)] = (iv.lower, iv.upper)
    return EstimateReport(
        n=d.n,
        n1=assignment.n1,
        p=d.p,
        kappa=d.kappa,
        tau_unadj=points.tau_unadj,
        tau_adj=points.tau_adj,
        tau_adj_de=points.tau_adj_de,
        variances=ve.by_name(),
        intervals=intervals,
        max_arm_leverage=float(
            max(fit1.arm_leverages.max(initial=0.0), fit0.arm_leverages.max(initial=0.0))
        ),
        gram_condition=max(fit1.gram_condition, fit0.gram_condition),
        level=level,
    )
