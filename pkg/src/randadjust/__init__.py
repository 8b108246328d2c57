"""Design-based regression-adjusted ATE estimation for randomized experiments.

The package treats covariates and potential outcomes as fixed; all
randomness comes from the uniform draw of the treated subset. It provides
the adjusted and debiased point estimators, leverage-corrected conservative
variance estimators, exact sampling-without-replacement moment oracles, the
simulation data-generating processes, and a Monte Carlo harness with a CLI.
"""

from .design import (
    DesignMatrix,
    RawCovariates,
    center_and_reduce,
    orthonormalize,
    trim_columns,
)
from .dgp import (
    DatasetBundle,
    DgpSpec,
    dataset_population,
    linear_outcomes,
    load_dataset,
    synthetic_design,
    worst_case_residual,
)
from .estimators import (
    ArmFit,
    ObservedData,
    PointEstimates,
    adjusted_estimate,
    debiased_estimate,
    diff_in_means,
    fit_arm,
    generic_adjusted,
    lin_interacted,
    observe,
)
from .harness import (
    CellRecords,
    EstimateReport,
    ExperimentConfig,
    MetricsRow,
    analyze,
    cell_metrics,
    emit_csv,
    load_config,
    parse_csv,
    run_cell,
    run_experiment,
    summarize,
)
from .population import (
    PopulationOls,
    PotentialOutcomes,
    ResidualDiagnostics,
    asymptotic_variance,
    delta_terms,
    population_ols,
    residual_diagnostics,
)
from .randomization import (
    Assignment,
    RngStream,
    enumerate_assignments,
    sample_assignment,
)
from .srs_moments import (
    ConcentrationReport,
    QuadStat,
    brute_force_moments,
    check_matrix_concentration,
    check_vector_concentration,
    kolmogorov_distance,
    run_oracle_suite,
    srs_quadratic_mean,
    srs_quadratic_variance_bound,
    srs_sum_moments,
)
from .variance import (
    VarianceEstimates,
    WaldInterval,
    hc_variance,
    variance_estimates,
    wald_interval,
)

__version__ = "0.1.0"

__all__ = [
    "ArmFit",
    "Assignment",
    "CellRecords",
    "ConcentrationReport",
    "DatasetBundle",
    "DesignMatrix",
    "DgpSpec",
    "EstimateReport",
    "ExperimentConfig",
    "MetricsRow",
    "ObservedData",
    "PointEstimates",
    "PopulationOls",
    "PotentialOutcomes",
    "QuadStat",
    "RawCovariates",
    "ResidualDiagnostics",
    "RngStream",
    "VarianceEstimates",
    "WaldInterval",
    "adjusted_estimate",
    "analyze",
    "asymptotic_variance",
    "brute_force_moments",
    "cell_metrics",
    "center_and_reduce",
    "check_matrix_concentration",
    "check_vector_concentration",
    "dataset_population",
    "debiased_estimate",
    "delta_terms",
    "diff_in_means",
    "emit_csv",
    "enumerate_assignments",
    "fit_arm",
    "generic_adjusted",
    "hc_variance",
    "kolmogorov_distance",
    "lin_interacted",
    "linear_outcomes",
    "load_config",
    "load_dataset",
    "observe",
    "orthonormalize",
    "parse_csv",
    "population_ols",
    "residual_diagnostics",
    "run_cell",
    "run_experiment",
    "run_oracle_suite",
    "sample_assignment",
    "srs_quadratic_mean",
    "srs_quadratic_variance_bound",
    "srs_sum_moments",
    "summarize",
    "synthetic_design",
    "trim_columns",
    "variance_estimates",
    "wald_interval",
    "worst_case_residual",
]
