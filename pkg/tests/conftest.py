"""Shared fixtures. The expensive Monte Carlo cells are session-scoped so the
module tests and the acceptance suite reuse the same runs."""

import numpy as np
import pytest

from randadjust.dgp import DgpSpec
from randadjust.harness import ExperimentConfig, run_cell


@pytest.fixture(scope="session")
def normal_cells_n1000():
    """Five seeds of the n=1000 standard-normal cell at gamma = 0.3.

    Used by the conservative-coverage acceptance criterion and by the
    variance module's Monte Carlo conservativeness invariant.
    """
    cfg = ExperimentConfig(
        dgp=DgpSpec(
            n=1000, gamma=0.3, design_dist="normal", noise_dist="normal",
            pi1=0.5, seed=20260808,
        ),
        gammas=(0.3,),
        replicates=2000,
        outer_seeds=5,
    )
    seeds = [int(s) for s in np.random.SeedSequence(cfg.dgp.seed).generate_state(5, np.uint64)]
    cells = [run_cell(cfg, 0.3, s) for s in seeds]
    return cfg, cells


def acceptance_line(criterion: str, passed: bool, detail: str = "") -> None:
    """One visible pass/fail line per acceptance criterion."""
    status = "PASS" if passed else "FAIL"
    print(f"[acceptance] {criterion}: {status}" + (f"  ({detail})" if detail else ""))
    assert passed, f"{criterion}: {detail}"
