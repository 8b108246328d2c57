"""Render simulation metrics CSVs into the three comparison panels.

Input files follow the harness metrics schema (one row per
gamma/estimator/variance-estimator cell). Each panel plots one metric
against the covariate-growth exponent, one line per
(estimator, variance-estimator) pair, one subplot per input file (facet).
Rendering never mutates the inputs and embeds no timestamps, so identical
inputs give byte-identical images.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

EXPECTED_HEADER = "gamma,p,estimator,var_estimator,rel_bias,sdr,coverage,dropped,kappa,seed_count"

PANELS = ("bias", "sdr", "coverage")

# metric column per panel and the dashed reference value, if any
_PANEL_METRIC = {"bias": "rel_bias", "sdr": "sdr", "coverage": "coverage"}
_PANEL_REFERENCE = {"bias": None, "sdr": 1.0, "coverage": 0.95}
_PANEL_YLABEL = {
    "bias": "relative absolute bias",
    "sdr": "SD inflation ratio",
    "coverage": "empirical 95% coverage",
}


class SchemaMismatch(Exception):
    """The input CSV does not carry the metrics schema."""


@dataclass(frozen=True)
class MetricRecord:
    gamma: float
    p: int
    estimator: str
    var_estimator: str
    rel_bias: float
    sdr: float
    coverage: float

    def metric(self, name: str) -> float:
        return getattr(self, name)


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: which panels, from which CSVs."""

    inputs: tuple[Path, ...]
    panels: tuple[str, ...] = PANELS
    dpi: int = 150

    def __post_init__(self) -> None:
        bad = set(self.panels) - set(PANELS)
        if bad:
            raise ValueError(f"unknown panels: {sorted(bad)}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")


@dataclass(frozen=True)
class PanelReport:
    """What was drawn, for callers that verify output structure."""

    panel: str
    path: Path
    facets: tuple[str, ...]
    lines_per_facet: tuple[int, ...]
    reference: float | None
    sha256: str = field(default="", compare=False)


def read_metrics(path: Path) -> list[MetricRecord]:
    """Parse one metrics CSV; reject anything not matching the schema."""
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln]
    if not lines or lines[0] != EXPECTED_HEADER:
        raise SchemaMismatch(f"{path} does not start with the metrics header")
    records = []
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != 10:
            raise SchemaMismatch(f"{path}: malformed row {ln!r}")
        try:
            records.append(
                MetricRecord(
                    gamma=float(cells[0]),
                    p=int(cells[1]),
                    estimator=cells[2],
                    var_estimator=cells[3],
                    rel_bias=float(cells[4]),
                    sdr=float(cells[5]),
                    coverage=float(cells[6]),
                )
            )
        except ValueError as exc:
            raise SchemaMismatch(f"{path}: non-numeric cell in {ln!r}") from exc
    return records


def _series(records: list[MetricRecord], metric: str):
    """Sorted (estimator, var_estimator) -> [(gamma, value), ...] map."""
    series: dict[tuple[str, str], list[tuple[float, float]]] = {}
    for rec in records:
        series.setdefault((rec.estimator, rec.var_estimator), []).append(
            (rec.gamma, rec.metric(metric))
        )
    return {key: sorted(points) for key, points in sorted(series.items())}


def render_panels(spec: FigureSpec, out_dir: Path | str) -> list[PanelReport]:
    """Write one PNG per requested panel; return what was drawn."""
    import hashlib

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables = {path: read_metrics(path) for path in spec.inputs}

    reports = []
    for panel in spec.panels:
        metric = _PANEL_METRIC[panel]
        reference = _PANEL_REFERENCE[panel]
        n_facets = len(spec.inputs)
        fig, axes = plt.subplots(
            1, n_facets, figsize=(4.5 * n_facets, 3.4), squeeze=False, sharey=True
        )
        line_counts = []
        facet_names = []
        for ax, path in zip(axes[0], spec.inputs):
            facet_names.append(path.stem)
            series = _series(tables[path], metric)
            for (est, var), points in series.items():
                xs = [g for g, _ in points]
                ys = [v for _, v in points]
                ax.plot(xs, ys, marker="o", markersize=3, linewidth=1.2,
                        label=f"{est}/{var}")
            if reference is not None:
                ax.axhline(reference, color="grey", linestyle="--", linewidth=0.9)
            ax.set_title(path.stem, fontsize=9)
            ax.set_xlabel("covariate growth exponent")
            ax.set_ylabel(_PANEL_YLABEL[panel])
            if series:
                ax.legend(fontsize=6, ncol=2, frameon=False)
            line_counts.append(len(series))
        fig.tight_layout()
        out_path = out / f"{panel}.png"
        fig.savefig(
            out_path,
            dpi=spec.dpi,
            metadata={"Software": "randadjust-report"},
        )
        plt.close(fig)
        digest = hashlib.sha256(out_path.read_bytes()).hexdigest()
        reports.append(
            PanelReport(
                panel=panel,
                path=out_path,
                facets=tuple(facet_names),
                lines_per_facet=tuple(line_counts),
                reference=reference,
                sha256=digest,
            )
        )
    return reports
