"""Figure rendering for report outputs.

Each helper writes a PNG and a sibling CSV holding the plotted series,
so downstream tooling can re-plot without re-running the pipeline.
Rendering uses the Agg backend and never opens a window.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .econometrics import DesignMatrix, RegressionFit
from .metrics import LagCorrelationTable, ScoreHistogram


def _write_series(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def save_score_histogram(hist: ScoreHistogram, directory: Path | str) -> list[Path]:
    directory = Path(directory)
    png = directory / "score_histogram.png"
    data = directory / "score_histogram.csv"
    scores = sorted(hist.counts)
    fractions = [
        (hist.fractions or {}).get(s, 0.0) for s in scores
    ]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.bar(scores, fractions, color="#4878a8")
    ax.set_xlabel("score")
    ax.set_ylabel("fraction of ratings")
    ax.set_xticks(scores)
    fig.tight_layout()
    fig.savefig(png, dpi=120)
    plt.close(fig)
    _write_series(
        data,
        ("score", "count", "fraction"),
        [(s, hist.counts[s], f) for s, f in zip(scores, fractions)],
    )
    return [png, data]


def save_first_week_ecdf(points: Sequence[tuple[float, float]],
                         directory: Path | str) -> list[Path]:
    directory = Path(directory)
    png = directory / "first_week_ecdf.png"
    data = directory / "first_week_ecdf.csv"
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.step(xs, ys, where="post", color="#4878a8")
    ax.set_xscale("log")
    ax.set_xlabel("first-week ratings per million viewers")
    ax.set_ylabel("cumulative fraction of items")
    ax.set_ylim(0, 1.02)
    fig.tight_layout()
    fig.savefig(png, dpi=120)
    plt.close(fig)
    _write_series(data, ("density_per_million", "cumulative_probability"),
                  points)
    return [png, data]


def save_lag_correlation(table: LagCorrelationTable,
                         directory: Path | str) -> list[Path]:
    directory = Path(directory)
    png = directory / "lag_correlation.png"
    data = directory / "lag_correlation.csv"
    values = [c if c is not None else np.nan for c in table.correlations]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.bar(table.lags, values, color="#4878a8")
    ax.set_xlabel("revenue lag (weeks)")
    ax.set_ylabel("correlation with rating volume")
    ax.set_xticks(table.lags)
    ax.axhline(0.0, color="black", linewidth=0.8)
    fig.tight_layout()
    fig.savefig(png, dpi=120)
    plt.close(fig)
    _write_series(
        data,
        ("lag", "correlation"),
        [(lag, "" if c is None else c)
         for lag, c in zip(table.lags, table.correlations)],
    )
    return [png, data]


def save_residuals_vs_fitted(fitted: Sequence[float],
                             residuals: Sequence[float],
                             directory: Path | str) -> list[Path]:
    directory = Path(directory)
    png = directory / "residuals_vs_fitted.png"
    data = directory / "residuals_vs_fitted.csv"
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.scatter(fitted, residuals, s=8, alpha=0.5, color="#4878a8")
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("fitted logit density")
    ax.set_ylabel("residual")
    fig.tight_layout()
    fig.savefig(png, dpi=120)
    plt.close(fig)
    _write_series(data, ("fitted", "residual"), zip(fitted, residuals))
    return [png, data]


def save_quality_density_curve(fit: RegressionFit, design: DesignMatrix,
                               directory: Path | str,
                               points: int = 101) -> list[Path]:
    """Predicted logit density against the average rating, holding the
    other regressors at their sample means."""
    directory = Path(directory)
    png = directory / "density_quality_curve.png"
    data = directory / "density_quality_curve.csv"

    names = list(design.column_names)
    means = np.asarray(design.rows, dtype=float).mean(axis=0)
    base = 0.0
    for name, mean in zip(names, means):
        if name in ("AVG", "AVG2"):
            continue
        base += fit.coefficients[name] * mean
    b1 = fit.coefficients.get("AVG", 0.0)
    b2 = fit.coefficients.get("AVG2", 0.0)

    avg_col = names.index("AVG")
    col = np.asarray(design.rows, dtype=float)[:, avg_col]
    grid = np.linspace(col.min(), col.max(), points)
    predicted = base + b1 * grid + b2 * grid ** 2
    axis = grid + design.avg_mean

    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(axis, predicted, color="#4878a8")
    ax.set_xlabel("average user rating")
    ax.set_ylabel("predicted logit density")
    fig.tight_layout()
    fig.savefig(png, dpi=120)
    plt.close(fig)
    _write_series(data, ("avg_rating", "predicted_logit_density"),
                  zip(axis.tolist(), predicted.tolist()))
    return [png, data]


def render_metrics_figures(hist: ScoreHistogram,
                           ecdf_points: Optional[Sequence[tuple[float, float]]],
                           lag_table: Optional[LagCorrelationTable],
                           directory: Path | str) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = save_score_histogram(hist, directory)
    if ecdf_points:
        paths += save_first_week_ecdf(ecdf_points, directory)
    if lag_table is not None:
        paths += save_lag_correlation(lag_table, directory)
    return paths


def render_regress_figures(fit: RegressionFit, design: DesignMatrix,
                           directory: Path | str) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    fitted = (np.asarray(design.response, dtype=float)
              - np.asarray(fit.residuals, dtype=float))
    paths = save_residuals_vs_fitted(fitted.tolist(), fit.residuals.tolist(),
                                     directory)
    paths += save_quality_density_curve(fit, design, directory)
    return paths
