"""Report documents and their text rendering.

The CLI assembles one JSON-serializable document per subcommand from
the analysis dataclasses; the text renderers below lay the same
documents out as aligned tables for terminals.  Keeping both views on
one dict means the two formats can never disagree.
"""

from __future__ import annotations

from typing import Any, Optional, Sequence

from .dataset import PanelExclusions
from .econometrics import (
    INTERCEPT,
    BPTestResult,
    HypothesisReport,
    RegressionFit,
    significance_codes,
)
from .metrics import (
    DemographicSummary,
    DensityRanking,
    LagCorrelationTable,
    ScoreHistogram,
    SummaryStats,
)
from .simulator import RecoveryReport


def fit_section(fit: RegressionFit) -> dict[str, Any]:
    return {
        "coefficients": dict(fit.coefficients),
        "std_errors": dict(fit.std_errors),
        "t_values": dict(fit.t_values),
        "p_values": dict(fit.p_values),
        "significance": significance_codes(fit.p_values),
        "r_squared": fit.r_squared,
        "adj_r_squared": fit.adj_r_squared,
        "n_obs": fit.df_residual + len(fit.coefficients),
        "df_residual": fit.df_residual,
        "weighted": fit.weighted,
    }


def bp_section(bp: BPTestResult) -> dict[str, Any]:
    return {
        "lm_statistic": bp.lm_statistic,
        "df": bp.df,
        "p_value": bp.p_value,
        "degenerate": bp.degenerate,
    }


def hypotheses_section(report: HypothesisReport) -> dict[str, Any]:
    return {
        "alpha": report.alpha,
        "results": [
            {
                "name": r.name,
                "coefficient": r.coefficient,
                "description": r.description,
                "estimate": r.estimate,
                "p_value": r.p_value,
                "verdict": r.verdict,
            }
            for r in report.results
        ],
    }


def summary_stats_section(stats: SummaryStats) -> dict[str, Any]:
    return {
        "variables": {
            name: {
                "mean": v.mean,
                "sd": v.sd,
                "min": v.minimum,
                "max": v.maximum,
            }
            for name, v in stats.variables.items()
        },
        "totals": dict(stats.totals),
    }


def rankings_section(ranking: DensityRanking) -> dict[str, Any]:
    def rows(entries):
        return [
            {
                "item_id": e.item_id,
                "title": e.title,
                "genres": list(e.genres),
                "density_per_million": e.density_per_million,
            }
            for e in entries
        ]

    return {
        "k": ranking.k,
        "capped": ranking.capped,
        "top": rows(ranking.top),
        "bottom": rows(ranking.bottom),
    }


def histogram_section(hist: ScoreHistogram) -> dict[str, Any]:
    return {
        "counts": {str(s): c for s, c in sorted(hist.counts.items())},
        "fractions": (
            None
            if hist.fractions is None
            else {str(s): f for s, f in sorted(hist.fractions.items())}
        ),
        "total": hist.total,
    }


def ecdf_section(points: Sequence[tuple[float, float]]) -> list[list[float]]:
    return [[v, p] for v, p in points]


def lag_section(table: Optional[LagCorrelationTable]) -> Optional[dict[str, Any]]:
    if table is None:
        return None
    return {"lags": list(table.lags), "correlations": list(table.correlations)}


def demographics_section(
    summary: Optional[DemographicSummary],
) -> Optional[dict[str, Any]]:
    if summary is None:
        return None
    return {
        "total_profiles": summary.total_profiles,
        "gender_coverage": summary.gender_coverage,
        "age_coverage": summary.age_coverage,
        "gender_shares": summary.gender_shares,
        "age_bracket_shares": summary.age_bracket_shares,
    }


def exclusions_section(excl: PanelExclusions) -> dict[str, int]:
    return {
        "pre_release": excl.pre_release,
        "beyond_horizon": excl.beyond_horizon,
        "zero_ratings": excl.zero_ratings,
        "zero_revenue": excl.zero_revenue,
        "density_not_below_one": excl.density_not_below_one,
        "insufficient_critics": excl.insufficient_critics,
        "missing_sales": excl.missing_sales,
    }


def recovery_section(report: RecoveryReport) -> dict[str, Any]:
    return {
        "reps": report.reps,
        "coefficients": [
            {
                "name": c.name,
                "true_value": c.true_value,
                "mean_estimate": c.mean_estimate,
                "empirical_sd": c.empirical_sd,
                "coverage": c.coverage,
                "ols_empirical_sd": c.ols_empirical_sd,
                "wls_to_ols_variance_ratio": c.wls_to_ols_variance_ratio,
            }
            for c in report.coefficients
        ],
    }


# Text rendering ------------------------------------------------------


def _fmt(x: Optional[float], digits: int = 4) -> str:
    if x is None:
        return "n/a"
    return f"{x:.{digits}g}"


def _fmt_p(p: float) -> str:
    if p < 0.001:
        return "<0.001"
    return f"{p:.3f}"


def _fmt_p_eq(p: float) -> str:
    """p with its own comparator, for prose like ``p=0.035`` / ``p<0.001``."""
    if p < 0.001:
        return "p<0.001"
    return f"p={p:.3f}"


def _coef_order(names: Sequence[str]) -> list[str]:
    ordered = [n for n in names if n != INTERCEPT]
    if INTERCEPT in names:
        ordered.append(INTERCEPT)
    return ordered


def render_fit_text(title: str, section: dict[str, Any]) -> list[str]:
    lines = [title, "-" * 64]
    lines.append(
        f"{'':10s} {'Coeff':>10s} {'Std. err.':>10s} {'t-value':>9s} "
        f"{'P>|t|':>8s}"
    )
    coeffs = section["coefficients"]
    for name in _coef_order(list(coeffs)):
        code = section["significance"].get(name, "")
        lines.append(
            f"{name:10s} {_fmt(coeffs[name]):>10s} "
            f"{_fmt(section['std_errors'][name]):>10s} "
            f"{section['t_values'][name]:>9.2f} "
            f"{_fmt_p(section['p_values'][name]):>8s}  {code}"
        )
    lines.append("-" * 64)
    metric = "weighted metric" if section["weighted"] else "unweighted"
    lines.append(
        f"n={section['n_obs']}  R-squared={_fmt(section['r_squared'])}  "
        f"adjusted={_fmt(section['adj_r_squared'])}  ({metric})"
    )
    lines.append("significance: a p<0.05, b p<0.01, c p<0.001")
    return lines


def render_regress_text(doc: dict[str, Any]) -> str:
    lines: list[str] = []
    lines += render_fit_text("Weighted least squares (weights: estimated viewers)",
                             doc["wls"])
    lines.append("")
    lines += render_fit_text("Ordinary least squares", doc["ols"])
    lines.append("")
    bp = doc["bp_test"]
    lines.append(
        f"Heteroskedasticity LM test: LM={_fmt(bp['lm_statistic'])} "
        f"df={bp['df']} {_fmt_p_eq(bp['p_value'])}"
        + ("  (degenerate)" if bp.get("degenerate") else "")
    )
    lines.append("")
    hyp = doc["hypotheses"]
    lines.append(f"Hypotheses (alpha={hyp['alpha']:g}):")
    for r in hyp["results"]:
        lines.append(
            f"  {r['name']}  {r['verdict']:<14s} {r['coefficient']} = "
            f"{_fmt(r['estimate'])} ({_fmt_p_eq(r['p_value'])}): "
            f"{r['description']}"
        )
    return "\n".join(lines) + "\n"


def render_metrics_text(doc: dict[str, Any]) -> str:
    lines: list[str] = []
    stats = doc["summary_stats"]
    totals = stats["totals"]
    lines.append("Corpus totals")
    lines.append(
        "  items {items}   user ratings {user_ratings}   unique users "
        "{unique_users}   critic reviews {critic_ratings}".format(**totals)
    )
    lines.append("")
    lines.append("Variables")
    lines.append(
        f"  {'name':28s} {'mean':>12s} {'sd':>12s} {'min':>12s} {'max':>12s}"
    )
    for name, v in stats["variables"].items():
        lines.append(
            f"  {name:28s} {_fmt(v['mean']):>12s} {_fmt(v['sd']):>12s} "
            f"{_fmt(v['min']):>12s} {_fmt(v['max']):>12s}"
        )
    lines.append("")

    ranking = doc["rankings"]
    for label, entries in (("Top", ranking["top"]), ("Bottom", ranking["bottom"])):
        lines.append(
            f"{label} {len(entries)} items by first-week ratings per million "
            f"viewers" + ("  (capped)" if ranking["capped"] else "")
        )
        for e in entries:
            genres = "/".join(e["genres"])
            lines.append(
                f"  {e['density_per_million']:>10.1f}  {e['item_id']:8s} "
                f"{e['title']:24s} {genres}"
            )
        lines.append("")

    hist = doc["histogram"]
    lines.append(f"Score histogram ({hist['total']} deduplicated ratings)")
    if hist["fractions"]:
        parts = [
            f"{s}: {hist['fractions'][s]:.3f}" for s in sorted(hist["fractions"])
        ]
        lines.append("  " + "   ".join(parts))
    else:
        lines.append("  (no ratings)")
    lines.append("")

    ecdf = doc["ecdf"]
    if ecdf:
        values = [p[0] for p in ecdf]
        lines.append(
            f"First-week density ECDF: {len(ecdf)} points, "
            f"min {values[0]:.1f}, max {values[-1]:.1f} per million"
        )
    lines.append("")

    lag = doc["lag_correlation"]
    if lag is None:
        lines.append("Lag correlation: unavailable (series too short)")
    else:
        parts = []
        for l, c in zip(lag["lags"], lag["correlations"]):
            parts.append(f"lag {l}: " + ("n/a" if c is None else f"{c:+.3f}"))
        lines.append("Volume vs lagged revenue correlation: " + "   ".join(parts))
    lines.append("")

    demo = doc["demographics"]
    if demo is None:
        lines.append("Demographics: no profile file supplied")
    else:
        g = demo["gender_shares"] or {}
        a = demo["age_bracket_shares"] or {}
        lines.append(
            f"Demographics: {demo['total_profiles']} profiles, gender listed "
            f"{demo['gender_coverage']:.0%}"
            + (f" (male {g.get('male', 0):.0%})" if g else "")
            + f", age listed {demo['age_coverage']:.0%}"
            + (f" (18-29 {a.get('18-29', 0):.0%})" if a else "")
        )
    return "\n".join(lines) + "\n"


def render_validate_text(doc: dict[str, Any]) -> str:
    lines = []
    status = "OK" if doc["ok"] else "FAILED"
    lines.append(f"Validation {status}")
    counts = doc["counts"]
    lines.append(
        "  rows: ratings {ratings}, items {items}, sales {sales}, critics "
        "{critics}, profiles {profiles}".format(**counts)
    )
    lines.append(
        f"  deduplication: {counts['ratings']} events -> "
        f"{counts['deduplicated_ratings']} "
        f"({counts['collapsed_duplicates']} collapsed)"
    )
    lines.append(f"  panel rows: {doc['panel_rows']}")
    lines.append("  exclusions:")
    for reason, n in doc["exclusions"].items():
        lines.append(f"    {reason:24s} {n}")
    for problem in doc.get("problems", []):
        lines.append(f"  problem: {problem}")
    return "\n".join(lines) + "\n"


def render_simulate_text(doc: dict[str, Any]) -> str:
    lines = [
        "Synthetic dataset written",
        f"  directory: {doc['directory']}",
        "  items {items}, rating events {ratings}, critic reviews "
        "{critics}, sales rows {sales}, profiles {profiles}".format(
            **doc["counts"]
        ),
        f"  seed {doc['seed']}",
    ]
    rec = doc.get("recovery")
    if rec:
        lines.append("")
        lines.append(f"Recovery over {rec['reps']} reps")
        lines.append(
            f"  {'name':10s} {'true':>9s} {'mean est':>10s} {'emp sd':>9s} "
            f"{'coverage':>9s} {'var ratio':>10s}"
        )
        for c in rec["coefficients"]:
            lines.append(
                f"  {c['name']:10s} {c['true_value']:>9.4g} "
                f"{c['mean_estimate']:>10.4g} {c['empirical_sd']:>9.3g} "
                f"{c['coverage']:>9.2f} {c['wls_to_ols_variance_ratio']:>10.3f}"
            )
    return "\n".join(lines) + "\n"
