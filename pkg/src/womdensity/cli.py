"""Command-line entry points.

Four subcommands: ``validate`` checks a delivery and reports exclusion
tallies, ``metrics`` emits the descriptive report, ``regress`` fits the
weekly density model and judges the sign hypotheses, and ``simulate``
writes a synthetic corpus with known coefficients.  Reports render as
text or JSON; exit codes separate configuration problems (2), data
problems (3), and estimation failures (4).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from . import dataset as dsmod
from . import econometrics as em
from . import figures as figmod
from . import metrics as memod
from . import report as rp
from . import simulator as sim
from .dataset import DatasetError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


class ConfigError(Exception):
    """Bad flags, bad config file, or missing required options."""


@dataclass
class RunConfig:
    """Resolved options for one invocation.

    Precedence: command-line flag, then config-file entry, then the
    built-in default.
    """

    command: str
    ratings: Optional[Path] = None
    items: Optional[Path] = None
    sales: Optional[Path] = None
    critics: Optional[Path] = None
    profiles: Optional[Path] = None
    ticket_price: Optional[float] = None
    max_week: int = 5
    alpha: float = 0.05
    out_format: str = "text"
    out: Optional[Path] = None
    figures_dir: Optional[Path] = None
    top_k: int = 5
    max_lag: int = 3
    # simulate only
    out_dir: Optional[Path] = None
    seed: int = 0
    n_items: int = 100
    weeks: int = 5
    noise_sd: float = 0.35
    recover: Optional[int] = None
    beta: dict[str, float] = field(default_factory=dict)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="womdensity",
        description="Ratings-density metrics and weekly panel regression",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, with_inputs: bool = True):
        if with_inputs:
            p.add_argument("--ratings", help="rating events CSV")
            p.add_argument("--items", help="item descriptions CSV")
            p.add_argument("--sales", help="weekly sales CSV")
            p.add_argument("--critics", help="critic reviews CSV")
            p.add_argument("--profiles", help="optional rater profiles CSV")
            p.add_argument("--ticket-price", type=float,
                           help="constant ticket price used to estimate viewers")
            p.add_argument("--max-week", type=int,
                           help="panel horizon in weeks since release (default 5)")
        p.add_argument("--config", help="JSON file with defaults for any flag")
        p.add_argument("--format", dest="out_format", choices=("text", "json"),
                       help="report format (default text)")
        p.add_argument("--out", help="write the report here instead of stdout")

    p_validate = sub.add_parser(
        "validate", help="parse input files and report what would be dropped"
    )
    add_common(p_validate)

    p_metrics = sub.add_parser(
        "metrics", help="descriptive statistics, rankings, and distributions"
    )
    add_common(p_metrics)
    p_metrics.add_argument("--top-k", type=int,
                           help="ranking size (default 5)")
    p_metrics.add_argument("--max-lag", type=int,
                           help="largest revenue lag in weeks (default 3)")
    p_metrics.add_argument("--figures",
                           help="directory for rendered figures and series CSVs")

    p_regress = sub.add_parser(
        "regress", help="fit the weekly density model and test the hypotheses"
    )
    add_common(p_regress)
    p_regress.add_argument("--alpha", type=float,
                           help="significance level (default 0.05)")
    p_regress.add_argument("--figures",
                           help="directory for rendered figures and series CSVs")

    p_sim = sub.add_parser(
        "simulate", help="generate a synthetic corpus with known coefficients"
    )
    add_common(p_sim, with_inputs=False)
    p_sim.add_argument("--out-dir", help="directory for the generated CSV files")
    p_sim.add_argument("--seed", type=int, help="generator seed (default 0)")
    p_sim.add_argument("--items", dest="n_items", type=int,
                       help="number of items (default 100)")
    p_sim.add_argument("--weeks", type=int, help="weeks per item (default 5)")
    p_sim.add_argument("--ticket-price", type=float,
                       help="ticket price for the generated sales (default 8.0)")
    p_sim.add_argument("--noise-sd", type=float,
                       help="sd of the propensity noise (default 0.35)")
    p_sim.add_argument("--recover", type=int, metavar="REPS",
                       help="also run a recovery experiment with REPS reps")
    p_sim.add_argument("--beta", action="append", metavar="NAME=VALUE",
                       help="override a generating coefficient (repeatable)")
    return parser


def _load_config_file(path: Optional[str]) -> dict[str, Any]:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            loaded = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(loaded, dict):
        raise ConfigError("config file must hold a JSON object")
    return loaded


def _parse_beta(pairs: Optional[list[str]]) -> dict[str, float]:
    beta = dict(sim.DEFAULT_BETA)
    for pair in pairs or []:
        name, sep, raw = pair.partition("=")
        if not sep:
            raise ConfigError(f"--beta expects NAME=VALUE, got {pair!r}")
        name = name.strip().upper()
        if name not in beta:
            raise ConfigError(
                f"unknown coefficient {name!r}; valid names: "
                + ", ".join(sorted(beta))
            )
        try:
            beta[name] = float(raw)
        except ValueError:
            raise ConfigError(f"--beta {name}: {raw!r} is not a number") from None
    return beta


def resolve_config(args: argparse.Namespace) -> RunConfig:
    file_cfg = _load_config_file(getattr(args, "config", None))

    def opt(name: str, default=None, required: bool = False, cast=None):
        value = getattr(args, name, None)
        if value is None:
            value = file_cfg.get(name)
        if value is None:
            value = default
        if value is None and required:
            flag = "--" + name.replace("_", "-")
            raise ConfigError(f"missing required option {flag}")
        if value is not None and cast is not None:
            try:
                value = cast(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {name}: {exc}") from exc
        return value

    cfg = RunConfig(command=args.command)
    cfg.out_format = opt("out_format", "text")
    if cfg.out_format not in ("text", "json"):
        raise ConfigError(f"format must be text or json, got {cfg.out_format!r}")
    out = opt("out")
    cfg.out = Path(out) if out else None

    if args.command == "simulate":
        out_dir = opt("out_dir", required=True)
        cfg.out_dir = Path(out_dir)
        cfg.seed = opt("seed", 0, cast=int)
        cfg.n_items = opt("n_items", 100, cast=int)
        cfg.weeks = opt("weeks", 5, cast=int)
        cfg.ticket_price = opt("ticket_price", 8.0, cast=float)
        cfg.noise_sd = opt("noise_sd", 0.35, cast=float)
        recover = opt("recover")
        cfg.recover = int(recover) if recover is not None else None
        cfg.beta = _parse_beta(getattr(args, "beta", None) or file_cfg.get("beta"))
        if cfg.n_items < 1:
            raise ConfigError(f"--items must be >= 1, got {cfg.n_items}")
        if cfg.weeks < 1:
            raise ConfigError(f"--weeks must be >= 1, got {cfg.weeks}")
        if cfg.recover is not None and cfg.recover < 1:
            raise ConfigError(f"--recover must be >= 1, got {cfg.recover}")
        if cfg.noise_sd < 0:
            raise ConfigError(f"--noise-sd must be >= 0, got {cfg.noise_sd}")
        if cfg.ticket_price <= 0:
            raise ConfigError(f"--ticket-price must be > 0, got {cfg.ticket_price}")
        return cfg

    for name in ("ratings", "items", "sales", "critics"):
        value = opt(name, required=True)
        setattr(cfg, name, Path(value))
    profiles = opt("profiles")
    cfg.profiles = Path(profiles) if profiles else None
    cfg.ticket_price = opt("ticket_price", required=True, cast=float)
    if cfg.ticket_price <= 0:
        raise ConfigError(f"--ticket-price must be > 0, got {cfg.ticket_price}")
    cfg.max_week = opt("max_week", 5, cast=int)
    if cfg.max_week < 1:
        raise ConfigError(f"--max-week must be >= 1, got {cfg.max_week}")

    if args.command == "metrics":
        cfg.top_k = opt("top_k", 5, cast=int)
        if cfg.top_k < 1:
            raise ConfigError(f"--top-k must be >= 1, got {cfg.top_k}")
        cfg.max_lag = opt("max_lag", 3, cast=int)
        if cfg.max_lag < 0:
            raise ConfigError(f"--max-lag must be >= 0, got {cfg.max_lag}")
    if args.command == "regress":
        cfg.alpha = opt("alpha", 0.05, cast=float)
        if not 0.0 < cfg.alpha < 1.0:
            raise ConfigError(f"--alpha must be in (0, 1), got {cfg.alpha}")
    figures = opt("figures") if args.command in ("metrics", "regress") else None
    cfg.figures_dir = Path(figures) if figures else None
    return cfg


def _parse_inputs(cfg: RunConfig) -> dsmod.Dataset:
    return dsmod.parse_dataset(
        cfg.ratings,
        cfg.items,
        cfg.sales,
        cfg.critics,
        cfg.profiles,
        ticket_price=cfg.ticket_price,
    )


def cmd_validate(cfg: RunConfig) -> dict[str, Any]:
    problems: list[str] = []
    ratings = dsmod.parse_ratings(cfg.ratings, problems)
    items = dsmod.parse_items(cfg.items, problems)
    sales = dsmod.parse_sales(cfg.sales, problems)
    critics = dsmod.parse_critics(cfg.critics, problems)
    profiles = (
        dsmod.parse_profiles(cfg.profiles, problems)
        if cfg.profiles is not None
        else None
    )
    counts = {
        "ratings": len(ratings),
        "items": len(items),
        "sales": len(sales),
        "critics": len(critics),
        "profiles": len(profiles) if profiles is not None else 0,
    }
    deduped = dsmod.dedupe_ratings(ratings)
    counts["deduplicated_ratings"] = len(deduped)
    counts["collapsed_duplicates"] = len(ratings) - len(deduped)

    panel_rows = 0
    exclusions = dsmod.PanelExclusions()
    if not problems:
        data = dsmod.Dataset(ratings, critics, items, sales, profiles,
                             cfg.ticket_price)
        try:
            dsmod.validate_dataset(data)
            result = dsmod.build_panel(data, max_week=cfg.max_week)
            panel_rows = len(result.rows)
            exclusions = result.exclusions
        except DatasetError as exc:
            problems.extend(exc.problems)

    return {
        "ok": not problems,
        "problems": problems,
        "counts": counts,
        "exclusions": rp.exclusions_section(exclusions),
        "panel_rows": panel_rows,
    }


def cmd_metrics(cfg: RunConfig) -> dict[str, Any]:
    data = _parse_inputs(cfg)
    result = dsmod.build_panel(data, max_week=cfg.max_week)
    deduped = dsmod.dedupe_ratings(data.ratings)

    stats = memod.summary_stats(data, result.rows)
    hist = memod.score_histogram(deduped)
    week1 = [r for r in result.rows if r.week_index == 1]
    ranking = None
    ecdf_points: list[tuple[float, float]] = []
    if week1:
        ranking = memod.rank_by_density(result.rows, data, k=cfg.top_k)
        ecdf_points = memod.first_week_density_ecdf(result.rows)

    lag_table = None
    volume, revenue = memod.calendar_week_series(data, max_week=cfg.max_week)
    if len(volume) >= cfg.max_lag + 3:
        lag_table = memod.lag_correlation(volume, revenue, max_lag=cfg.max_lag)

    demo = (
        memod.demographic_summary(data.profiles)
        if data.profiles is not None
        else None
    )

    doc: dict[str, Any] = {
        "summary_stats": rp.summary_stats_section(stats),
        "rankings": rp.rankings_section(ranking) if ranking else None,
        "histogram": rp.histogram_section(hist),
        "ecdf": rp.ecdf_section(ecdf_points),
        "lag_correlation": rp.lag_section(lag_table),
        "demographics": rp.demographics_section(demo),
    }
    if cfg.figures_dir is not None:
        paths = figmod.render_metrics_figures(
            hist, ecdf_points, lag_table, cfg.figures_dir
        )
        doc["figures"] = [str(p) for p in paths]
    return doc


def cmd_regress(cfg: RunConfig) -> dict[str, Any]:
    data = _parse_inputs(cfg)
    result = dsmod.build_panel(data, max_week=cfg.max_week)
    design = em.build_design(result.rows)
    ols = em.fit_ols(design)
    bp = em.breusch_pagan(ols, design)
    wls = em.fit_wls(design)
    hypotheses = em.evaluate_hypotheses(wls, alpha=cfg.alpha)

    doc: dict[str, Any] = {
        "ols": rp.fit_section(ols),
        "bp_test": rp.bp_section(bp),
        "wls": rp.fit_section(wls),
        "hypotheses": rp.hypotheses_section(hypotheses),
        "panel_rows": len(result.rows),
        "exclusions": rp.exclusions_section(result.exclusions),
    }
    if cfg.figures_dir is not None:
        paths = figmod.render_regress_figures(wls, design, cfg.figures_dir)
        doc["figures"] = [str(p) for p in paths]
    return doc


def cmd_simulate(cfg: RunConfig) -> dict[str, Any]:
    model = sim.TrueModel(
        beta=cfg.beta or dict(sim.DEFAULT_BETA),
        noise_sd=cfg.noise_sd,
        ticket_price=cfg.ticket_price if cfg.ticket_price else 8.0,
    )
    try:
        config = sim.SimConfig(n_items=cfg.n_items, weeks=cfg.weeks, seed=cfg.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    data = sim.simulate_dataset(model, config)
    paths = dsmod.write_dataset(data, cfg.out_dir)
    doc: dict[str, Any] = {
        "directory": str(cfg.out_dir),
        "seed": cfg.seed,
        "counts": {
            "items": len(data.items),
            "ratings": len(data.ratings),
            "critics": len(data.critics),
            "sales": len(data.sales),
            "profiles": len(data.profiles or []),
        },
        "written": {name: str(path) for name, path in paths.items()},
    }
    if cfg.recover:
        report = sim.recovery_experiment(model, config, reps=cfg.recover)
        doc["recovery"] = rp.recovery_section(report)
    return doc


_RENDERERS = {
    "validate": rp.render_validate_text,
    "metrics": rp.render_metrics_text,
    "regress": rp.render_regress_text,
    "simulate": rp.render_simulate_text,
}


def _emit(doc: dict[str, Any], cfg: RunConfig) -> None:
    if cfg.out_format == "json":
        text = json.dumps(doc, indent=2, allow_nan=True) + "\n"
    else:
        text = _RENDERERS[cfg.command](doc)
    if cfg.out is not None:
        cfg.out.parent.mkdir(parents=True, exist_ok=True)
        cfg.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv: Optional[list[str]] = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING,
                        format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    dispatch = {
        "validate": cmd_validate,
        "metrics": cmd_metrics,
        "regress": cmd_regress,
        "simulate": cmd_simulate,
    }
    try:
        doc = dispatch[cfg.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DatasetError, OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (em.RegressionError, sim.SimulationError) as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    _emit(doc, cfg)
    if cfg.command == "validate" and not doc["ok"]:
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
