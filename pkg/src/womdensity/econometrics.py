"""Panel design construction, least-squares estimation, and inference.

The response variable is the logit of weekly ratings density. Regressors
are the marketing budget, weekly screen count, the mean-centered average
user rating and its square, the dispersion of critic scores, fractional
genre weights, and the log of weeks since release.

Fits go through a column-pivoted QR decomposition rather than the normal
equations; weighted fits rescale rows by the square root of the
observation weight and report inference in the weighted metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.special import betainc, gammainc

DEFAULT_TRACKED_GENRES = (
    "ROMANCE",
    "THRILLER",
    "DRAMA",
    "COMEDY",
    "SCIFI",
    "ACTION",
    "KIDS",
)

INTERCEPT = "_CONS"

# Rank tolerance, relative to the largest column norm of the (weighted)
# design.  Columns whose pivoted R diagonal falls below this are treated
# as linearly dependent.
RANK_TOLERANCE = 1e-10


class RegressionError(Exception):
    """Base class for estimation failures."""


class RankDeficiencyError(RegressionError):
    """Design matrix is not of full column rank."""

    def __init__(self, columns: Sequence[str]):
        self.columns = tuple(columns)
        super().__init__(
            "design matrix is rank deficient; dependent columns: "
            + ", ".join(self.columns)
        )


class InsufficientDataError(RegressionError):
    """Fewer observations than free parameters."""


class NonPositiveWeightError(RegressionError):
    """A WLS weight was zero, negative, or non-finite."""

    def __init__(self, row: int, value: float):
        self.row = row
        self.value = value
        super().__init__(f"weight at row {row} is {value!r}; weights must be > 0")


@dataclass(frozen=True)
class DesignSpec:
    """Chooses which regressors enter the weekly density model."""

    tracked_genres: tuple[str, ...] = DEFAULT_TRACKED_GENRES
    center_avg: bool = True
    include_quadratic: bool = True
    intercept: bool = True

    def __post_init__(self):
        if not self.tracked_genres:
            raise ValueError("tracked_genres must be non-empty")
        if len(set(self.tracked_genres)) != len(self.tracked_genres):
            raise ValueError("tracked_genres contains duplicates")


@dataclass
class DesignMatrix:
    """Assembled regressor matrix with the logit-density response.

    ``weights`` carries the estimated viewer count per observation so the
    weighted fit can down-weight thin weeks.  ``avg_mean`` records the
    centering constant applied to the average-rating columns so later
    predictions can reproduce the same transformation.
    """

    column_names: tuple[str, ...]
    rows: np.ndarray
    response: np.ndarray
    weights: Optional[np.ndarray]
    avg_mean: float

    @property
    def n_obs(self) -> int:
        return self.rows.shape[0]

    @property
    def n_params(self) -> int:
        return self.rows.shape[1]


@dataclass
class RegressionFit:
    """Coefficients and inference from an OLS or WLS fit."""

    coefficients: dict[str, float]
    std_errors: dict[str, float]
    t_values: dict[str, float]
    p_values: dict[str, float]
    r_squared: float
    adj_r_squared: float
    residuals: np.ndarray
    df_residual: int
    weighted: bool


@dataclass
class BPTestResult:
    """Lagrange-multiplier heteroskedasticity test result."""

    lm_statistic: float
    df: int
    p_value: float
    degenerate: bool = False


@dataclass
class HypothesisResult:
    name: str
    coefficient: str
    description: str
    estimate: float
    p_value: float
    verdict: str  # supported | not-supported | inconclusive


@dataclass
class HypothesisReport:
    alpha: float
    results: list[HypothesisResult] = field(default_factory=list)


def build_design(panel, spec: DesignSpec = DesignSpec()) -> DesignMatrix:
    """Assemble the design matrix from panel rows.

    Column order: intercept, MKT, SCR, centered AVG, squared centered
    AVG, CRSTD, one column per tracked genre, LWEEK.  A row's genre
    column holds the item's 1/k membership weight when that genre is
    among its k listed genres, else 0; untracked genres contribute no
    column, so genre columns need not sum to 1.
    """
    rows = list(panel)
    if not rows:
        raise ValueError("panel is empty")

    avg_values = np.array([r.avg_rating for r in rows], dtype=float)
    avg_mean = float(avg_values.mean()) if spec.center_avg else 0.0

    names: list[str] = []
    if spec.intercept:
        names.append(INTERCEPT)
    names += ["MKT", "SCR", "AVG"]
    if spec.include_quadratic:
        names.append("AVG2")
    names.append("CRSTD")
    names.extend(spec.tracked_genres)
    names.append("LWEEK")

    X = np.empty((len(rows), len(names)), dtype=float)
    y = np.empty(len(rows), dtype=float)
    w = np.empty(len(rows), dtype=float)
    for i, row in enumerate(rows):
        avg_c = row.avg_rating - avg_mean
        values = []
        if spec.intercept:
            values.append(1.0)
        values += [row.mkt, row.scr, avg_c]
        if spec.include_quadratic:
            values.append(avg_c * avg_c)
        values.append(row.crstd)
        for genre in spec.tracked_genres:
            values.append(row.genre_weights.get(genre, 0.0))
        values.append(row.lweek)
        X[i] = values
        y[i] = row.ld
        w[i] = row.viewers
        if not np.all(np.isfinite(X[i])) or not math.isfinite(y[i]):
            raise ValueError(
                f"non-finite value in panel row ({row.item_id}, week {row.week_index})"
            )

    return DesignMatrix(
        column_names=tuple(names), rows=X, response=y, weights=w, avg_mean=avg_mean
    )


def _qr_solve(X: np.ndarray, y: np.ndarray, names: Sequence[str]):
    """Least-squares solve via column-pivoted QR with rank detection.

    Returns (beta, unscaled covariance (X'X)^-1).  Raises
    RankDeficiencyError naming the pivoted-out columns when the numeric
    rank is below the column count.
    """
    n, p = X.shape
    q, r, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    col_norms = np.linalg.norm(X, axis=0)
    threshold = RANK_TOLERANCE * (col_norms.max() if col_norms.size else 0.0)
    diag = np.abs(np.diag(r))
    rank = int(np.count_nonzero(diag > threshold))
    if rank < p:
        dependent = [names[piv[k]] for k in range(rank, p)]
        raise RankDeficiencyError(dependent)

    qty = q.T @ y
    beta_piv = scipy.linalg.solve_triangular(r, qty)
    beta = np.empty(p)
    beta[piv] = beta_piv

    r_inv = scipy.linalg.solve_triangular(r, np.eye(p))
    cov_piv = r_inv @ r_inv.T
    cov = np.empty((p, p))
    cov[np.ix_(piv, piv)] = cov_piv
    return beta, cov


def _fit(design: DesignMatrix, weights: Optional[np.ndarray]) -> RegressionFit:
    X = np.asarray(design.rows, dtype=float)
    y = np.asarray(design.response, dtype=float)
    n, p = X.shape
    if n <= p:
        raise InsufficientDataError(
            f"need more observations than parameters (n={n}, p={p})"
        )

    if weights is None:
        Xw, yw = X, y
    else:
        weights = np.asarray(weights, dtype=float)
        for i, wi in enumerate(weights):
            if not math.isfinite(wi) or wi <= 0.0:
                raise NonPositiveWeightError(i, wi)
        sw = np.sqrt(weights)
        Xw = X * sw[:, None]
        yw = y * sw

    beta, cov_unscaled = _qr_solve(Xw, yw, design.column_names)

    residuals = y - X @ beta
    if weights is None:
        rss = float(residuals @ residuals)
        centered = y - y.mean()
        tss = float(centered @ centered)
    else:
        wres = residuals * np.sqrt(weights)
        rss = float(wres @ wres)
        ybar_w = float(weights @ y / weights.sum())
        tss = float(weights @ (y - ybar_w) ** 2)

    df = n - p
    s2 = rss / df
    se = np.sqrt(s2 * np.diag(cov_unscaled))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_vals = np.where(se > 0, beta / se, np.inf * np.sign(beta))
    p_vals = np.array([2.0 * (1.0 - student_t_cdf(abs(t), df)) for t in t_vals])

    if tss > 0:
        r2 = 1.0 - rss / tss
    else:
        r2 = 1.0 if rss == 0.0 else float("nan")
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / df

    names = design.column_names
    return RegressionFit(
        coefficients=dict(zip(names, beta.tolist())),
        std_errors=dict(zip(names, se.tolist())),
        t_values=dict(zip(names, t_vals.tolist())),
        p_values=dict(zip(names, p_vals.tolist())),
        r_squared=r2,
        adj_r_squared=adj_r2,
        residuals=residuals,
        df_residual=df,
        weighted=weights is not None,
    )


def fit_ols(design: DesignMatrix) -> RegressionFit:
    """Ordinary least squares on the design, ignoring any weights."""
    return _fit(design, None)


def fit_wls(design: DesignMatrix) -> RegressionFit:
    """Weighted least squares with the design's observation weights.

    Equivalent to OLS after scaling each row of the design and response
    by the square root of its weight; R-squared is computed from the
    weighted residuals against the weighted mean.  Coefficients and
    t-values are invariant to rescaling the weight vector by any
    positive constant.
    """
    if design.weights is None:
        raise ValueError("design carries no observation weights")
    return _fit(design, design.weights)


def breusch_pagan(fit: RegressionFit, design: DesignMatrix) -> BPTestResult:
    """LM heteroskedasticity test on a fitted model.

    Regresses the squared residuals on the design's regressors (with an
    intercept) and forms n times the auxiliary R-squared, referred to a
    chi-squared distribution with one degree of freedom per
    non-intercept regressor.
    """
    e2 = np.asarray(fit.residuals, dtype=float) ** 2
    X = np.asarray(design.rows, dtype=float)
    names = list(design.column_names)
    # any nonzero constant column already serves as the intercept
    constant = (X.max(axis=0) == X.min(axis=0)) & (X[0] != 0.0)
    if not constant.any():
        X = np.column_stack([np.ones(X.shape[0]), X])
        names = [INTERCEPT] + names
    n, p = X.shape
    if n <= p:
        raise InsufficientDataError(
            f"auxiliary regression needs n > p (n={n}, p={p})"
        )
    df = p - 1

    centered = e2 - e2.mean()
    tss = float(centered @ centered)
    # an exact fit leaves only rounding noise in the residuals
    resid_scale = float(np.max(np.abs(fit.residuals))) if e2.size else 0.0
    y_scale = max(float(np.max(np.abs(design.response))), 1.0)
    if tss <= 0.0 or resid_scale <= RANK_TOLERANCE * y_scale:
        # Squared residuals carry no variation to explain.
        return BPTestResult(lm_statistic=0.0, df=df, p_value=1.0, degenerate=True)

    beta, _ = _qr_solve(X, e2, names)
    resid = e2 - X @ beta
    rss = float(resid @ resid)
    r2_aux = 1.0 - rss / tss
    lm = n * max(r2_aux, 0.0)
    p_value = 1.0 - chi_squared_cdf(lm, df)
    return BPTestResult(lm_statistic=lm, df=df, p_value=p_value)


def student_t_cdf(x: float, df: float) -> float:
    """CDF of Student's t via the regularized incomplete beta function."""
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    x = float(x)
    if math.isnan(x):
        return float("nan")
    if math.isinf(x):
        return 1.0 if x > 0 else 0.0
    # P(T > |x|) = I_{df/(df+x^2)}(df/2, 1/2) / 2
    z = df / (df + x * x)
    tail = 0.5 * float(betainc(0.5 * df, 0.5, z))
    return 1.0 - tail if x >= 0 else tail


def chi_squared_cdf(x: float, df: float) -> float:
    """CDF of the chi-squared distribution (regularized lower gamma)."""
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    if x < 0:
        raise ValueError(f"x must be >= 0, got {x}")
    return float(gammainc(0.5 * df, 0.5 * x))


_HYPOTHESES = (
    ("H1", "AVG2", +1, "rating propensity rises at both quality extremes"),
    ("H2", "MKT", +1, "marketing effort raises rating propensity"),
    ("H3", "SCR", -1, "wider availability lowers rating propensity"),
    ("H4", "CRSTD", +1, "critic disagreement raises rating propensity"),
)


def evaluate_hypotheses(fit: RegressionFit, alpha: float = 0.05) -> HypothesisReport:
    """Judge the four sign hypotheses against a fit.

    A hypothesis is supported when its coefficient is significant at
    ``alpha`` with the predicted sign, not-supported when significant
    with the opposite sign, and inconclusive otherwise.
    """
    report = HypothesisReport(alpha=alpha)
    for name, coef, sign, description in _HYPOTHESES:
        if coef not in fit.coefficients:
            raise KeyError(f"fit has no coefficient {coef!r} required by {name}")
        estimate = fit.coefficients[coef]
        p = fit.p_values[coef]
        if p < alpha and estimate * sign > 0:
            verdict = "supported"
        elif p < alpha and estimate * sign < 0:
            verdict = "not-supported"
        else:
            verdict = "inconclusive"
        report.results.append(
            HypothesisResult(
                name=name,
                coefficient=coef,
                description=description,
                estimate=estimate,
                p_value=p,
                verdict=verdict,
            )
        )
    return report


def significance_codes(p_values: Mapping[str, float]) -> dict[str, str]:
    """Map p-values to the three-letter significance codes.

    Boundary values take the weaker code: p = 0.001 earns "b", p = 0.01
    earns "a", p = 0.05 earns none.
    """
    codes = {}
    for name, p in p_values.items():
        if p < 0.001:
            codes[name] = "c"
        elif p < 0.01:
            codes[name] = "b"
        elif p < 0.05:
            codes[name] = "a"
        else:
            codes[name] = ""
    return codes
