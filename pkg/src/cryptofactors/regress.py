"""Daily cross-sectional OLS, factor-return series and annualized t-stats.

Each regression day fits that day's returns on the day's loading matrix by
ordinary least squares, solved through an orthogonal decomposition rather
than the normal equations. The time series of coefficients is summarized
per factor by the annualized t-statistic

    t = sqrt(365) * mean(f) / sd(f)

with the sample standard deviation on ``T - 1`` degrees of freedom; the
annualization uses 365 because these markets trade every calendar day. As
a coarse reading, |t| above 3 marks a relevant predictor and |t| below 2 a
poor one; the report carries that only as an annotation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSeriesError,
    InsufficientCrossSectionError,
    RankDeficiencyError,
)
from .factors import FactorSpec, build_loadings
from .panel import CLOSE_TO_CLOSE, OPEN_TO_CLOSE, Panel, close_close_returns, open_close_returns
from .universe import UniverseMask, WindowSpec, select_universe

ANNUALIZATION = math.sqrt(365.0)

#: Cross-section floor per regression day: one residual degree of freedom
#: plus margin beyond the K+1 minimum OLS itself needs.
MIN_EXTRA_ASSETS = 2


@dataclass(frozen=True)
class DayRegression:
    """One day's fit: coefficients, residuals and fitted values."""

    day_index: int
    date: str
    factor_names: tuple[str, ...]
    coefficients: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray


@dataclass(frozen=True)
class FactorReturnSeries:
    """Daily regression coefficients, one row per lookback day.

    Row ``j`` belongs to panel column ``day_indices[j]`` / calendar date
    ``dates[j]`` (most recent first, like the panel axis).
    """

    values: np.ndarray
    factor_names: tuple[str, ...]
    dates: tuple[str, ...]
    day_indices: tuple[int, ...]

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        if arr.shape != (len(self.dates), len(self.factor_names)):
            raise ValueError(
                f"series shape {arr.shape} != ({len(self.dates)}, {len(self.factor_names)})"
            )
        if len(self.day_indices) != len(self.dates):
            raise ValueError("day_indices and dates differ in length")

    @property
    def n_days(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.factor_names.index(name)]


@dataclass(frozen=True)
class FactorStat:
    """Annualized t-statistic for one factor, with its mean/sd provenance."""

    name: str
    mean: float
    sd: float
    tstat: float
    n_days: int

    def quality(self) -> str:
        """Coarse predictor annotation: |t|>3 relevant, |t|<2 poor."""
        magnitude = abs(self.tstat)
        if magnitude > 3.0:
            return "relevant"
        if magnitude < 2.0:
            return "poor"
        return "borderline"


@dataclass(frozen=True)
class TStatReport:
    stats: tuple[FactorStat, ...]

    @property
    def factor_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.stats)

    def __getitem__(self, name: str) -> FactorStat:
        for s in self.stats:
            if s.name == name:
                return s
        raise KeyError(name)

    def tstats(self) -> dict[str, float]:
        return {s.name: s.tstat for s in self.stats}


def _dependent_columns(X: np.ndarray) -> tuple[int, ...]:
    """Column indices that are linear combinations of the preceding ones."""
    dependent = []
    kept: list[int] = []
    for j in range(X.shape[1]):
        trial = X[:, kept + [j]]
        if np.linalg.matrix_rank(trial) == len(kept) + 1:
            kept.append(j)
        else:
            dependent.append(j)
    return tuple(dependent)


def cross_section_ols(y: np.ndarray, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares coefficients and residuals of ``y`` on the columns of ``X``.

    Requires more observations than regressors and a full-column-rank
    design; rank deficiency raises :class:`RankDeficiencyError` listing the
    dependent columns instead of silently dropping them, which would
    corrupt the factor-return series the t-stats are built from.
    """
    y = np.asarray(y, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if y.ndim != 1 or X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"incompatible shapes: y {y.shape}, X {X.shape}")
    n, k = X.shape
    if n <= k:
        raise InsufficientCrossSectionError(
            f"{n} observations for {k} regressors; need at least {k + 1}"
        )
    if not np.isfinite(y).all():
        raise ValueError("dependent variable contains non-finite values")
    if not np.isfinite(X).all():
        raise ValueError("design matrix contains non-finite values")
    coefficients, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < k:
        cols = _dependent_columns(X)
        raise RankDeficiencyError(
            f"design matrix is rank deficient (rank {rank} of {k}); "
            f"dependent columns: {list(cols)}",
            columns=cols,
        )
    residuals = y - X @ coefficients
    return coefficients, residuals


def fit_day(
    y: np.ndarray,
    X: np.ndarray,
    factor_names: tuple[str, ...],
    day_index: int,
    date: str,
) -> DayRegression:
    """One day's cross-sectional fit with the pipeline's cross-section floor."""
    n, k = X.shape
    if n < k + 1 + MIN_EXTRA_ASSETS:
        raise InsufficientCrossSectionError(
            f"{date}: cross-section of {n} assets is below the floor of "
            f"{k + 1 + MIN_EXTRA_ASSETS} for {k} factors"
        )
    try:
        coefficients, residuals = cross_section_ols(y, X)
    except RankDeficiencyError as exc:
        names = [factor_names[j] for j in exc.columns]
        raise RankDeficiencyError(
            f"{date}: rank-deficient loadings; dependent columns: {names}",
            columns=exc.columns,
        ) from None
    return DayRegression(
        day_index=day_index,
        date=date,
        factor_names=factor_names,
        coefficients=coefficients,
        residuals=residuals,
        fitted=y - residuals,
    )


def annualized_tstat(series: FactorReturnSeries) -> TStatReport:
    """Annualized t-statistic per factor from its daily coefficient series."""
    T = series.n_days
    if T < 2:
        raise ValueError(f"need at least 2 regression days; have {T}")
    stats = []
    for a, name in enumerate(series.factor_names):
        column = series.values[:, a]
        mean = float(np.mean(column))
        sd = float(np.std(column, ddof=1))
        if sd == 0.0:
            raise DegenerateSeriesError(
                f"factor '{name}' has a constant coefficient series; "
                "t-statistic undefined"
            )
        stats.append(
            FactorStat(name=name, mean=mean, sd=sd, tstat=ANNUALIZATION * mean / sd, n_days=T)
        )
    return TStatReport(tuple(stats))


def run_backtest(
    panel: Panel,
    window: WindowSpec,
    spec: FactorSpec,
    return_convention: str = OPEN_TO_CLOSE,
    exclusions: tuple[str, ...] = (),
) -> tuple[FactorReturnSeries, TStatReport]:
    """Full out-of-sample pipeline over one window configuration.

    Select the universe on the padded window, build the loadings, drop
    assets with non-finite volatility loadings, regress each lookback day's
    returns on that day's loadings, and annualize the coefficient series.
    Exactly the ``window.padded`` most recent panel columns are consumed.
    """
    sub = panel.first_days(window.padded) if panel.n_days > window.padded else panel
    mask = select_universe(sub, window, exclusions)
    if mask.n_selected == 0:
        raise ValueError("empty universe: every asset was excluded")
    cube, refined = build_loadings(sub, mask, window, spec, return_convention)
    base_rows = mask.indices()
    keep = np.array(
        [r for r, panel_row in enumerate(base_rows) if refined.selected[panel_row]],
        dtype=int,
    )
    if keep.size == 0:
        raise ValueError("empty universe after the volatility-finiteness filter")

    regressed = sub.take_rows(base_rows)
    day_range = range(window.back, window.back + window.lookback)
    if return_convention == OPEN_TO_CLOSE:
        returns = open_close_returns(regressed, day_range)
    elif return_convention == CLOSE_TO_CLOSE:
        returns = close_close_returns(regressed, day_range)
    else:
        raise ValueError(f"unknown return convention {return_convention!r}")

    T, K = window.lookback, spec.n_factors
    values = np.empty((T, K), dtype=np.float64)
    for j in range(T):
        X = cube.values[j][keep, :]
        y = returns.values[keep, j]
        day = fit_day(y, X, spec.roster, cube.day_indices[j], cube.dates[j])
        values[j] = day.coefficients
    series = FactorReturnSeries(
        values=values,
        factor_names=spec.roster,
        dates=cube.dates,
        day_indices=cube.day_indices,
    )
    return series, annualized_tstat(series)


@dataclass(frozen=True)
class TurnoverSummary:
    """Cross-sectional six-number summary of volume-to-cap ratios."""

    minimum: float
    q1: float
    median: float
    mean: float
    q3: float
    maximum: float

    LABELS = ("Min", "1st Qu.", "Median", "Mean", "3rd Qu.", "Max")

    def as_tuple(self) -> tuple[float, float, float, float, float, float]:
        return (self.minimum, self.q1, self.median, self.mean, self.q3, self.maximum)


def turnover_summary(
    panel: Panel, mask: UniverseMask, s: int, d_v: int = 20
) -> TurnoverSummary:
    """Summary of (``d_v``-day average dollar volume) / (market cap) at day ``s``.

    The volume average covers the ``d_v`` days preceding ``s``, matching the
    volume loading; the cap is day ``s``'s. Quartiles interpolate linearly
    between order statistics.
    """
    idx = mask.indices()
    if len(idx) == 0:
        raise ValueError("empty selection: no turnover to summarize")
    if d_v < 1:
        raise ValueError("d_v must be >= 1")
    if s < 0 or s + d_v >= panel.n_days:
        raise IndexError(f"day {s} needs {d_v} prior days; panel spans {panel.n_days}")
    volume = panel.volume[idx, s + 1:s + 1 + d_v]
    caps = panel.cap[idx, s]
    if np.isnan(volume).any():
        raise ValueError("missing volume inside the averaging window")
    with np.errstate(invalid="ignore"):
        bad = np.isnan(caps) | (caps <= 0.0)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise ValueError(
            f"non-positive or missing market cap for asset "
            f"'{panel.assets[idx[i]].slug}' on {panel.axis[s]}"
        )
    ratios = volume.mean(axis=1) / caps
    q1, median, q3 = np.percentile(ratios, [25.0, 50.0, 75.0])
    return TurnoverSummary(
        minimum=float(ratios.min()),
        q1=float(q1),
        median=float(median),
        mean=float(ratios.mean()),
        q3=float(q3),
        maximum=float(ratios.max()),
    )
