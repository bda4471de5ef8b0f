"""Per-day factor-loading construction, strictly out-of-sample.

Every loading for day ``s`` is built from panel data at dates ``s+1`` and
older (the constant intercept and the static minable dummy aside), so the
cross-sectional regression of day-``s`` returns never sees day-``s`` data:

* ``int``  — unit column (the market-beta stand-in).
* ``cap``  — log of the previous day's market cap.
* ``mom``  — previous day's open-to-close log return; ``mom1``..``mom4``
  push the reference day further back one day at a time.
* ``hlv``  — log intraday volatility: half the log of the mean squared
  (high - low) / close ratio over the previous ``d_hlv`` days. A flat
  high == low stretch makes the mean zero and the loading -inf; that value
  is produced here and removed by the universe's finiteness filter.
* ``vol``  — log of the mean daily dollar volume over the previous
  ``d_v`` days.
* ``mnbl`` — 1 if the asset is minable, else 0.

All loadings use same-day price *ratios* or non-price fields, so scaling
one day's open/high/low/close by a common factor (a split) changes nothing.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .panel import (
    OPEN_TO_CLOSE,
    CLOSE_TO_CLOSE,
    AssetMeta,
    Panel,
    ReturnMatrix,
    open_close_returns,
)
from .universe import UniverseMask, WindowSpec, hlv_finiteness_filter

#: All recognized factor names, in the conventional report order.
FACTOR_NAMES = ("int", "cap", "mom", "mom1", "mom2", "mom3", "mom4", "hlv", "vol", "mnbl")

_MOM_LAGS = {"mom": 0, "mom1": 1, "mom2": 2, "mom3": 3, "mom4": 4}


@dataclass(frozen=True)
class FactorSpec:
    """Factor roster plus the moving-average windows the loadings use.

    The intercept, when included, must be the roster's first entry. ``d_v``
    and ``d_hlv`` default to the companion :class:`WindowSpec`'s values.
    """

    roster: tuple[str, ...] = ("int", "cap", "mom", "hlv", "vol")
    d_v: int | None = None
    d_hlv: int | None = None
    include_intercept: bool | None = None

    def __post_init__(self):
        roster = tuple(self.roster)
        object.__setattr__(self, "roster", roster)
        if not roster:
            raise ValueError("factor roster is empty")
        unknown = [n for n in roster if n not in FACTOR_NAMES]
        if unknown:
            raise ValueError(f"unknown factor names: {unknown}")
        if len(set(roster)) != len(roster):
            raise ValueError("factor roster contains duplicates")
        if "int" in roster and roster[0] != "int":
            raise ValueError("the intercept must be the first roster entry")
        has_int = "int" in roster
        if self.include_intercept is None:
            object.__setattr__(self, "include_intercept", has_int)
        elif self.include_intercept != has_int:
            raise ValueError("include_intercept contradicts the roster")

    @property
    def n_factors(self) -> int:
        return len(self.roster)

    def max_mom_lag(self) -> int:
        lags = [_MOM_LAGS[n] for n in self.roster if n in _MOM_LAGS]
        return max(lags) if lags else -1


@dataclass(frozen=True)
class LoadingsCube:
    """One loading matrix per regression day.

    ``values[j]`` is the ``n_selected x K`` matrix for day ``j`` of the
    lookback, whose panel column is ``day_indices[j]`` (date ``dates[j]``).
    Rows follow ``slugs``; columns follow ``factor_names``.
    """

    values: np.ndarray
    factor_names: tuple[str, ...]
    slugs: tuple[str, ...]
    day_indices: tuple[int, ...]
    dates: tuple[str, ...]
    return_convention: str = OPEN_TO_CLOSE

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        expected = (len(self.day_indices), len(self.slugs), len(self.factor_names))
        if arr.shape != expected:
            raise ValueError(f"cube shape {arr.shape} != {expected}")
        if len(self.dates) != len(self.day_indices):
            raise ValueError("dates and day_indices differ in length")

    @property
    def n_days(self) -> int:
        return self.values.shape[0]

    @property
    def n_selected(self) -> int:
        return self.values.shape[1]

    @property
    def n_factors(self) -> int:
        return self.values.shape[2]

    def day(self, j: int) -> np.ndarray:
        return self.values[j]

    def factor_matrix(self, name: str) -> np.ndarray:
        """Loadings of one factor as an ``n_selected x n_days`` matrix."""
        a = self.factor_names.index(name)
        return self.values[:, :, a].T


# ---------------------------------------------------------------------------
# Per-day builders
# ---------------------------------------------------------------------------

def loading_int(n: int) -> np.ndarray:
    """Unit column of length ``n``."""
    if n < 1:
        raise ValueError("need at least one asset for the intercept column")
    return np.ones(n, dtype=np.float64)


def loading_cap(panel: Panel, s: int) -> np.ndarray:
    """Log of the previous day's market cap, per asset."""
    if not 0 <= s < panel.n_days - 1:
        raise IndexError(f"day {s} has no previous-day cap in a {panel.n_days}-day panel")
    cap = panel.cap[:, s + 1]
    _require_positive(panel, cap, s + 1, "market cap")
    with np.errstate(invalid="ignore"):
        return np.log(cap)


def loading_mom(returns: ReturnMatrix, s: int, lag: int = 0) -> np.ndarray:
    """Open-to-close return of day ``s + 1 + lag``, per asset.

    Momentum always reads intraday returns, whatever convention the
    regression's dependent variable uses.
    """
    if returns.convention != OPEN_TO_CLOSE:
        raise ValueError("momentum loadings require open-to-close returns")
    if not 0 <= lag <= 4:
        raise ValueError(f"momentum lag must be in 0..4; got {lag}")
    target = s + 1 + lag
    if target not in returns.days:
        raise IndexError(f"day {target} outside the return matrix range {returns.days}")
    return returns.at_day(target).copy()


def loading_hlv(panel: Panel, s: int, d_hlv: int) -> np.ndarray:
    """Log intraday volatility from the previous ``d_hlv`` days' price ranges.

    May be -inf when high == low throughout the window; callers filter
    those rows rather than this function guessing a floor.
    """
    if d_hlv < 1:
        raise ValueError("d_hlv must be >= 1")
    if s < 0 or s + d_hlv >= panel.n_days:
        raise IndexError(
            f"day {s} needs {d_hlv} prior days; panel spans {panel.n_days}"
        )
    cols = slice(s + 1, s + 1 + d_hlv)
    close = panel.close[:, cols]
    for t in range(s + 1, s + 1 + d_hlv):
        _require_positive(panel, panel.close[:, t], t, "close")
    ratio = (panel.high[:, cols] - panel.low[:, cols]) / close
    mean_sq = np.mean(ratio**2, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return 0.5 * np.log(mean_sq)


def loading_vol(panel: Panel, s: int, d_v: int) -> np.ndarray:
    """Log of the mean daily dollar volume over the previous ``d_v`` days."""
    if d_v < 1:
        raise ValueError("d_v must be >= 1")
    if s < 0 or s + d_v >= panel.n_days:
        raise IndexError(f"day {s} needs {d_v} prior days; panel spans {panel.n_days}")
    mean_vol = np.mean(panel.volume[:, s + 1:s + 1 + d_v], axis=1)
    _require_positive(panel, mean_vol, s + 1, "mean volume")
    with np.errstate(invalid="ignore"):
        return np.log(mean_vol)


def loading_mnbl(assets: Sequence[AssetMeta]) -> np.ndarray:
    """Binary minable dummy; static across days."""
    return np.array([1.0 if a.minable else 0.0 for a in assets])


def _require_positive(panel: Panel, column: np.ndarray, day: int, what: str) -> None:
    with np.errstate(invalid="ignore"):
        bad = ~np.isnan(column) & (column <= 0.0)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise ValueError(
            f"non-positive {what} for asset '{panel.assets[i].slug}' on {panel.axis[day]}"
        )


# ---------------------------------------------------------------------------
# Whole-lookback assembly
# ---------------------------------------------------------------------------

def _window_mean(x: np.ndarray, width: int) -> np.ndarray:
    """Trailing means: out[:, t] = x[:, t:t+width].mean(axis=1)."""
    view = np.lib.stride_tricks.sliding_window_view(x, width, axis=1)
    return view.mean(axis=-1)


def _check_positive_block(panel: Panel, start: int, stop: int, field: str) -> None:
    block = getattr(panel, field)[:, start:stop]
    with np.errstate(invalid="ignore"):
        bad = ~np.isnan(block) & (block <= 0.0)
    if bad.any():
        i, j = (int(x[0]) for x in np.nonzero(bad))
        raise ValueError(
            f"non-positive {field} for asset '{panel.assets[i].slug}' "
            f"on {panel.axis[start + j]}"
        )


def build_loadings(
    panel: Panel,
    mask: UniverseMask,
    window: WindowSpec,
    spec: FactorSpec,
    return_convention: str = OPEN_TO_CLOSE,
) -> tuple[LoadingsCube, UniverseMask]:
    """Assemble the roster's loading columns for every lookback day.

    Day ``j`` of the cube maps to panel column ``back + j``; all its inputs
    sit at columns ``back + j + 1`` and older. Returns the cube (rows = the
    assets ``mask`` selects) together with the mask refined by the
    hlv-finiteness filter; the cube itself keeps the pre-filter rows so its
    contents do not depend on data newer than each day.
    """
    if return_convention not in (OPEN_TO_CLOSE, CLOSE_TO_CLOSE):
        raise ValueError(f"unknown return convention {return_convention!r}")
    idx = mask.indices()
    if len(idx) == 0:
        raise ValueError("no assets selected; cannot build loadings")
    if panel.n_days < window.padded:
        raise IndexError(
            f"panel spans {panel.n_days} days; padded window needs {window.padded}"
        )
    d_v = spec.d_v if spec.d_v is not None else window.d_v
    d_hlv = spec.d_hlv if spec.d_hlv is not None else window.d_hlv
    if not 1 <= d_v <= window.d_r:
        raise ValueError(f"d_v must be in [1, d_r]; got {d_v}")
    if not 1 <= d_hlv <= window.d_r:
        raise ValueError(f"d_hlv must be in [1, d_r]; got {d_hlv}")

    sub = panel.take_rows(idx)
    back, T = window.back, window.lookback
    n = sub.n_assets

    rets = None
    max_lag = spec.max_mom_lag()
    if max_lag >= 0:
        rets = open_close_returns(sub, range(back + 1, back + T + max_lag + 1))

    columns: list[np.ndarray] = []  # each (n, T)
    hlv_matrix = None
    for name in spec.roster:
        if name == "int":
            mat = np.ones((n, T))
        elif name == "cap":
            block = sub.cap[:, back + 1:back + 1 + T]
            _check_positive_block(sub, back + 1, back + 1 + T, "cap")
            with np.errstate(invalid="ignore"):
                mat = np.log(block)
        elif name in _MOM_LAGS:
            k = _MOM_LAGS[name]
            mat = rets.values[:, k:k + T]
        elif name == "hlv":
            span = slice(back + 1, back + T + d_hlv)
            _check_positive_block(sub, span.start, span.stop, "close")
            ratio = (sub.high[:, span] - sub.low[:, span]) / sub.close[:, span]
            with np.errstate(divide="ignore", invalid="ignore"):
                mat = 0.5 * np.log(_window_mean(ratio**2, d_hlv))
            hlv_matrix = mat
        elif name == "vol":
            span = slice(back + 1, back + T + d_v)
            means = _window_mean(sub.volume[:, span], d_v)
            with np.errstate(invalid="ignore"):
                bad = ~np.isnan(means) & (means <= 0.0)
            if bad.any():
                i, j = (int(x[0]) for x in np.nonzero(bad))
                raise ValueError(
                    f"non-positive mean volume for asset '{sub.assets[i].slug}' "
                    f"on {sub.axis[back + j]}"
                )
            with np.errstate(invalid="ignore"):
                mat = np.log(means)
        elif name == "mnbl":
            mat = np.tile(loading_mnbl(sub.assets)[:, None], (1, T))
        else:  # pragma: no cover - roster validated in FactorSpec
            raise ValueError(f"unknown factor {name!r}")
        columns.append(mat)

    cube_values = np.stack([m.T for m in columns], axis=2)  # (T, n, K)
    day_indices = tuple(range(back, back + T))
    cube = LoadingsCube(
        values=cube_values,
        factor_names=spec.roster,
        slugs=sub.slugs,
        day_indices=day_indices,
        dates=tuple(panel.axis[s] for s in day_indices),
        return_convention=return_convention,
    )
    refined = hlv_finiteness_filter(mask, hlv_matrix) if hlv_matrix is not None else mask
    return cube, refined
