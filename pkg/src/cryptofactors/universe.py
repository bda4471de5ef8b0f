"""Tradeable-universe selection over a padded data window.

An asset makes the cross-section only if, over the whole padded selection
window (``days + d_r + 1`` most recent dates), all six panel fields are
present and the volume is never zero — zero volume being the cheap tell for
a stale quote. Explicit exclusions handle the cases a human has to call,
and a final pass drops assets whose intraday-volatility loading degenerates
to -inf (high == low across an entire averaging window).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .panel import FIELDS, Panel

EXCLUDE_MISSING = "missing-data"
EXCLUDE_ZERO_VOLUME = "zero-volume"
EXCLUDE_EXPLICIT = "explicit-exclusion"
EXCLUDE_NONFINITE_HLV = "nonfinite-hlv"


@dataclass(frozen=True)
class WindowSpec:
    """Selection/regression window geometry, all quantities in days.

    ``days`` is the selection period; the completeness filters run over the
    padded window of ``days + d_r + 1`` most recent dates so that ``d_r``-day
    moving averages (and the extra day every lagged quantity needs) stay
    out-of-sample. ``back`` skips that many most recent days before the
    ``lookback``-day regression period.
    """

    days: int
    back: int = 0
    lookback: int | None = None
    d_r: int = 20
    d_v: int = 20
    d_hlv: int = 20

    def __post_init__(self):
        if self.lookback is None:
            object.__setattr__(self, "lookback", self.days)
        if self.days < 1:
            raise ValueError("days must be >= 1")
        if self.back < 0:
            raise ValueError("back must be >= 0")
        if self.lookback < 1:
            raise ValueError("lookback must be >= 1")
        if self.back + self.lookback > self.days:
            raise ValueError(
                f"back + lookback = {self.back + self.lookback} exceeds days = {self.days}"
            )
        if self.d_r < 4:
            raise ValueError("d_r must be >= 4 (four-day momentum lags need the room)")
        if not 1 <= self.d_v <= self.d_r:
            raise ValueError(f"d_v must be in [1, d_r]; got {self.d_v}")
        if not 1 <= self.d_hlv <= self.d_r:
            raise ValueError(f"d_hlv must be in [1, d_r]; got {self.d_hlv}")

    @property
    def padded(self) -> int:
        """Number of panel columns the pipeline consumes."""
        return self.days + self.d_r + 1


@dataclass(frozen=True)
class UniverseMask:
    """Per-asset selection flags plus one exclusion tag per dropped asset."""

    slugs: tuple[str, ...]
    selected: np.ndarray
    reasons: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        sel = np.array(self.selected, dtype=bool)
        sel.flags.writeable = False
        object.__setattr__(self, "selected", sel)
        object.__setattr__(self, "slugs", tuple(self.slugs))
        if sel.shape != (len(self.slugs),):
            raise ValueError("selected flags and slugs differ in length")
        tagged = set(self.reasons)
        excluded = {s for s, ok in zip(self.slugs, sel) if not ok}
        if tagged != excluded:
            raise ValueError("exclusion reasons do not match the deselected slugs")

    @property
    def n_selected(self) -> int:
        return int(self.selected.sum())

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.selected)

    def selected_slugs(self) -> tuple[str, ...]:
        return tuple(self.slugs[i] for i in self.indices())


def select_universe(
    panel: Panel, window: WindowSpec, exclusions: tuple[str, ...] = ()
) -> UniverseMask:
    """Apply the completeness, non-zero-volume and explicit-exclusion filters.

    The filters run over the full padded window even when ``back`` restricts
    the regression to an older sub-period, so one universe can be reused
    across that period's sub-year regressions.
    """
    d = window.padded
    if panel.n_days < d:
        raise IndexError(
            f"panel spans {panel.n_days} days; padded selection window needs {d}"
        )
    excluded_slugs = set(exclusions)
    any_missing = np.zeros(panel.n_assets, dtype=bool)
    for name in FIELDS:
        any_missing |= np.isnan(getattr(panel, name)[:, :d]).any(axis=1)
    zero_volume = (panel.volume[:, :d] == 0.0).any(axis=1)

    selected = np.ones(panel.n_assets, dtype=bool)
    reasons: dict[str, str] = {}
    for i, meta in enumerate(panel.assets):
        if meta.slug in excluded_slugs:
            reasons[meta.slug] = EXCLUDE_EXPLICIT
        elif any_missing[i]:
            reasons[meta.slug] = EXCLUDE_MISSING
        elif zero_volume[i]:
            reasons[meta.slug] = EXCLUDE_ZERO_VOLUME
        else:
            continue
        selected[i] = False
    return UniverseMask(panel.slugs, selected, reasons)


def hlv_finiteness_filter(mask: UniverseMask, hlv_loadings: np.ndarray) -> UniverseMask:
    """Drop selected assets with any non-finite intraday-volatility loading.

    ``hlv_loadings`` has one row per currently selected asset (in
    ``mask.indices()`` order) and one column per regression day. Already
    excluded assets are untouched, so the filter is idempotent.
    """
    hlv = np.asarray(hlv_loadings, dtype=np.float64)
    idx = mask.indices()
    if hlv.ndim != 2 or hlv.shape[0] != len(idx):
        raise ValueError(
            f"hlv loadings have {hlv.shape[0] if hlv.ndim == 2 else '?'} rows; "
            f"mask selects {len(idx)} assets"
        )
    nonfinite = ~np.isfinite(hlv).all(axis=1)
    if not nonfinite.any():
        return mask
    selected = mask.selected.copy()
    reasons = dict(mask.reasons)
    for row, panel_row in enumerate(idx):
        if nonfinite[row]:
            selected[panel_row] = False
            reasons[mask.slugs[panel_row]] = EXCLUDE_NONFINITE_HLV
    return UniverseMask(mask.slugs, selected, reasons)


@dataclass(frozen=True)
class StaleRun:
    slug: str
    run_length: int


def stale_price_report(
    panel: Panel, threshold: int = 30, window: WindowSpec | None = None
) -> tuple[StaleRun, ...]:
    """Assets whose close is constant for ``threshold``-plus consecutive days.

    Advisory only: long flat stretches are how "artifact" stale prices show
    up, but exclusion stays a user decision (feed the chosen slugs back in
    via the exclusion list). Missing cells break a run.
    """
    if threshold < 2:
        raise ValueError("threshold must be >= 2")
    d = panel.n_days if window is None else min(window.padded, panel.n_days)
    closes = panel.close[:, :d]
    hits = []
    for i, meta in enumerate(panel.assets):
        row = closes[i]
        with np.errstate(invalid="ignore"):
            same = row[1:] == row[:-1]  # NaN compares False, ending any run
        longest = run = 1
        for flag in same:
            run = run + 1 if flag else 1
            longest = max(longest, run)
        if longest >= threshold:
            hits.append(StaleRun(meta.slug, longest))
    hits.sort(key=lambda h: (-h.run_length, h.slug))
    return tuple(hits)


def read_exclusion_file(path) -> tuple[str, ...]:
    """One slug per line; blank lines and ``#`` comments are ignored."""
    slugs = []
    for line in Path(path).read_text(encoding="utf-8").split("\n"):
        entry = line.strip()
        if entry and not entry.startswith("#"):
            slugs.append(entry)
    return tuple(slugs)
