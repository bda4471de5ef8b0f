"""Cap- and price-weighted market indexes with declared split adjustment.

Both indexes are normalized sums over a selected universe, scaled so the
earliest day of the period equals 1 and emitted oldest-first for plotting.
Price-weighted sums need split-adjusted closes: an issuer's forward split
divides the quoted price without touching market cap or volume, so raw
pre-split prices would fake a collapse. Splits are declared in a table
rather than sniffed from price jumps; the one documented case this ships
with is Xaurum's 8000-to-1 forward split effective 2016-08-23.
"""
from __future__ import annotations

import io
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dates import normalize_date
from .errors import ParseError
from .panel import Panel
from .universe import UniverseMask

CAP_WEIGHTED = "cap-weighted"
PRICE_WEIGHTED = "price-weighted"


@dataclass(frozen=True)
class SplitEntry:
    """Divide ``slug``'s prices strictly before ``date`` by ``ratio``."""

    slug: str
    date: str
    ratio: float

    def __post_init__(self):
        object.__setattr__(self, "date", normalize_date(self.date))
        if not self.ratio > 0:
            raise ValueError(f"split ratio must be positive; got {self.ratio}")


@dataclass(frozen=True)
class SplitTable:
    entries: tuple[SplitEntry, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        keys = [(e.slug, e.date) for e in self.entries]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate (slug, date) split entries")

    def __len__(self) -> int:
        return len(self.entries)

    def restrict_to(self, slugs) -> "SplitTable":
        """Entries whose slug is present in ``slugs`` (drops the rest)."""
        present = set(slugs)
        return SplitTable(tuple(e for e in self.entries if e.slug in present))


def default_split_table() -> SplitTable:
    """The single shipped entry: Xaurum's 8000-to-1 forward split."""
    return SplitTable((SplitEntry("xaurum", "2016-08-23", 8000.0),))


def read_split_file(path: str | os.PathLike) -> SplitTable:
    """Tab-separated (slug, ISO date, ratio) rows; ``#`` comments allowed."""
    entries = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").split("\n"), 1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        cells = text.split("\t")
        if len(cells) != 3:
            raise ParseError(f"{path}:{lineno}: expected slug<TAB>date<TAB>ratio")
        try:
            entries.append(SplitEntry(cells[0].strip(), cells[1], float(cells[2])))
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
    return SplitTable(tuple(entries))


def apply_splits(panel: Panel, splits: SplitTable) -> Panel:
    """Divide each entry's pre-split open/high/low/close by its ratio.

    "Pre-split" means calendar dates strictly before the effective date,
    i.e. the older panel columns. Volume and market cap are left alone. All
    four price fields are adjusted so derived intraday ratios stay
    consistent across the split boundary.
    """
    if len(splits) == 0:
        return panel
    prices = {f: getattr(panel, f).copy() for f in ("open", "high", "low", "close")}
    for entry in splits.entries:
        row = panel.row_index(entry.slug)
        col = panel.axis.index_of(entry.date)
        for arr in prices.values():
            arr[row, col + 1:] /= entry.ratio
    return panel.replace(**prices)


@dataclass(frozen=True)
class IndexSeries:
    """Normalized index values, oldest date first; the first value is 1."""

    values: np.ndarray
    kind: str
    gamma: float
    dates: tuple[str, ...] = ()

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        if self.kind not in (CAP_WEIGHTED, PRICE_WEIGHTED):
            raise ValueError(f"unknown index kind {self.kind!r}")
        if self.dates and len(self.dates) != len(arr):
            raise ValueError("dates and values differ in length")


def _summed_index(
    panel: Panel, mask: UniverseMask, period: range, field: str, kind: str
) -> IndexSeries:
    if period.step != 1 or len(period) == 0:
        raise ValueError("period must be a non-empty step-1 range")
    if period.start < 0 or period.stop > panel.n_days:
        raise IndexError(f"period {period} outside the {panel.n_days}-day panel")
    idx = mask.indices()
    if len(idx) == 0:
        raise ValueError("empty selection: nothing to index")
    block = getattr(panel, field)[idx, period.start:period.stop]
    if np.isnan(block).any():
        i, j = (int(x[0]) for x in np.nonzero(np.isnan(block)))
        raise ValueError(
            f"missing {field} for asset '{panel.assets[idx[i]].slug}' "
            f"on {panel.axis[period.start + j]}"
        )
    totals = block.sum(axis=0)[::-1]  # oldest first
    earliest = totals[0]
    if earliest == 0.0:
        raise ValueError(f"total {field} is zero on the period's earliest day")
    return IndexSeries(
        values=totals / earliest,
        kind=kind,
        gamma=1.0 / earliest,
        dates=tuple(panel.axis[s] for s in reversed(period)),
    )


def cap_index(panel: Panel, mask: UniverseMask, period: range) -> IndexSeries:
    """Market-cap-weighted index over ``period``, normalized to 1 at the start."""
    return _summed_index(panel, mask, period, "cap", CAP_WEIGHTED)


def price_index(
    panel: Panel, mask: UniverseMask, splits: SplitTable, period: range
) -> IndexSeries:
    """Price-weighted index of split-adjusted closes, normalized to 1 at the start."""
    return _summed_index(apply_splits(panel, splits), mask, period, "close", PRICE_WEIGHTED)


def emit_series(series: IndexSeries, sink) -> None:
    """Write the series as two tab-separated columns: day ordinal (from 1), value."""
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w", encoding="utf-8") as fh:
            emit_series(series, fh)
        return
    sink.write("day\tvalue\n")
    for day, value in enumerate(series.values, start=1):
        sink.write(f"{day}\t{float(value)!r}\n")


def render_svg(series: IndexSeries, width: int = 720, height: int = 360) -> str:
    """Minimal static SVG line chart of the series (no dependencies)."""
    pad = 40.0
    n = len(series.values)
    points = []
    if n:
        lo = float(series.values.min())
        hi = float(series.values.max())
        span = (hi - lo) or 1.0
        for i, v in enumerate(series.values):
            x = pad + (width - 2 * pad) * (i / max(n - 1, 1))
            y = height - pad - (height - 2 * pad) * ((float(v) - lo) / span)
            points.append(f"{x:.2f},{y:.2f}")
    buf = io.StringIO()
    buf.write(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
    )
    buf.write(f'<rect width="{width}" height="{height}" fill="white"/>\n')
    buf.write(
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" '
        f'height="{height - 2 * pad}" fill="none" stroke="black"/>\n'
    )
    if points:
        buf.write(
            '<polyline fill="none" stroke="steelblue" stroke-width="1.5" '
            f'points="{" ".join(points)}"/>\n'
        )
    buf.write(f'<text x="{pad}" y="{pad - 10}" font-size="12">{series.kind} index</text>\n')
    buf.write("</svg>\n")
    return buf.getvalue()


def write_svg(series: IndexSeries, path: str | os.PathLike, **kwargs) -> None:
    Path(path).write_text(render_svg(series, **kwargs), encoding="utf-8")
