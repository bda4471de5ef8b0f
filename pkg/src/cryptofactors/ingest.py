"""Aggregate per-asset history tables into a panel on a reference date axis.

Each asset's history is a tab-delimited table (columns Date, Open, High,
Low, Close, Volume, MktCap; most recent row first). One designated
reference asset — by convention the first-listed, largest-cap one with the
longest history — supplies the panel's date axis; every other asset's rows
are matched to it by normalized date string. Dates the asset is missing
become missing cells, rows whose date is off the axis are dropped, and
structurally unusable histories land on the bad-asset list instead of in
the panel.

Fetching is behind a tiny source interface (anything with
``get(slug) -> str``), so directories of files, archives and test fixtures
all plug in the same way; there is deliberately no network code here.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import numpy as np

from .dates import normalize_date
from .errors import ParseError
from .panel import FIELDS, AssetMeta, DateAxis, Panel

HISTORY_HEADER = ("Date", "Open", "High", "Low", "Close", "Volume", "MktCap")
#: History-table columns in panel-field order (open..cap).
_VALUE_COLUMNS = ("open", "high", "low", "close", "volume", "cap")
_MISSING_TOKENS = {"", "?", "-", "NA"}

BAD_FILE = "crypto.bad.txt"
META_FILE = "crypto.meta.txt"
HIST_SUBDIR = "CryptoHistData"


@dataclass(frozen=True)
class AssetHistory:
    """One asset's raw history: dates (most recent first) and a rows x 6 matrix."""

    slug: str
    dates: tuple[str, ...]
    values: np.ndarray  # columns: open, high, low, close, volume, cap

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        if arr.size == 0:
            arr = arr.reshape((0, 6))
        if arr.shape != (len(self.dates), 6):
            raise ValueError(f"history matrix shape {arr.shape} != ({len(self.dates)}, 6)")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "dates", tuple(self.dates))
        for newer, older in zip(self.dates, self.dates[1:]):
            if newer <= older:
                raise ValueError(
                    f"history dates for {self.slug!r} not strictly decreasing: "
                    f"{newer!r} then {older!r}"
                )

    @property
    def n_rows(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class BadAssetList:
    """Slugs excluded from aggregation, in first-seen order."""

    slugs: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "slugs", tuple(self.slugs))

    def __contains__(self, slug: str) -> bool:
        return slug in self.slugs

    def __len__(self) -> int:
        return len(self.slugs)


class HistorySource(Protocol):
    """Anything that can produce the raw history text for a slug."""

    def get(self, slug: str) -> str: ...


class DirectorySource:
    """Reads ``<root>/<slug>.txt``, falling back to ``<root>/CryptoHistData/<slug>.txt``."""

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)

    def get(self, slug: str) -> str:
        for candidate in (self.root / f"{slug}.txt", self.root / HIST_SUBDIR / f"{slug}.txt"):
            if candidate.exists():
                return candidate.read_text(encoding="utf-8")
        raise FileNotFoundError(f"no history file for slug {slug!r} under {self.root}")

    def list_slugs(self) -> tuple[str, ...]:
        skip = {BAD_FILE, META_FILE}
        found = []
        for folder in (self.root, self.root / HIST_SUBDIR):
            if not folder.is_dir():
                continue
            for path in sorted(folder.glob("*.txt")):
                if path.name in skip or path.name.startswith("cr."):
                    continue
                if path.stem not in found:
                    found.append(path.stem)
        return tuple(found)


def _parse_number(token: str, where: str) -> float:
    text = token.strip().strip('"')
    if text in _MISSING_TOKENS:
        return np.nan
    text = text.replace(",", "")  # thousands separators in scraped tables
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"{where}: cannot parse numeric cell {token!r}") from None


def parse_asset_history(source: str | os.PathLike, slug: str) -> AssetHistory:
    """Parse one asset's tab-delimited history table.

    ``source`` may be a path or the file's text (anything containing a
    newline is treated as text). ``"?"`` and empty cells become missing,
    thousands separators are stripped, and dates are normalized to ISO and
    must be strictly decreasing.
    """
    if isinstance(source, os.PathLike):
        where, text = str(source), Path(source).read_text(encoding="utf-8")
    elif "\n" in source:
        where, text = f"<history:{slug}>", source
    else:
        where, text = source, Path(source).read_text(encoding="utf-8")
    lines = text.split("\n")
    while lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError(f"{where}: empty history")
    header = tuple(cell.strip() for cell in lines[0].split("\t"))
    if tuple(h.lower() for h in header) != tuple(h.lower() for h in HISTORY_HEADER):
        raise ParseError(
            f"{where}:1: malformed header {header!r}; expected {HISTORY_HEADER!r}"
        )
    dates = []
    rows = []
    for r, line in enumerate(lines[1:], start=2):
        cells = line.split("\t")
        if len(cells) != 7:
            raise ParseError(f"{where}:{r}: expected 7 cells, found {len(cells)}")
        try:
            dates.append(normalize_date(cells[0]))
        except ValueError as exc:
            raise ParseError(f"{where}:{r}: {exc}") from None
        rows.append([_parse_number(cells[c], f"{where}:{r}:{c + 1}") for c in range(1, 7)])
    values = np.array(rows, dtype=np.float64) if rows else np.empty((0, 6))
    try:
        return AssetHistory(slug=slug, dates=tuple(dates), values=values)
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from None


def fetch_histories(
    source: HistorySource, slugs: Sequence[str]
) -> tuple[list[AssetHistory], BadAssetList]:
    """Fetch and parse each slug; per-slug failures go to the bad list.

    Nothing here is fatal: a source error or a malformed table just records
    the slug and moves on.
    """
    histories: list[AssetHistory] = []
    bad: list[str] = []
    for slug in slugs:
        try:
            histories.append(parse_asset_history(source.get(slug), slug))
        except (OSError, ValueError):
            bad.append(slug)
    return histories, BadAssetList(tuple(bad))


def aggregate_histories(
    histories: Sequence[AssetHistory],
    reference_slug: str,
    meta: Mapping[str, tuple[str, bool]] | None = None,
) -> tuple[Panel, BadAssetList]:
    """Merge per-asset histories onto the reference asset's date axis.

    The panel gets exactly the reference's dates as its axis; other assets'
    rows are placed by date, dates they lack become missing cells, and rows
    dated off the axis are dropped (an asset can reach further back than
    the reference — those surplus rows go). Zero-row histories land on the
    bad list. ``meta`` optionally supplies (display name, minable) per slug;
    absent entries fall back to the slug itself and not-minable.
    """
    by_slug = {h.slug: h for h in histories}
    if len(by_slug) != len(histories):
        raise ValueError("duplicate slugs among the input histories")
    reference = by_slug.get(reference_slug)
    if reference is None:
        raise ValueError(f"reference asset {reference_slug!r} is not among the histories")
    if reference.n_rows == 0:
        raise ValueError(f"reference asset {reference_slug!r} has an empty history")

    axis = DateAxis(reference.dates)
    column_of = {date: j for j, date in enumerate(axis.dates)}
    good = [h for h in histories if h.n_rows > 0]
    bad = BadAssetList(tuple(h.slug for h in histories if h.n_rows == 0))

    n, d = len(good), len(axis)
    matrices = {name: np.full((n, d), np.nan) for name in FIELDS}
    assets = []
    meta = meta or {}
    for i, history in enumerate(good):
        name, minable = meta.get(history.slug, (history.slug, False))
        assets.append(AssetMeta(name=name, slug=history.slug, minable=minable))
        for r, date in enumerate(history.dates):
            j = column_of.get(date)
            if j is None:
                continue  # date off the reference axis
            for c, field in enumerate(_VALUE_COLUMNS):
                matrices[field][i, j] = history.values[r, c]
    panel = Panel(assets=tuple(assets), axis=axis, **matrices)
    return panel, bad


def histories_from_panel(panel: Panel) -> list[AssetHistory]:
    """Per-asset histories carrying every axis date (missing cells stay NaN).

    Aggregating these back against the same reference reproduces the panel.
    """
    out = []
    for i, meta in enumerate(panel.assets):
        values = np.column_stack([getattr(panel, f)[i] for f in _VALUE_COLUMNS])
        out.append(AssetHistory(slug=meta.slug, dates=panel.axis.dates, values=values))
    return out


def write_bad_list(bad: BadAssetList, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(slug + "\n" for slug in bad.slugs)


def read_bad_list(path: str | os.PathLike) -> BadAssetList:
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    return BadAssetList(tuple(s.strip() for s in lines if s.strip()))


def read_meta_file(path: str | os.PathLike) -> dict[str, tuple[str, bool]]:
    """Asset metadata sidecar: Slug<TAB>Name<TAB>Minable rows, header included.

    Returns an insertion-ordered mapping so the file's listing order (by
    convention, descending market cap) can drive aggregation order.
    """
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    while lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError(f"{path}: empty metadata file")
    header = tuple(cell.strip().lower() for cell in lines[0].split("\t"))
    if header != ("slug", "name", "minable"):
        raise ParseError(f"{path}:1: expected header Slug<TAB>Name<TAB>Minable")
    out: dict[str, tuple[str, bool]] = {}
    for r, line in enumerate(lines[1:], start=2):
        cells = line.split("\t")
        if len(cells) != 3:
            raise ParseError(f"{path}:{r}: expected 3 cells, found {len(cells)}")
        slug = cells[0].strip()
        flag = cells[2].strip().upper()
        if flag not in ("1", "0", "Y", "N"):
            raise ParseError(f"{path}:{r}: minable flag must be 1/0/Y/N, got {cells[2]!r}")
        if slug in out:
            raise ParseError(f"{path}:{r}: duplicate slug {slug!r}")
        out[slug] = (cells[1].strip(), flag in ("1", "Y"))
    return out
