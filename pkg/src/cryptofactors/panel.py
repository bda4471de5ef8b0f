"""Asset-by-date market-data panels and the legacy tab-delimited disk format.

A :class:`Panel` holds six aligned ``N x D`` float64 matrices (open, high,
low, close, dollar volume, market cap) over a shared date axis. Column 0 is
the most recent date and the column index grows going back in time; every
windowing computation in the package is written against that one ordering.
Missing observations are NaN in memory and the literal ``"NA"`` on disk.

Panels are immutable after construction (the matrices are frozen), so they
are safe to share across threads; derive modified copies with
:meth:`Panel.replace` / :meth:`Panel.take_rows` / :meth:`Panel.first_days`.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dates import normalize_date
from .errors import ParseError

#: Return-convention identifiers for daily log returns.
OPEN_TO_CLOSE = "open-to-close"
CLOSE_TO_CLOSE = "close-to-close"

#: Panel matrix fields, in canonical order.
FIELDS = ("open", "high", "low", "close", "volume", "cap")

#: On-disk file name per matrix field (legacy aggregated format).
FIELD_FILES = {
    "close": "cr.prc.txt",
    "open": "cr.open.txt",
    "high": "cr.high.txt",
    "low": "cr.low.txt",
    "volume": "cr.vol.txt",
    "cap": "cr.cap.txt",
}
NAME_FILE = "cr.name.txt"
MNBL_FILE = "cr.mnbl.txt"
#: Sidecar carrying unique row identifiers. Legacy directories produced by
#: other tooling lack it, in which case slugs are derived from the names.
SLUG_FILE = "cr.slug.txt"

MISSING_TOKEN = "NA"


@dataclass(frozen=True)
class DateAxis:
    """Ordered date labels, most recent first (index grows into the past)."""

    dates: tuple[str, ...]

    def __post_init__(self):
        norm = tuple(normalize_date(d) for d in self.dates)
        object.__setattr__(self, "dates", norm)
        for newer, older in zip(norm, norm[1:]):
            if newer <= older:
                raise ValueError(
                    f"dates must be strictly decreasing, most recent first: "
                    f"{newer!r} is followed by {older!r}"
                )

    def __len__(self) -> int:
        return len(self.dates)

    def __getitem__(self, s: int) -> str:
        return self.dates[s]

    def index_of(self, date: str) -> int:
        """Column index of ``date``; raises ValueError if it is off the axis."""
        iso = normalize_date(date)
        try:
            return self.dates.index(iso)
        except ValueError:
            raise ValueError(f"date {iso!r} is not on the panel axis") from None

    def first(self, n: int) -> "DateAxis":
        return DateAxis(self.dates[:n])


@dataclass(frozen=True)
class AssetMeta:
    """Display name, unique slug and minable flag for one asset.

    Display names and symbols are not unique across cryptoassets; the slug
    is, and it is the identifier every other module keys on.
    """

    name: str
    slug: str
    minable: bool = False

    def __post_init__(self):
        if not self.slug:
            raise ValueError("asset slug must be non-empty")


@dataclass(frozen=True, eq=False)
class Panel:
    """Immutable N-asset by D-date panel of the six market-data fields."""

    assets: tuple[AssetMeta, ...]
    axis: DateAxis
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray
    volume: np.ndarray
    cap: np.ndarray

    def __post_init__(self):
        assets = tuple(self.assets)
        object.__setattr__(self, "assets", assets)
        slugs = [a.slug for a in assets]
        if len(set(slugs)) != len(slugs):
            dupes = sorted({s for s in slugs if slugs.count(s) > 1})
            raise ValueError(f"duplicate asset slugs: {dupes}")
        shape = (len(assets), len(self.axis))
        for field in FIELDS:
            arr = np.array(getattr(self, field), dtype=np.float64)
            if arr.size == 0:
                arr = arr.reshape(shape) if shape[0] * shape[1] == 0 else arr
            if arr.shape != shape:
                raise ValueError(
                    f"{field} matrix has shape {arr.shape}, expected {shape}"
                )
            self._check_cells(field, arr)
            arr.flags.writeable = False
            object.__setattr__(self, field, arr)

    def _check_cells(self, field: str, arr: np.ndarray) -> None:
        # Non-missing cells must be finite and non-negative.
        with np.errstate(invalid="ignore"):
            bad = ~np.isnan(arr) & (~np.isfinite(arr) | (arr < 0.0))
        if bad.any():
            i, s = (int(x[0]) for x in np.nonzero(bad))
            raise ValueError(
                f"invalid {field} value {arr[i, s]!r} for asset "
                f"'{self.assets[i].slug}' on {self.axis[s]}"
            )

    # ---- basic geometry -------------------------------------------------

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    @property
    def n_days(self) -> int:
        return len(self.axis)

    @property
    def slugs(self) -> tuple[str, ...]:
        return tuple(a.slug for a in self.assets)

    def row_index(self, slug: str) -> int:
        for i, a in enumerate(self.assets):
            if a.slug == slug:
                return i
        raise ValueError(f"unknown asset slug {slug!r}")

    # ---- derived panels --------------------------------------------------

    def field(self, name: str) -> np.ndarray:
        if name not in FIELDS:
            raise ValueError(f"unknown panel field {name!r}")
        return getattr(self, name)

    def replace(self, **arrays) -> "Panel":
        """New panel with some matrices (or assets/axis) swapped out."""
        kwargs = {
            "assets": self.assets,
            "axis": self.axis,
            **{f: getattr(self, f) for f in FIELDS},
        }
        for key, value in arrays.items():
            if key not in kwargs:
                raise ValueError(f"unknown panel component {key!r}")
            kwargs[key] = value
        return Panel(**kwargs)

    def take_rows(self, indices) -> "Panel":
        idx = np.asarray(indices, dtype=int)
        assets = tuple(self.assets[int(i)] for i in idx)
        return Panel(
            assets=assets,
            axis=self.axis,
            **{f: getattr(self, f)[idx, :] for f in FIELDS},
        )

    def first_days(self, n: int) -> "Panel":
        """Panel restricted to the ``n`` most recent dates."""
        if n > self.n_days:
            raise ValueError(f"panel spans {self.n_days} days; {n} requested")
        return Panel(
            assets=self.assets,
            axis=self.axis.first(n),
            **{f: getattr(self, f)[:, :n] for f in FIELDS},
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Panel):
            return NotImplemented
        if self.assets != other.assets or self.axis != other.axis:
            return False
        return all(
            np.array_equal(getattr(self, f), getattr(other, f), equal_nan=True)
            for f in FIELDS
        )


@dataclass(frozen=True)
class ReturnMatrix:
    """Daily log returns for a contiguous block of panel days.

    Column ``j`` corresponds to panel day ``days[j]``; rows follow the
    source panel's asset order.
    """

    values: np.ndarray
    convention: str
    days: range

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        arr = np.array(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        if self.convention not in (OPEN_TO_CLOSE, CLOSE_TO_CLOSE):
            raise ValueError(f"unknown return convention {self.convention!r}")

    def at_day(self, s: int) -> np.ndarray:
        """Return column for panel day ``s``."""
        return self.values[:, self.days.index(s)]


def _check_day_range(panel: Panel, day_range: range, lookahead: int) -> None:
    if day_range.step != 1:
        raise ValueError("day_range must have step 1")
    if len(day_range) == 0:
        raise IndexError("day_range is empty")
    if day_range.start < 0 or day_range.stop + lookahead > panel.n_days:
        raise IndexError(
            f"day_range {day_range} (+{lookahead} lookahead) is outside the "
            f"{panel.n_days}-day panel"
        )


def _check_positive_pairs(
    panel: Panel, a: np.ndarray, b: np.ndarray, day_range: range,
    a_name: str, b_name: str,
) -> None:
    """Reject non-positive prices whose counterpart is present.

    A non-positive cell paired with a missing one just propagates NaN; paired
    with a real price it would poison the log return, so it is an error that
    names the asset and date.
    """
    with np.errstate(invalid="ignore"):
        bad = ~np.isnan(a) & ~np.isnan(b) & ((a <= 0.0) | (b <= 0.0))
    if bad.any():
        i, j = (int(x[0]) for x in np.nonzero(bad))
        culprit = a_name if a[i, j] <= 0 else b_name
        raise ValueError(
            f"non-positive {culprit} price for asset '{panel.assets[i].slug}' "
            f"on {panel.axis[day_range.start + j]}"
        )


def open_close_returns(panel: Panel, day_range: range) -> ReturnMatrix:
    """Same-day log close/open returns over ``day_range``.

    Missing cells propagate to NaN; a non-positive open or close whose
    counterpart is present raises, naming the asset and date.
    """
    _check_day_range(panel, day_range, lookahead=0)
    o = panel.open[:, day_range.start:day_range.stop]
    c = panel.close[:, day_range.start:day_range.stop]
    _check_positive_pairs(panel, o, c, day_range, "open", "close")
    with np.errstate(invalid="ignore"):
        values = np.log(c / o)
    return ReturnMatrix(values, OPEN_TO_CLOSE, day_range)


def close_close_returns(panel: Panel, day_range: range) -> ReturnMatrix:
    """Log returns of each day's close over the previous (older) day's close.

    Day ``s`` reads closes at ``s`` and ``s+1``, so the range must stop one
    short of the oldest panel column.
    """
    _check_day_range(panel, day_range, lookahead=1)
    c0 = panel.close[:, day_range.start:day_range.stop]
    c1 = panel.close[:, day_range.start + 1:day_range.stop + 1]
    _check_positive_pairs(panel, c0, c1, day_range, "close", "previous close")
    with np.errstate(invalid="ignore"):
        values = np.log(c0 / c1)
    return ReturnMatrix(values, CLOSE_TO_CLOSE, day_range)


# ---------------------------------------------------------------------------
# Legacy tab-delimited directory format
# ---------------------------------------------------------------------------

def _format_cell(value: float) -> str:
    if np.isnan(value):
        return MISSING_TOKEN
    # repr() of a Python float is the shortest string that round-trips.
    return repr(float(value))


def _read_matrix_file(path: Path) -> tuple[tuple[str, ...], np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    while lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError(f"{path}: empty file")
    try:
        dates = tuple(normalize_date(tok) for tok in lines[0].split("\t"))
    except ValueError as exc:
        raise ParseError(f"{path}:1: bad header date: {exc}") from None
    rows = []
    for r, line in enumerate(lines[1:], start=2):
        cells = line.split("\t")
        if len(cells) != len(dates):
            raise ParseError(
                f"{path}:{r}: expected {len(dates)} cells, found {len(cells)}"
            )
        row = np.empty(len(cells), dtype=np.float64)
        for c, cell in enumerate(cells):
            tok = cell.strip()
            if tok == MISSING_TOKEN:
                row[c] = np.nan
                continue
            try:
                row[c] = float(tok)
            except ValueError:
                raise ParseError(
                    f"{path}:{r}:{c + 1}: cannot parse numeric cell {cell!r}"
                ) from None
        rows.append(row)
    matrix = np.vstack(rows) if rows else np.empty((0, len(dates)))
    return dates, matrix


def _read_lines(path: Path) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def _slugify(name: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    return slug or "asset"


def _derive_slugs(names: list[str]) -> list[str]:
    seen: dict[str, int] = {}
    slugs = []
    for name in names:
        base = _slugify(name)
        count = seen.get(base, 0) + 1
        seen[base] = count
        slugs.append(base if count == 1 else f"{base}-{count}")
    return slugs


def read_legacy_panel(directory: str | os.PathLike) -> Panel:
    """Read an aggregated-panel directory in the legacy tab-delimited layout.

    Expects the six matrix files (``cr.prc.txt`` etc.: one header row of
    dates, most recent first, then one row of cells per asset) plus
    ``cr.name.txt`` and ``cr.mnbl.txt`` with one value per matrix row.
    ``"NA"`` cells become missing. A ``cr.slug.txt`` sidecar supplies row
    identifiers when present; otherwise slugs are derived from the names.
    """
    root = Path(directory)
    dates: tuple[str, ...] | None = None
    matrices: dict[str, np.ndarray] = {}
    n_rows: int | None = None
    for field in FIELDS:
        path = root / FIELD_FILES[field]
        file_dates, matrix = _read_matrix_file(path)
        if dates is None:
            dates, n_rows = file_dates, matrix.shape[0]
        elif file_dates != dates or matrix.shape[0] != n_rows:
            raise ParseError(
                f"{path}: dimensions {matrix.shape[0]}x{len(file_dates)} do not "
                f"match {FIELD_FILES['close']} ({n_rows}x{len(dates)})"
            )
        matrices[field] = matrix

    names = _read_lines(root / NAME_FILE)
    if len(names) != n_rows:
        raise ParseError(
            f"{root / NAME_FILE}: {len(names)} rows, matrices have {n_rows}"
        )
    mnbl_lines = _read_lines(root / MNBL_FILE)
    if len(mnbl_lines) != n_rows:
        raise ParseError(
            f"{root / MNBL_FILE}: {len(mnbl_lines)} rows, matrices have {n_rows}"
        )
    minable = []
    for r, tok in enumerate(mnbl_lines, start=1):
        try:
            minable.append(int(tok.strip()) == 1)
        except ValueError:
            raise ParseError(
                f"{root / MNBL_FILE}:{r}: cannot parse flag {tok!r}"
            ) from None

    slug_path = root / SLUG_FILE
    if slug_path.exists():
        slugs = _read_lines(slug_path)
        if len(slugs) != n_rows:
            raise ParseError(
                f"{slug_path}: {len(slugs)} rows, matrices have {n_rows}"
            )
    else:
        slugs = _derive_slugs(names)

    assets = tuple(
        AssetMeta(name=n, slug=s, minable=m)
        for n, s, m in zip(names, slugs, minable)
    )
    return Panel(assets=assets, axis=DateAxis(dates), **matrices)


def write_legacy_panel(panel: Panel, directory: str | os.PathLike) -> None:
    """Write ``panel`` in the legacy layout; inverse of :func:`read_legacy_panel`.

    Missing cells serialize as ``"NA"``; numeric cells use the shortest
    round-tripping decimal form, so read-after-write reproduces the panel
    cell for cell.
    """
    if panel.n_days == 0:
        raise ValueError("cannot serialize a panel with no dates")
    for a in panel.assets:
        for label, text in (("name", a.name), ("slug", a.slug)):
            if "\t" in text or "\n" in text:
                raise ValueError(
                    f"asset {label} {text!r} contains tab/newline; not serializable"
                )
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    header = "\t".join(panel.axis.dates)
    for field in FIELDS:
        matrix = getattr(panel, field)
        with open(root / FIELD_FILES[field], "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for row in matrix:
                fh.write("\t".join(_format_cell(v) for v in row) + "\n")
    with open(root / NAME_FILE, "w", encoding="utf-8") as fh:
        fh.writelines(a.name + "\n" for a in panel.assets)
    with open(root / MNBL_FILE, "w", encoding="utf-8") as fh:
        fh.writelines(("1" if a.minable else "0") + "\n" for a in panel.assets)
    with open(root / SLUG_FILE, "w", encoding="utf-8") as fh:
        fh.writelines(a.slug + "\n" for a in panel.assets)
