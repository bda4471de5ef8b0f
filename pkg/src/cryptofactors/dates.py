"""Calendar-date parsing and generation.

Dates travel through the package as ISO-8601 strings; for fixed-width
``YYYY-MM-DD`` strings lexicographic order equals calendar order, which the
most-recent-first panel axis relies on throughout.
"""
from __future__ import annotations

import datetime as dt

# Formats seen in market-data downloads, tried in order.
_FORMATS = ("%Y-%m-%d", "%b %d, %Y", "%B %d, %Y", "%Y%m%d", "%m/%d/%Y")


def normalize_date(text: str) -> str:
    """Normalize a date string to ISO-8601, e.g. ``"Aug 18, 2018"`` -> ``"2018-08-18"``."""
    s = text.strip().strip('"')
    for fmt in _FORMATS:
        try:
            return dt.datetime.strptime(s, fmt).date().isoformat()
        except ValueError:
            continue
    raise ValueError(f"unrecognized date format: {text!r}")


def day_sequence(most_recent: str, n_days: int) -> tuple[str, ...]:
    """``n_days`` consecutive calendar dates ending at ``most_recent``, most recent first."""
    end = dt.date.fromisoformat(normalize_date(most_recent))
    return tuple((end - dt.timedelta(days=k)).isoformat() for k in range(n_days))
