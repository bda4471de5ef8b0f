"""Flat ``key = value`` text files used for run and generator configs.

Blank lines and ``#`` comments are ignored; keys are single tokens, values
are everything after the first ``=``. Order is preserved on write so the
files are byte-deterministic.
"""
from __future__ import annotations

import os
from .errors import ParseError


def read_kv(path: str | os.PathLike) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if not key:
                raise ParseError(f"{path}:{lineno}: empty key")
            out[key] = value.strip()
    return out


def write_kv(path: str | os.PathLike, mapping: dict[str, str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in mapping.items():
            fh.write(f"{key} = {value}\n")
