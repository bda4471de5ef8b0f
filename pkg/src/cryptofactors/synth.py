"""Deterministic synthetic panels with planted factor structure.

The generator inverts the factor model: it draws per-date primitives
(log caps, log volumes, intraday range ratios), draws a true factor-return
series, assembles each date's loading matrix exactly the way the pipeline
will, and sets that date's return to ``loadings @ f + noise``. Prices are
then integrated backward from a base close so that every date's open/close
pair realizes the planted return with the day's open equal to the previous
close — which makes the open-to-close and close-to-close conventions
coincide on the generated data. High and low sit symmetrically around the
close to hit the planted (high - low) / close ratio.

Because momentum loadings are lagged returns, generation walks from the
oldest date forward; dates too old to have complete loading windows get
free "seed" returns instead of model-generated ones, and the ground truth
records which dates the model actually produced.

Everything is a function of the seed: one ``numpy.random.Generator``
stream, draws in a fixed order, no draw skipped. The algorithm identifier
is recorded in the ground truth so runs can be reproduced elsewhere.
"""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .dates import day_sequence
from .errors import ConstructionError, ParseError
from .factors import FACTOR_NAMES, _MOM_LAGS
from .kvfile import read_kv, write_kv
from .panel import AssetMeta, DateAxis, MISSING_TOKEN, Panel

#: Daily standard deviation of the drawn factor-return series, per factor,
#: when the config does not override it.
DEFAULT_FACTOR_SD = {
    "int": 0.005,
    "cap": 0.0005,
    "mom": 0.01,
    "mom1": 0.01,
    "mom2": 0.01,
    "mom3": 0.01,
    "mom4": 0.01,
    "hlv": 0.001,
    "vol": 0.0005,
    "mnbl": 0.001,
}

_SCALAR_FIELDS = {
    "n_assets": int,
    "n_days": int,
    "seed": int,
    "d_v": int,
    "d_hlv": int,
    "noise_sd": float,
    "seed_return_sd": float,
    "minable_fraction": float,
    "log_cap_mean": float,
    "log_cap_sd": float,
    "log_volume_mean": float,
    "log_volume_sd": float,
    "log_range_mean": float,
    "log_range_sd": float,
    "log_price_mean": float,
    "log_price_sd": float,
    "start_date": str,
}


@dataclass(frozen=True, eq=False)
class SynthConfig:
    """Everything the generator needs; the seed fully determines the output."""

    n_assets: int = 100
    n_days: int = 386
    seed: int = 0
    roster: tuple[str, ...] = ("int", "cap", "mom", "hlv", "vol")
    d_v: int = 20
    d_hlv: int = 20
    factor_mean: Mapping[str, float] = field(default_factory=dict)
    factor_sd: Mapping[str, float] = field(default_factory=dict)
    #: Optional explicit (n_days x K) true factor-return series; overrides
    #: the mean/sd draw. Not representable in the flat config file.
    factor_returns: np.ndarray | None = None
    noise_sd: float = 0.01
    seed_return_sd: float = 0.02
    minable_fraction: float = 0.5
    log_cap_mean: float = 18.0
    log_cap_sd: float = 2.0
    log_volume_mean: float = 13.0
    log_volume_sd: float = 1.5
    log_range_mean: float = -2.8
    log_range_sd: float = 0.5
    log_price_mean: float = 1.0
    log_price_sd: float = 2.0
    start_date: str = "2018-08-18"

    def __post_init__(self):
        roster = tuple(self.roster)
        object.__setattr__(self, "roster", roster)
        unknown = [n for n in roster if n not in FACTOR_NAMES]
        if unknown:
            raise ValueError(f"unknown factor names: {unknown}")
        if len(set(roster)) != len(roster) or not roster:
            raise ValueError("roster must be non-empty and free of duplicates")
        if "int" in roster and roster[0] != "int":
            raise ValueError("the intercept must be the first roster entry")
        object.__setattr__(self, "factor_mean", dict(self.factor_mean))
        object.__setattr__(self, "factor_sd", dict(self.factor_sd))
        for key in (*self.factor_mean, *self.factor_sd):
            if key not in roster:
                raise ValueError(f"factor_mean/factor_sd key {key!r} not in roster")
        if self.n_assets < 1:
            raise ValueError("n_assets must be >= 1")
        if self.n_days < 2:
            raise ValueError("n_days must be >= 2")
        if min(self.d_v, self.d_hlv) < 1:
            raise ValueError("d_v and d_hlv must be >= 1")
        if self.noise_sd < 0 or self.seed_return_sd < 0:
            raise ValueError("noise/seed-return standard deviations must be >= 0")
        if not 0.0 <= self.minable_fraction <= 1.0:
            raise ValueError("minable_fraction must be in [0, 1]")
        if self.factor_returns is not None:
            arr = np.array(self.factor_returns, dtype=np.float64)
            if arr.shape != (self.n_days, len(roster)):
                raise ValueError(
                    f"factor_returns shape {arr.shape} != ({self.n_days}, {len(roster)})"
                )
            arr.flags.writeable = False
            object.__setattr__(self, "factor_returns", arr)

    def mean_for(self, name: str) -> float:
        return float(self.factor_mean.get(name, 0.0))

    def sd_for(self, name: str) -> float:
        return float(self.factor_sd.get(name, DEFAULT_FACTOR_SD[name]))

    def max_reach(self) -> int:
        """Oldest lookahead (in days) any planted loading needs."""
        reach = 0
        for name in self.roster:
            if name == "cap":
                reach = max(reach, 1)
            elif name in _MOM_LAGS:
                reach = max(reach, _MOM_LAGS[name] + 1)
            elif name == "hlv":
                reach = max(reach, self.d_hlv)
            elif name == "vol":
                reach = max(reach, self.d_v)
        return reach


@dataclass(frozen=True)
class GroundTruth:
    """What the generator planted, aligned to the emitted panel.

    ``loadings[s]`` is the full N x K loading matrix the model used on date
    ``s`` (NaN rows where the model was not applied); ``returns`` holds the
    realized open-to-close log returns for every date, seeded or modeled.
    """

    factor_names: tuple[str, ...]
    factor_returns: np.ndarray  # (n_days, K)
    loadings: np.ndarray        # (n_days, N, K)
    returns: np.ndarray         # (N, n_days)
    noise: np.ndarray           # (n_days, N); NaN on seeded dates
    model_applied: np.ndarray   # (n_days,) bool
    dates: tuple[str, ...]
    rng_algorithm: str

    def __post_init__(self):
        for name in ("factor_returns", "loadings", "returns", "noise", "model_applied"):
            arr = np.array(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def _trailing_mean(x: np.ndarray, width: int) -> np.ndarray:
    view = np.lib.stride_tricks.sliding_window_view(x, width, axis=1)
    return view.mean(axis=-1)


def generate_panel(config: SynthConfig) -> tuple[Panel, GroundTruth]:
    """Generate a panel plus the ground truth that produced it."""
    n, d = config.n_assets, config.n_days
    reach = config.max_reach()
    if d <= reach:
        raise ConstructionError(
            f"n_days = {d} leaves no room for loading windows reaching {reach} days back"
        )
    rng = np.random.default_rng(config.seed)

    # Fixed draw order; every draw happens so the stream layout is stable.
    minable = rng.random(n) < config.minable_fraction
    log_cap = rng.normal(config.log_cap_mean, config.log_cap_sd, size=(n, d))
    log_volume = rng.normal(config.log_volume_mean, config.log_volume_sd, size=(n, d))
    log_range = rng.normal(config.log_range_mean, config.log_range_sd, size=(n, d))
    if config.factor_returns is not None:
        f = np.array(config.factor_returns)
    else:
        f = np.column_stack(
            [rng.normal(config.mean_for(a), config.sd_for(a), size=d) for a in config.roster]
        )
    noise = rng.normal(0.0, config.noise_sd, size=(d, n))
    seed_returns = rng.normal(0.0, config.seed_return_sd, size=(d, n))
    base_close = np.exp(rng.normal(config.log_price_mean, config.log_price_sd, size=n))

    cap = np.exp(log_cap)
    volume = np.exp(log_volume)
    range_ratio = np.exp(log_range)
    if (range_ratio >= 2.0).any():
        raise ConstructionError(
            "drawn (high-low)/close ratio >= 2 implies a non-positive low; "
            "tighten log_range_mean/log_range_sd"
        )

    needs_hlv = "hlv" in config.roster
    needs_vol = "vol" in config.roster
    mean_sq_range = _trailing_mean(range_ratio**2, config.d_hlv) if needs_hlv else None
    mean_volume = _trailing_mean(volume, config.d_v) if needs_vol else None

    k = len(config.roster)
    returns = np.empty((n, d))
    loadings = np.full((d, n, k), np.nan)
    kept_noise = np.full((d, n), np.nan)
    applied = np.zeros(d, dtype=bool)
    last_modeled = d - 1 - reach

    for s in range(d - 1, -1, -1):
        if s > last_modeled:
            returns[:, s] = seed_returns[s]
            continue
        block = np.empty((n, k))
        for a, name in enumerate(config.roster):
            if name == "int":
                block[:, a] = 1.0
            elif name == "cap":
                block[:, a] = log_cap[:, s + 1]
            elif name in _MOM_LAGS:
                block[:, a] = returns[:, s + 1 + _MOM_LAGS[name]]
            elif name == "hlv":
                block[:, a] = 0.5 * np.log(mean_sq_range[:, s + 1])
            elif name == "vol":
                block[:, a] = np.log(mean_volume[:, s + 1])
            elif name == "mnbl":
                block[:, a] = minable.astype(np.float64)
        returns[:, s] = block @ f[s] + noise[s]
        loadings[s] = block
        kept_noise[s] = noise[s]
        applied[s] = True

    # Integrate prices backward in column index (forward in calendar time):
    # each day opens at the previous close and closes at open * exp(return).
    close = np.empty((n, d))
    open_ = np.empty((n, d))
    with np.errstate(over="ignore", under="ignore"):
        close[:, d - 1] = base_close
        open_[:, d - 1] = base_close * np.exp(-returns[:, d - 1])
        for s in range(d - 2, -1, -1):
            open_[:, s] = close[:, s + 1]
            close[:, s] = open_[:, s] * np.exp(returns[:, s])
        high = close * (1.0 + range_ratio / 2.0)
        low = close * (1.0 - range_ratio / 2.0)

    for name, arr in (("open", open_), ("high", high), ("low", low), ("close", close)):
        if not np.isfinite(arr).all() or (arr <= 0.0).any():
            raise ConstructionError(
                f"price integration produced non-positive or non-finite {name} values; "
                "returns or scales are too extreme"
            )

    axis = DateAxis(day_sequence(config.start_date, d))
    assets = tuple(
        AssetMeta(name=f"Synth Asset {i:04d}", slug=f"synth-{i:04d}", minable=bool(minable[i]))
        for i in range(n)
    )
    panel = Panel(
        assets=assets, axis=axis,
        open=open_, high=high, low=low, close=close, volume=volume, cap=cap,
    )
    truth = GroundTruth(
        factor_names=config.roster,
        factor_returns=f,
        loadings=loadings,
        returns=returns,
        noise=kept_noise,
        model_applied=applied,
        dates=axis.dates,
        rng_algorithm=f"numpy.random.default_rng(PCG64), seed={config.seed}",
    )
    return panel, truth


def plant_mean_reversion(config: SynthConfig, strength: float) -> SynthConfig:
    """Config whose true momentum factor-return series has mean ``strength``.

    Negative strength plants cross-sectional mean reversion: yesterday's
    winners get pushed down today.
    """
    if "mom" not in config.roster:
        raise ValueError("config roster has no 'mom' factor to plant on")
    return dataclasses.replace(
        config, factor_mean={**config.factor_mean, "mom": float(strength)}
    )


# ---------------------------------------------------------------------------
# Flat-file serialization
# ---------------------------------------------------------------------------

def config_to_kv(config: SynthConfig) -> dict[str, str]:
    if config.factor_returns is not None:
        raise ValueError("explicit factor_returns cannot go in the flat config format")
    out: dict[str, str] = {}
    for key, kind in _SCALAR_FIELDS.items():
        value = getattr(config, key)
        out[key] = str(value) if kind is not float else repr(float(value))
    out["roster"] = ",".join(config.roster)
    for name in config.roster:
        if name in config.factor_mean:
            out[f"factor_mean.{name}"] = repr(float(config.factor_mean[name]))
        if name in config.factor_sd:
            out[f"factor_sd.{name}"] = repr(float(config.factor_sd[name]))
    return out


def config_from_kv(mapping: Mapping[str, str], source: str = "<config>") -> SynthConfig:
    kwargs: dict = {}
    factor_mean: dict[str, float] = {}
    factor_sd: dict[str, float] = {}
    for key, raw in mapping.items():
        if key in _SCALAR_FIELDS:
            try:
                kwargs[key] = _SCALAR_FIELDS[key](raw)
            except ValueError:
                raise ParseError(f"{source}: bad value for {key}: {raw!r}") from None
        elif key == "roster":
            kwargs["roster"] = tuple(tok.strip() for tok in raw.split(",") if tok.strip())
        elif key.startswith("factor_mean."):
            factor_mean[key.removeprefix("factor_mean.")] = float(raw)
        elif key.startswith("factor_sd."):
            factor_sd[key.removeprefix("factor_sd.")] = float(raw)
        else:
            raise ParseError(f"{source}: unknown config key {key!r}")
    if factor_mean:
        kwargs["factor_mean"] = factor_mean
    if factor_sd:
        kwargs["factor_sd"] = factor_sd
    return SynthConfig(**kwargs)


def save_config(config: SynthConfig, path: str | os.PathLike) -> None:
    write_kv(path, config_to_kv(config))


def load_config(path: str | os.PathLike) -> SynthConfig:
    return config_from_kv(read_kv(path), source=str(path))


# ---------------------------------------------------------------------------
# Ground-truth export
# ---------------------------------------------------------------------------

def _cell(value: float) -> str:
    return MISSING_TOKEN if np.isnan(value) else repr(float(value))


def _write_matrix(path: Path, dates: tuple[str, ...], matrix: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(dates) + "\n")
        for row in matrix:
            fh.write("\t".join(_cell(v) for v in row) + "\n")


def write_ground_truth(truth: GroundTruth, directory: str | os.PathLike) -> None:
    """Export the ground truth as tab-separated matrices for external checks.

    ``gt.factors.txt`` lists the true factor returns per date (plus the
    model-applied flag); ``gt.returns.txt``, ``gt.noise.txt`` and one
    ``gt.loadings.<factor>.txt`` per factor are asset-by-date matrices in
    the same most-recent-first column order as the panel files.
    """
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "gt.factors.txt", "w", encoding="utf-8") as fh:
        fh.write("date\tapplied\t" + "\t".join(truth.factor_names) + "\n")
        for s, date in enumerate(truth.dates):
            cells = [date, "1" if truth.model_applied[s] else "0"]
            cells += [_cell(v) for v in truth.factor_returns[s]]
            fh.write("\t".join(cells) + "\n")
    _write_matrix(root / "gt.returns.txt", truth.dates, truth.returns)
    _write_matrix(root / "gt.noise.txt", truth.dates, truth.noise.T)
    for a, name in enumerate(truth.factor_names):
        _write_matrix(root / f"gt.loadings.{name}.txt", truth.dates, truth.loadings[:, :, a].T)
    write_kv(root / "gt.meta.txt", {
        "rng": truth.rng_algorithm,
        "factors": ",".join(truth.factor_names),
        "n_days": str(len(truth.dates)),
        "n_assets": str(truth.returns.shape[0]),
    })
