import numpy as np
import pytest

from cryptofactors import AssetMeta, DateAxis, Panel


def make_panel(open_, high, low, close, volume, cap, slugs=None, minable=None, start="2018-08-18"):
    """Small hand-built panel; matrices given as nested lists, NaN = missing."""
    arr = np.array(close, dtype=np.float64)
    n, d = arr.shape
    from cryptofactors.dates import day_sequence

    slugs = slugs or [f"asset-{i}" for i in range(n)]
    minable = minable if minable is not None else [i % 2 == 0 for i in range(n)]
    assets = tuple(
        AssetMeta(name=s.replace("-", " ").title(), slug=s, minable=bool(m))
        for s, m in zip(slugs, minable)
    )
    return Panel(
        assets=assets,
        axis=DateAxis(day_sequence(start, d)),
        open=np.array(open_, dtype=np.float64),
        high=np.array(high, dtype=np.float64),
        low=np.array(low, dtype=np.float64),
        close=np.array(close, dtype=np.float64),
        volume=np.array(volume, dtype=np.float64),
        cap=np.array(cap, dtype=np.float64),
    )


def constant_panel(n=3, d=8, close=100.0, spread=0.1, volume=1e6, cap=1e9, **kw):
    """Flat panel: every asset identical constants, high/low a fixed band."""
    c = np.full((n, d), close)
    return make_panel(
        open_=c, high=c * (1 + spread), low=c * (1 - spread), close=c,
        volume=np.full((n, d), volume), cap=np.full((n, d), cap), **kw,
    )


def random_panel(rng, n, d, missing_rate=0.0, allow_zero_volume=False):
    """Randomized positive panel, optionally peppered with missing cells."""
    def block(scale):
        return np.exp(rng.normal(np.log(scale), 1.0, size=(n, d)))

    close = block(50.0)
    open_ = close * np.exp(rng.normal(0.0, 0.05, size=(n, d)))
    band = np.abs(rng.normal(0.05, 0.02, size=(n, d))) + 1e-3
    high = close * (1 + band)
    low = close * (1 - np.minimum(band, 0.9))
    volume = block(1e6)
    if allow_zero_volume:
        volume[rng.random((n, d)) < 0.05] = 0.0
    cap = block(1e9)
    fields = dict(open_=open_, high=high, low=low, close=close, volume=volume, cap=cap)
    if missing_rate > 0:
        for arr in fields.values():
            arr[rng.random((n, d)) < missing_rate] = np.nan
    return make_panel(**fields)


@pytest.fixture
def rng():
    return np.random.default_rng(20180818)


@pytest.fixture
def flat_panel():
    return constant_panel()
