import io

import numpy as np
import pytest

from cryptofactors import (
    CAP_WEIGHTED,
    PRICE_WEIGHTED,
    IndexSeries,
    ParseError,
    SplitEntry,
    SplitTable,
    WindowSpec,
    apply_splits,
    cap_index,
    default_split_table,
    emit_series,
    price_index,
    read_split_file,
    render_svg,
    select_universe,
)

from conftest import constant_panel, make_panel

WINDOW = WindowSpec(days=3, back=0, lookback=2, d_r=4, d_v=2, d_hlv=2)  # padded = 8


def full_mask(panel):
    return select_universe(panel, WINDOW)


class TestSplitTable:
    def test_default_entry(self):
        table = default_split_table()
        assert len(table) == 1
        entry = table.entries[0]
        assert (entry.slug, entry.date, entry.ratio) == ("xaurum", "2016-08-23", 8000.0)

    def test_ratio_positive(self):
        with pytest.raises(ValueError, match="positive"):
            SplitEntry("x", "2016-08-23", 0.0)

    def test_duplicate_entries_rejected(self):
        e = SplitEntry("x", "2016-08-23", 2.0)
        with pytest.raises(ValueError, match="duplicate"):
            SplitTable((e, SplitEntry("x", "2016-08-23", 3.0)))

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "splits.txt"
        path.write_text("# declared splits\nxaurum\t2016-08-23\t8000\n")
        table = read_split_file(path)
        assert table.entries[0].ratio == 8000.0
        path.write_text("xaurum\t2016-08-23\n")
        with pytest.raises(ParseError):
            read_split_file(path)


class TestApplySplits:
    def test_pre_split_prices_divided(self):
        p = constant_panel(n=2, d=8, close=8000.0)
        splits = SplitTable((SplitEntry("asset-0", p.axis[3], 8000.0),))
        adjusted = apply_splits(p, splits)
        # strictly before the effective date = older columns only
        assert np.all(adjusted.close[0, 4:] == 1.0)
        assert np.all(adjusted.close[0, :4] == 8000.0)
        assert np.all(adjusted.close[1] == 8000.0)

    def test_all_four_price_fields_adjusted(self):
        p = constant_panel(n=1, d=6, close=100.0, spread=0.1)
        splits = SplitTable((SplitEntry("asset-0", p.axis[2], 4.0),))
        adjusted = apply_splits(p, splits)
        for f in ("open", "high", "low", "close"):
            assert np.all(getattr(adjusted, f)[0, 3:] == getattr(p, f)[0, 3:] / 4.0)

    def test_cap_and_volume_untouched(self):
        p = constant_panel(n=1, d=6)
        splits = SplitTable((SplitEntry("asset-0", p.axis[2], 4.0),))
        adjusted = apply_splits(p, splits)
        assert np.array_equal(adjusted.cap, p.cap)
        assert np.array_equal(adjusted.volume, p.volume)

    def test_empty_table_is_identity(self, flat_panel):
        assert apply_splits(flat_panel, SplitTable()) is flat_panel

    def test_unknown_slug(self, flat_panel):
        with pytest.raises(ValueError, match="unknown asset"):
            apply_splits(flat_panel, SplitTable((SplitEntry("nope", flat_panel.axis[0], 2.0),)))

    def test_off_axis_date(self, flat_panel):
        with pytest.raises(ValueError, match="not on the panel axis"):
            apply_splits(flat_panel, SplitTable((SplitEntry("asset-0", "1999-01-01", 2.0),)))

    def test_equivalent_to_manual_division(self):
        p = constant_panel(n=2, d=8, close=500.0)
        splits = SplitTable((SplitEntry("asset-1", p.axis[4], 5.0),))
        adjusted = apply_splits(p, splits)
        manual = {}
        for f in ("open", "high", "low", "close"):
            arr = np.array(getattr(p, f))
            arr[1, 5:] /= 5.0
            manual[f] = arr
        expected = p.replace(**manual)
        assert adjusted == expected


class TestCapIndex:
    def test_flat_caps_give_flat_ones(self, flat_panel):
        series = cap_index(flat_panel, full_mask(flat_panel), range(0, 4))
        assert np.array_equal(series.values, np.ones(4))
        assert series.kind == CAP_WEIGHTED

    def test_first_value_exactly_one(self, rng):
        from conftest import random_panel

        p = random_panel(rng, n=5, d=12)
        series = cap_index(p, full_mask(p), range(0, 6))
        assert series.values[0] == 1.0

    def test_doubling_total(self):
        p = constant_panel(n=2, d=8)
        cap = np.array(p.cap)
        cap[:, 0] = 2e9  # most recent day doubles each asset's cap
        p = p.replace(cap=cap)
        series = cap_index(p, full_mask(p), range(0, 4))
        assert series.values[-1] == pytest.approx(2.0, rel=1e-12)

    def test_single_asset_ratio(self):
        p = constant_panel(n=1, d=8)
        cap = np.array(p.cap)
        cap[0] = np.linspace(5e9, 1e9, 8)  # grows toward the present
        p = p.replace(cap=cap)
        series = cap_index(p, full_mask(p), range(0, 4))
        expected = cap[0, :4][::-1] / cap[0, 3]
        assert series.values == pytest.approx(expected, rel=1e-12)

    def test_common_scale_invariance(self, rng):
        from conftest import random_panel

        p = random_panel(rng, n=4, d=12)
        series = cap_index(p, full_mask(p), range(0, 5))
        p2 = p.replace(cap=np.array(p.cap) * 37.0)
        series2 = cap_index(p2, full_mask(p2), range(0, 5))
        assert series2.values == pytest.approx(series.values, rel=1e-12)

    def test_oldest_first_order(self, flat_panel):
        series = cap_index(flat_panel, full_mask(flat_panel), range(0, 4))
        assert series.dates == tuple(reversed(flat_panel.axis.dates[:4]))

    def test_zero_total_cap(self):
        p = constant_panel(n=1, d=8)
        cap = np.array(p.cap)
        cap[0, 3] = 0.0  # earliest day of the period
        p = p.replace(cap=cap)
        with pytest.raises(ValueError, match="zero"):
            cap_index(p, full_mask(p), range(0, 4))


class TestPriceIndex:
    def test_split_adjusted_flat_price(self):
        # A flat true price that the raw data shows 8000x higher pre-split.
        p = constant_panel(n=1, d=8, close=1.0)
        close = np.array(p.close)
        close[0, 4:] = 8000.0
        p = p.replace(close=close)
        splits = SplitTable((SplitEntry("asset-0", p.axis[3], 8000.0),))
        series = price_index(p, full_mask(p), splits, range(0, 8))
        assert series.values == pytest.approx(np.ones(8), rel=1e-12)

    def test_unadjusted_price_collapses(self):
        p = constant_panel(n=1, d=8, close=1.0)
        close = np.array(p.close)
        close[0, 4:] = 8000.0
        p = p.replace(close=close)
        series = price_index(p, full_mask(p), SplitTable(), range(0, 8))
        assert series.values[-1] == pytest.approx(1.0 / 8000.0, rel=1e-12)

    def test_high_price_small_cap_dominates(self):
        # One tiny-cap, high-priced asset owns the price index; the cap
        # index barely notices its move.
        d = 8
        base = np.full((3, d), 1.0)
        close = np.array([np.full(d, 100.0), np.full(d, 50.0), np.full(d, 5000.0)])
        close[2, :3] = 50000.0  # spikes near the present
        cap = np.array([np.full(d, 1e9), np.full(d, 5e8), np.full(d, 1e5)])
        p = make_panel(
            open_=close, high=close * 1.1, low=close * 0.9, close=close,
            volume=base * 1e6, cap=cap,
        )
        mask = full_mask(p)
        prc = price_index(p, mask, SplitTable(), range(0, d))
        capx = cap_index(p, mask, range(0, d))
        assert prc.values.max() > 5.0
        assert abs(capx.values - 1.0).max() < 1e-9

    def test_cap_index_unaffected_by_splits(self, flat_panel):
        splits = SplitTable((SplitEntry("asset-0", flat_panel.axis[2], 8000.0),))
        a = cap_index(flat_panel, full_mask(flat_panel), range(0, 4))
        b = cap_index(apply_splits(flat_panel, splits), full_mask(flat_panel), range(0, 4))
        assert np.array_equal(a.values, b.values)


class TestEmit:
    def test_rows_and_order(self):
        series = IndexSeries(values=np.array([1.0, 1.5, 0.5]), kind=CAP_WEIGHTED, gamma=1.0)
        buf = io.StringIO()
        emit_series(series, buf)
        lines = buf.getvalue().rstrip("\n").split("\n")
        assert lines[0] == "day\tvalue"
        assert lines[1:] == ["1\t1.0", "2\t1.5", "3\t0.5"]

    def test_empty_series_header_only(self):
        series = IndexSeries(values=np.array([]), kind=PRICE_WEIGHTED, gamma=1.0)
        buf = io.StringIO()
        emit_series(series, buf)
        assert buf.getvalue() == "day\tvalue\n"

    def test_file_sink(self, tmp_path):
        series = IndexSeries(values=np.array([1.0, 2.0]), kind=CAP_WEIGHTED, gamma=1.0)
        path = tmp_path / "ix.txt"
        emit_series(series, path)
        assert path.read_text().count("\n") == 3

    def test_svg_render(self):
        series = IndexSeries(values=np.array([1.0, 1.2, 0.8]), kind=CAP_WEIGHTED, gamma=1.0)
        svg = render_svg(series)
        assert svg.startswith("<svg") and "polyline" in svg
