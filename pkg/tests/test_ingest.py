import numpy as np
import pytest

from cryptofactors import (
    AssetHistory,
    DirectorySource,
    ParseError,
    aggregate_histories,
    fetch_histories,
    histories_from_panel,
    parse_asset_history,
)
from cryptofactors.dates import day_sequence

from conftest import random_panel

D5 = day_sequence("2018-08-18", 5)  # d0 (most recent) .. d4

HEADER = "Date\tOpen\tHigh\tLow\tClose\tVolume\tMktCap"


def history_text(rows):
    return HEADER + "\n" + "\n".join("\t".join(r) for r in rows) + "\n"


class TestParse:
    def test_comma_stripping(self):
        text = history_text([["Aug 18, 2018", "1,234.5", "2,000", "1,000", "1,500", "9,999", "1,000,000"]])
        h = parse_asset_history(text, "x")
        assert h.values[0, 0] == 1234.5
        assert h.values[0, 5] == 1_000_000.0

    def test_question_mark_is_missing(self):
        text = history_text([["2018-08-18", "1", "2", "0.5", "1.5", "?", ""]])
        h = parse_asset_history(text, "x")
        assert np.isnan(h.values[0, 4]) and np.isnan(h.values[0, 5])

    def test_out_of_order_dates_rejected(self):
        text = history_text([
            ["2018-08-17", "1", "2", "0.5", "1.5", "10", "100"],
            ["2018-08-18", "1", "2", "0.5", "1.5", "10", "100"],
        ])
        with pytest.raises(ParseError, match="strictly decreasing"):
            parse_asset_history(text, "x")

    def test_malformed_header(self):
        with pytest.raises(ParseError, match="header"):
            parse_asset_history("Date\tOpen\n2018-08-18\t1\n", "x")

    def test_garbage_cell_reports_position(self):
        text = history_text([["2018-08-18", "1", "2", "0.5", "oops", "10", "100"]])
        with pytest.raises(ParseError, match=":2:5"):
            parse_asset_history(text, "x")

    def test_path_input(self, tmp_path):
        path = tmp_path / "btc.txt"
        path.write_text(history_text([["2018-08-18", "1", "2", "0.5", "1.5", "10", "100"]]))
        assert parse_asset_history(path, "btc").n_rows == 1


def fixed_history(slug, dates, base=1.0):
    rows = len(dates)
    values = np.arange(rows * 6, dtype=float).reshape(rows, 6) + base
    return AssetHistory(slug=slug, dates=tuple(dates), values=values)


class TestAggregate:
    def test_toy_alignment_by_date(self):
        # Hand-checked: reference spans d0..d4; B has only the three most
        # recent; C skips d1/d3 and carries one date older than the axis.
        ref = fixed_history("bitcoin", D5, base=1.0)
        b = fixed_history("bee", D5[:3], base=100.0)
        old = day_sequence("2018-08-10", 1)[0]
        c = AssetHistory(
            slug="cee",
            dates=(D5[0], D5[2], old),
            values=np.array([[1, 2, 3, 4, 5, 6], [7, 8, 9, 10, 11, 12], [13, 14, 15, 16, 17, 18]], float),
        )
        panel, bad = aggregate_histories([ref, b, c], "bitcoin")
        assert len(bad) == 0
        assert panel.axis.dates == D5
        assert panel.slugs == ("bitcoin", "bee", "cee")
        # B: two oldest columns missing
        assert np.isnan(panel.open[1, 3]) and np.isnan(panel.cap[1, 4])
        assert panel.open[1, 0] == 100.0 and panel.open[1, 2] == 112.0
        # C: placed by date, gaps missing, off-axis row dropped entirely
        assert panel.open[2, 0] == 1.0 and panel.close[2, 0] == 4.0
        assert panel.open[2, 2] == 7.0 and panel.volume[2, 2] == 11.0
        assert np.isnan(panel.open[2, 1]) and np.isnan(panel.open[2, 3])
        assert not np.any(panel.open[2] == 13.0)

    def test_zero_row_history_goes_bad(self):
        ref = fixed_history("bitcoin", D5)
        empty = AssetHistory(slug="dud", dates=(), values=np.empty((0, 6)))
        panel, bad = aggregate_histories([ref, empty], "bitcoin")
        assert bad.slugs == ("dud",)
        assert panel.slugs == ("bitcoin",)

    def test_missing_reference_is_fatal(self):
        with pytest.raises(ValueError, match="reference"):
            aggregate_histories([fixed_history("bee", D5)], "bitcoin")

    def test_axis_fidelity(self):
        ref = fixed_history("bitcoin", D5)
        longer = fixed_history("elder", day_sequence("2018-08-18", 9))
        panel, _ = aggregate_histories([ref, longer], "bitcoin")
        assert panel.n_days == ref.n_rows
        assert panel.axis.dates == ref.dates
        # surplus older rows dropped
        assert np.isfinite(panel.close[1]).all()

    def test_partition_invariant(self):
        ref = fixed_history("bitcoin", D5)
        empty = AssetHistory(slug="dud", dates=(), values=np.empty((0, 6)))
        other = fixed_history("bee", D5[:2])
        panel, bad = aggregate_histories([ref, empty, other], "bitcoin")
        assert set(panel.slugs) | set(bad.slugs) == {"bitcoin", "dud", "bee"}
        assert set(panel.slugs) & set(bad.slugs) == set()

    def test_idempotence(self, rng):
        p = random_panel(rng, n=4, d=7, missing_rate=0.15)
        # The reference must be complete for its dates to form the axis.
        full = np.array(p.close)
        full[0] = 42.0
        p = p.replace(
            close=full,
            **{f: _fill_row(getattr(p, f), 0) for f in ("open", "high", "low", "volume", "cap")},
        )
        meta = {a.slug: (a.name, a.minable) for a in p.assets}
        rebuilt, bad = aggregate_histories(histories_from_panel(p), p.slugs[0], meta=meta)
        assert len(bad) == 0
        assert rebuilt == p

    def test_meta_mapping(self):
        ref = fixed_history("bitcoin", D5)
        panel, _ = aggregate_histories(
            [ref], "bitcoin", meta={"bitcoin": ("Bitcoin", True)}
        )
        assert panel.assets[0].name == "Bitcoin"
        assert panel.assets[0].minable is True


def _fill_row(arr, i, value=7.0):
    out = np.array(arr)
    out[i] = value
    return out


class TestFetch:
    def _write(self, folder, slug, rows=1):
        lines = [HEADER]
        for r, date in enumerate(day_sequence("2018-08-18", rows)):
            lines.append("\t".join([date, "1", "2", "0.5", "1.5", "10", str(100 + r)]))
        (folder / f"{slug}.txt").write_text("\n".join(lines) + "\n")

    def test_directory_source(self, tmp_path):
        for slug in ("aaa", "bbb", "ccc"):
            self._write(tmp_path, slug, rows=3)
        histories, bad = fetch_histories(DirectorySource(tmp_path), ("aaa", "bbb", "ccc"))
        assert [h.slug for h in histories] == ["aaa", "bbb", "ccc"]
        assert len(bad) == 0

    def test_failure_recorded_per_slug(self, tmp_path):
        for slug in ("aaa", "bbb"):
            self._write(tmp_path, slug)
        histories, bad = fetch_histories(DirectorySource(tmp_path), ("aaa", "missing", "bbb"))
        assert [h.slug for h in histories] == ["aaa", "bbb"]
        assert bad.slugs == ("missing",)

    def test_empty_slug_list(self, tmp_path):
        histories, bad = fetch_histories(DirectorySource(tmp_path), ())
        assert histories == [] and len(bad) == 0

    def test_malformed_file_goes_bad(self, tmp_path):
        self._write(tmp_path, "aaa")
        (tmp_path / "bad.txt").write_text("not a table\n1\t2\n")
        histories, bad = fetch_histories(DirectorySource(tmp_path), ("aaa", "bad"))
        assert bad.slugs == ("bad",)

    def test_list_slugs_skips_special_files(self, tmp_path):
        self._write(tmp_path, "aaa")
        (tmp_path / "crypto.bad.txt").write_text("x\n")
        (tmp_path / "cr.prc.txt").write_text("x\n")
        sub = tmp_path / "CryptoHistData"
        sub.mkdir()
        self._write(sub, "bbb")
        assert DirectorySource(tmp_path).list_slugs() == ("aaa", "bbb")
