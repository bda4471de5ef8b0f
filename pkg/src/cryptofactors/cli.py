"""Command-line frontend: aggregate, backtest, indexes, turnover, synth.

Flag names mirror the historical parameter names of this data pipeline
(``--days``, ``--back``, ``--lookback``, ``--d-r``, ``--d-v``, ``--d-i``) so
runs can be compared against it one-to-one. Settings resolve as
flags > config file > defaults. All tabular output is tab-separated and
byte-deterministic; diagnostics go to stderr and any failure exits nonzero.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from dataclasses import dataclass, fields
from itertools import product
from pathlib import Path

from . import ingest
from .errors import ParseError
from .factors import FactorSpec
from .index import (
    cap_index,
    default_split_table,
    emit_series,
    price_index,
    read_split_file,
    write_svg,
)
from .kvfile import read_kv
from .panel import CLOSE_TO_CLOSE, OPEN_TO_CLOSE, read_legacy_panel, write_legacy_panel
from .regress import run_backtest, turnover_summary, TurnoverSummary
from .synth import SynthConfig, generate_panel, load_config, save_config, write_ground_truth
from .universe import WindowSpec, read_exclusion_file, select_universe
from .factors import build_loadings

DEFAULT_ROSTER = ("int", "cap", "mom", "hlv", "vol")


@dataclass
class RunConfig:
    """Resolved settings for one CLI invocation; every flag maps to one field."""

    command: str = ""
    input_dir: str = ""
    output: str = ""
    days: int = 365
    back: int = 0
    lookback: int | None = None
    d_r: int = 20
    d_v: tuple[int, ...] = (20,)
    d_hlv: tuple[int, ...] = (20,)
    roster: tuple[str, ...] = DEFAULT_ROSTER
    convention: str = OPEN_TO_CLOSE
    exclusion_file: str = ""
    split_file: str = ""
    series_out: str = ""
    svg: bool = False
    reference: str = ""
    seed: int | None = None
    n_assets: int | None = None
    n_days: int | None = None
    synth_config: str = ""

    def window(self, d_v: int, d_hlv: int) -> WindowSpec:
        return WindowSpec(
            days=self.days, back=self.back, lookback=self.lookback,
            d_r=self.d_r, d_v=d_v, d_hlv=d_hlv,
        )

    def exclusions(self) -> tuple[str, ...]:
        return read_exclusion_file(self.exclusion_file) if self.exclusion_file else ()


_INT_LIST_FIELDS = {"d_v", "d_hlv"}


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty integer list")
    return values


def _parse_roster(text: str) -> tuple[str, ...]:
    return tuple(tok.strip() for tok in text.split(",") if tok.strip())


def _apply_config_file(cfg: RunConfig, path: str) -> None:
    """Fill RunConfig fields from a flat key = value file."""
    known = {f.name: f for f in fields(RunConfig)}
    for key, raw in read_kv(path).items():
        name = key.replace("-", "_")
        if name == "d_i":
            name = "d_hlv"
        if name not in known:
            raise ParseError(f"{path}: unknown config key {key!r}")
        if name in _INT_LIST_FIELDS:
            value = _parse_int_list(raw)
        elif name == "roster":
            value = _parse_roster(raw)
        elif name in ("days", "back", "lookback", "d_r", "seed", "n_assets"):
            value = int(raw)
        elif name == "svg":
            value = raw.strip().lower() in ("1", "true", "yes")
        else:
            value = raw
        setattr(cfg, name, value)


def _add_window_args(parser: argparse.ArgumentParser, multi_windows: bool) -> None:
    parser.add_argument("--days", type=int, default=None,
                        help="selection-period length in days (default 365)")
    parser.add_argument("--back", type=int, default=None,
                        help="most recent days to skip before the regression period")
    parser.add_argument("--lookback", type=int, default=None,
                        help="regression-period length in days (default: days)")
    parser.add_argument("--d-r", dest="d_r", type=int, default=None,
                        help="extra padding days for out-of-sample moving averages")
    if multi_windows:
        parser.add_argument("--d-v", dest="d_v", type=_parse_int_list, default=None,
                            help="volume-average window(s), comma separated")
        parser.add_argument("--d-i", dest="d_hlv", type=_parse_int_list, default=None,
                            help="volatility-average window(s), comma separated")
    else:
        parser.add_argument("--d-v", dest="d_v", type=int, default=None,
                            help="volume-average window")
        parser.add_argument("--d-i", dest="d_hlv", type=int, default=None,
                            help="volatility-average window")
    parser.add_argument("--exclusions", dest="exclusion_file", default=None,
                        help="file of slugs to exclude, one per line")
    parser.add_argument("--config", dest="config_file", default=None,
                        help="flat key = value config file (flags take precedence)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cryptofactors",
        description="Cross-sectional factor regressions and indexes for daily cryptoasset panels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("aggregate", help="aggregate per-asset history files into panel matrices")
    p.add_argument("--input", dest="input_dir", required=True,
                   help="directory of per-asset tab-delimited history files")
    p.add_argument("--output", required=True, help="directory for the aggregated matrices")
    p.add_argument("--reference", default=None,
                   help="slug whose dates define the panel axis (default: metadata order, then 'bitcoin')")

    p = sub.add_parser("backtest", help="run daily cross-sectional regressions and print t-stats")
    p.add_argument("--input", dest="input_dir", required=True,
                   help="directory with aggregated panel matrices")
    _add_window_args(p, multi_windows=True)
    p.add_argument("--factors", dest="roster", type=_parse_roster, default=None,
                   help="comma-separated factor roster (default int,cap,mom,hlv,vol)")
    p.add_argument("--convention", choices=[OPEN_TO_CLOSE, CLOSE_TO_CLOSE], default=None,
                   help="dependent-variable return convention")
    p.add_argument("--series-out", dest="series_out", default=None,
                   help="write the full-precision factor-return series to this file "
                        "(single d-v/d-i combination only)")

    p = sub.add_parser("indexes", help="emit cap- and price-weighted index series")
    p.add_argument("--input", dest="input_dir", required=True)
    p.add_argument("--output", required=True, help="directory for the series files")
    _add_window_args(p, multi_windows=False)
    p.add_argument("--splits", dest="split_file", default=None,
                   help="split declarations (slug<TAB>date<TAB>ratio); default: built-in table")
    p.add_argument("--svg", action="store_true", default=None,
                   help="also render minimal SVG charts")

    p = sub.add_parser("turnover", help="print the cross-sectional volume/cap summary")
    p.add_argument("--input", dest="input_dir", required=True)
    _add_window_args(p, multi_windows=False)

    p = sub.add_parser("synth", help="generate a synthetic panel with known ground truth")
    p.add_argument("--output", required=True, help="directory for panel and ground-truth files")
    p.add_argument("--config", dest="synth_config", default=None,
                   help="generator config file (flat key = value)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--assets", dest="n_assets", type=int, default=None,
                   help="override the number of assets")
    p.add_argument("--days", dest="n_days", type=int, default=None,
                   help="override the number of panel days")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    config_file = getattr(args, "config_file", None)
    if config_file:
        _apply_config_file(cfg, config_file)
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            if f.name in _INT_LIST_FIELDS and isinstance(value, int):
                value = (value,)
            setattr(cfg, f.name, value)
    return cfg


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _format_tstat(value: float) -> str:
    # Two-decimal rounding for the printed table; trailing zeros dropped the
    # way the usual numeric printers do ("-34.2", "1").
    return f"{round(value, 2):g}"


def cmd_aggregate(cfg: RunConfig, out=sys.stdout, err=sys.stderr) -> int:
    source = ingest.DirectorySource(cfg.input_dir)
    meta_path = Path(cfg.input_dir) / ingest.META_FILE
    meta = ingest.read_meta_file(meta_path) if meta_path.exists() else None
    slugs = tuple(meta) if meta else source.list_slugs()
    if not slugs:
        raise ValueError(f"no per-asset history files found under {cfg.input_dir}")
    reference = cfg.reference or (slugs[0] if meta else None)
    if reference is None:
        reference = "bitcoin" if "bitcoin" in slugs else None
    if reference is None:
        raise ValueError("no --reference given, no metadata file, and no 'bitcoin' history present")

    histories, fetch_bad = ingest.fetch_histories(source, slugs)
    panel, agg_bad = ingest.aggregate_histories(histories, reference, meta=meta)
    bad = ingest.BadAssetList(tuple(fetch_bad.slugs) + tuple(agg_bad.slugs))
    write_legacy_panel(panel, cfg.output)
    ingest.write_bad_list(bad, Path(cfg.output) / ingest.BAD_FILE)
    print(
        f"aggregated {panel.n_assets} assets over {panel.n_days} days; "
        f"{len(bad.slugs)} bad",
        file=err,
    )
    return 0


def cmd_backtest(cfg: RunConfig, out=sys.stdout, err=sys.stderr) -> int:
    panel = read_legacy_panel(cfg.input_dir)
    exclusions = cfg.exclusions()
    combos = list(product(cfg.d_v, cfg.d_hlv))
    if cfg.series_out and len(combos) > 1:
        raise ValueError("--series-out needs a single d-v/d-i combination")
    header = ["d_vol", "d_hlv"] + [f"t-stat:{name}" for name in cfg.roster]
    print("\t".join(header), file=out)
    for d_v, d_hlv in combos:
        window = cfg.window(d_v, d_hlv)
        spec = FactorSpec(roster=cfg.roster, d_v=d_v, d_hlv=d_hlv)
        series, report = run_backtest(
            panel, window, spec, return_convention=cfg.convention, exclusions=exclusions
        )
        row = [str(d_v), str(d_hlv)] + [_format_tstat(report[n].tstat) for n in cfg.roster]
        print("\t".join(row), file=out)
        if cfg.series_out:
            with open(cfg.series_out, "w", encoding="utf-8") as fh:
                fh.write("date\t" + "\t".join(series.factor_names) + "\n")
                for j, date in enumerate(series.dates):
                    cells = [repr(float(v)) for v in series.values[j]]
                    fh.write(date + "\t" + "\t".join(cells) + "\n")
    return 0


def cmd_indexes(cfg: RunConfig, out=sys.stdout, err=sys.stderr) -> int:
    panel = read_legacy_panel(cfg.input_dir)
    d_v, d_hlv = cfg.d_v[0], cfg.d_hlv[0]
    window = cfg.window(d_v, d_hlv)
    sub = panel.first_days(window.padded) if panel.n_days > window.padded else panel
    mask = select_universe(sub, window, cfg.exclusions())
    if mask.n_selected == 0:
        raise ValueError("empty universe: every asset was excluded")
    # Match the regression universe: drop rows whose volatility loading
    # degenerates over the lookback.
    _, mask = build_loadings(sub, mask, window, FactorSpec(("int", "hlv"), d_hlv=d_hlv))
    if mask.n_selected == 0:
        raise ValueError("empty universe after the volatility-finiteness filter")
    if cfg.split_file:
        splits = read_split_file(cfg.split_file)
    else:
        splits = default_split_table().restrict_to(sub.slugs)
    period = range(window.back, window.back + window.lookback)
    outdir = Path(cfg.output)
    outdir.mkdir(parents=True, exist_ok=True)
    for series, stem in (
        (cap_index(sub, mask, period), "ix.cap"),
        (price_index(sub, mask, splits, period), "ix.prc"),
    ):
        emit_series(series, outdir / f"{stem}.txt")
        if cfg.svg:
            write_svg(series, outdir / f"{stem}.svg")
    print(f"wrote index series for {mask.n_selected} assets to {outdir}", file=err)
    return 0


def cmd_turnover(cfg: RunConfig, out=sys.stdout, err=sys.stderr) -> int:
    panel = read_legacy_panel(cfg.input_dir)
    d_v, d_hlv = cfg.d_v[0], cfg.d_hlv[0]
    window = cfg.window(d_v, d_hlv)
    sub = panel.first_days(window.padded) if panel.n_days > window.padded else panel
    mask = select_universe(sub, window, cfg.exclusions())
    summary = turnover_summary(sub, mask, s=window.back, d_v=d_v)
    print("\t".join(TurnoverSummary.LABELS), file=out)
    print("\t".join(f"{v:.6g}" for v in summary.as_tuple()), file=out)
    return 0


def cmd_synth(cfg: RunConfig, out=sys.stdout, err=sys.stderr) -> int:
    config = load_config(cfg.synth_config) if cfg.synth_config else SynthConfig()
    overrides = {}
    if cfg.seed is not None:
        overrides["seed"] = cfg.seed
    if cfg.n_assets is not None:
        overrides["n_assets"] = cfg.n_assets
    if cfg.n_days is not None:
        overrides["n_days"] = cfg.n_days
    if overrides:
        config = dataclasses.replace(config, **overrides)
    panel, truth = generate_panel(config)
    outdir = Path(cfg.output)
    write_legacy_panel(panel, outdir)
    write_ground_truth(truth, outdir)
    save_config(config, outdir / "synth.config.txt")
    print(
        f"generated {panel.n_assets} assets x {panel.n_days} days (seed {config.seed})",
        file=err,
    )
    return 0


_COMMANDS = {
    "aggregate": cmd_aggregate,
    "backtest": cmd_backtest,
    "indexes": cmd_indexes,
    "turnover": cmd_turnover,
    "synth": cmd_synth,
}


def main(argv=None, out=sys.stdout, err=sys.stderr) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return _COMMANDS[args.command](cfg, out=out, err=err)
    except BrokenPipeError:
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=err)
        return 1


def entrypoint() -> None:
    sys.exit(main())
