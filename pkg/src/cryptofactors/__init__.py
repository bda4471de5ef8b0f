"""Cross-sectional factor models for daily cryptoasset returns.

The package turns OHLCV + market-cap panels into out-of-sample factor
loadings, runs daily cross-sectional regressions, annualizes the resulting
coefficient series into t-statistics, and builds cap- and price-weighted
market indexes. A deterministic synthetic-panel generator with planted
factor structure serves as the end-to-end correctness oracle.
"""

from .errors import (
    ConstructionError,
    DegenerateSeriesError,
    InsufficientCrossSectionError,
    ParseError,
    RankDeficiencyError,
)
from .panel import (
    CLOSE_TO_CLOSE,
    OPEN_TO_CLOSE,
    AssetMeta,
    DateAxis,
    Panel,
    ReturnMatrix,
    close_close_returns,
    open_close_returns,
    read_legacy_panel,
    write_legacy_panel,
)
from .ingest import (
    AssetHistory,
    BadAssetList,
    DirectorySource,
    aggregate_histories,
    fetch_histories,
    histories_from_panel,
    parse_asset_history,
)
from .universe import (
    StaleRun,
    UniverseMask,
    WindowSpec,
    hlv_finiteness_filter,
    read_exclusion_file,
    select_universe,
    stale_price_report,
)
from .factors import (
    FACTOR_NAMES,
    FactorSpec,
    LoadingsCube,
    build_loadings,
    loading_cap,
    loading_hlv,
    loading_int,
    loading_mnbl,
    loading_mom,
    loading_vol,
)
from .regress import (
    ANNUALIZATION,
    DayRegression,
    FactorReturnSeries,
    FactorStat,
    TStatReport,
    TurnoverSummary,
    annualized_tstat,
    cross_section_ols,
    fit_day,
    run_backtest,
    turnover_summary,
)
from .index import (
    CAP_WEIGHTED,
    PRICE_WEIGHTED,
    IndexSeries,
    SplitEntry,
    SplitTable,
    apply_splits,
    cap_index,
    default_split_table,
    emit_series,
    price_index,
    read_split_file,
    render_svg,
    write_svg,
)
from .synth import (
    GroundTruth,
    SynthConfig,
    generate_panel,
    load_config,
    plant_mean_reversion,
    save_config,
    write_ground_truth,
)

__version__ = "0.1.0"
