"""Correlation-based exposure networks, tail risk measures, and default-cascade
simulation for daily equity price panels."""

__version__ = "0.1.0"

from .cascade import (
    CapitalConfig,
    CascadeState,
    PropagationResult,
    Scenario,
    SimulationReport,
    apply_shock,
    deterministic_cascade,
    export_propagation_heatmap,
    gai_kapadia_step,
    monte_carlo,
    recursion_step,
    run_cascade,
)
from .config import RunConfig, resolve_config
from .errors import (
    CascadeNetError,
    ConfigError,
    DataError,
    FetchError,
    ParseError,
)
from .market_data import (
    DescriptiveStats,
    PriceSeries,
    ReturnMatrix,
    align_panel,
    clean_panel,
    clean_series,
    descriptive_stats,
    fetch_prices,
    load_price_csv,
    log_returns,
    normalize_prices,
    reference_prices,
    restrict_dates,
)
from .network import (
    CorrelationMatrix,
    ExposureNetwork,
    TopologyStats,
    clustering_coefficients,
    correlation_matrix,
    correlation_network,
    export_graph,
    export_matrix,
    exposure_matrix,
    incoming_exposure,
    support_adjacency,
    threshold_filter,
    volatilities,
)
from .risk import (
    CcdfCurve,
    HillCurve,
    RiskMeasures,
    TailFit,
    ccdf_tail_slope,
    classify_tail,
    cvar,
    empirical_ccdf,
    hill_estimate,
    hill_plot_data,
    loss_sample,
    risk_measures,
    tail_fit,
    var,
)

__all__ = [name for name in dir() if not name.startswith("_")]
