"""Command implementations behind the CLI: load, analyze, write report trees.

Every command is a pure function of (input file, config, seed): running one
twice with the same inputs produces byte-identical files.  CSV cells are
written with 6 significant digits; JSON keeps full float precision.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import market_data as md
from . import network as nw
from . import risk
from .cascade import (
    CascadeState,
    Scenario,
    SimulationReport,
    deterministic_cascade,
    export_propagation_heatmap,
    monte_carlo,
)
from .config import RunConfig
from .errors import ConfigError, DataError

_log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# small writers
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=True))
        fh.write("\n")
    return path


def theta_tag(theta: float) -> str:
    """0.3 -> "03", 0.5 -> "05": the tag used in filenames and column names."""
    return f"{theta:g}".replace(".", "")


def _scenario_tag(label: str) -> str:
    return label.replace(":", "_").replace("+", "-")


# ---------------------------------------------------------------------------
# shared panel preparation
# ---------------------------------------------------------------------------

@dataclass
class PanelBundle:
    """Everything the commands derive from one input file + config."""

    cfg: RunConfig
    panel: list[md.PriceSeries]
    dates: list[dt.date]
    prices: np.ndarray
    returns: md.ReturnMatrix
    ref_prices: np.ndarray
    corr: nw.CorrelationMatrix
    sigma: np.ndarray

    @property
    def asset_ids(self) -> list[str]:
        return [s.asset_id for s in self.panel]


def build_bundle(cfg: RunConfig) -> PanelBundle:
    if cfg.input_csv is None:
        raise ConfigError("an input CSV is required (--input or config input_csv)")
    raw_panel = md.load_price_csv(cfg.input_csv)
    start, end = cfg.start_date, cfg.end_date
    if start is not None or end is not None:
        raw_panel = [md.restrict_dates(s, start, end) for s in raw_panel]
    panel = md.clean_panel(raw_panel)
    dates, prices = md.align_panel(panel)
    returns = md.log_returns(panel)
    return PanelBundle(
        cfg=cfg,
        panel=panel,
        dates=dates,
        prices=prices,
        returns=returns,
        ref_prices=md.reference_prices(panel, cfg.reference_price_mode),
        corr=nw.correlation_matrix(returns),
        sigma=nw.volatilities(returns),
    )


def default_scenarios(asset_ids: list[str], targets: tuple[str, ...] = (),
                      scenario_choice: str | None = None,
                      shock_all: bool = False) -> tuple[list[Scenario], list[str]]:
    """The scenario grid a cascade run covers, plus the resolved target list.

    With no explicit choice the grid is: the general (or, with ``shock_all``,
    the all-assets) scenario, one single-shock scenario per target, and — when
    two or more targets are named — their simultaneous shock.  Targets default
    to the panel's first asset.
    """
    primary = list(targets) if targets else [asset_ids[0]]
    unknown = [t for t in primary if t not in asset_ids]
    if unknown:
        raise DataError(f"unknown shock targets: {', '.join(unknown)}")

    if scenario_choice is None:
        scenarios = [Scenario.all_assets() if shock_all else Scenario.general()]
        scenarios += [Scenario.single(t) for t in primary]
        if len(primary) >= 2:
            scenarios.append(Scenario.simultaneous(primary))
    elif scenario_choice == "general":
        scenarios = [Scenario.all_assets() if shock_all else Scenario.general()]
    elif scenario_choice == "single":
        scenarios = [Scenario.single(t) for t in primary]
    elif scenario_choice == "simultaneous":
        if len(primary) < 2:
            raise ConfigError(
                "the simultaneous scenario needs at least two --target assets"
            )
        scenarios = [Scenario.simultaneous(primary)]
    else:
        raise ConfigError(f"unknown scenario {scenario_choice!r}")
    return scenarios, primary


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------

def _stats_outputs(bundle: PanelBundle) -> list[Path]:
    outdir = Path(bundle.cfg.output_dir) / "stats"
    stats = md.descriptive_stats(bundle.returns)
    written = [
        _write_csv(
            outdir / "descriptive_stats.csv",
            ["asset", "mean", "std", "min", "max"],
            [[s.asset_id, s.mean, s.std, s.min, s.max] for s in stats],
        ),
        _write_json(
            outdir / "descriptive_stats.json",
            {
                s.asset_id: {"mean": s.mean, "std": s.std, "min": s.min, "max": s.max}
                for s in stats
            },
        ),
    ]
    norm = bundle.prices / bundle.prices[0]
    written.append(
        _write_csv(
            outdir / "normalized_prices.csv",
            ["date"] + bundle.asset_ids,
            [
                [d.isoformat()] + list(norm[t])
                for t, d in enumerate(bundle.dates)
            ],
        )
    )
    return written


def cmd_stats(cfg: RunConfig) -> list[Path]:
    """Descriptive return statistics and normalized price paths."""
    return _stats_outputs(build_bundle(cfg))


# ---------------------------------------------------------------------------
# network
# ---------------------------------------------------------------------------

@dataclass
class NetworkArtifacts:
    paths: list[Path]
    clustering: dict[tuple[str, float], list[nw.TopologyStats]]


def _network_outputs(bundle: PanelBundle) -> NetworkArtifacts:
    cfg = bundle.cfg
    outdir = Path(cfg.output_dir) / "network"
    ids = bundle.asset_ids
    written = [_write_matrix(outdir / "correlation_matrix.csv", ids, bundle.corr.values)]

    clustering: dict[tuple[str, float], list[nw.TopologyStats]] = {}
    raw = nw.exposure_matrix(bundle.corr, bundle.sigma, bundle.ref_prices)
    for theta in cfg.theta_list:
        tag = theta_tag(theta)
        for kind, net in (
            ("exposure", nw.threshold_filter(raw, theta, ids, bundle.ref_prices)),
            ("correlation", nw.correlation_network(bundle.corr, theta, bundle.ref_prices)),
        ):
            stats = nw.clustering_coefficients(net)
            clustering[(kind, theta)] = stats
            nodes = outdir / f"nodes_{kind}_theta{tag}.csv"
            edges = outdir / f"edges_{kind}_theta{tag}.csv"
            nodes.parent.mkdir(parents=True, exist_ok=True)
            nw.export_graph(net, stats, nodes, edges)
            written += [nodes, edges]
            written.append(
                _write_matrix(outdir / f"adjacency_{kind}_theta{tag}.csv",
                              ids, net.weights)
            )

    measures = [
        risk.risk_measures(asset, bundle.returns.values[:, j], cfg.alpha_level)
        for j, asset in enumerate(ids)
    ]
    pct = f"{cfg.alpha_level * 100:g}"
    for kind in ("exposure", "correlation"):
        header = [f"asset", f"var{pct}", f"cvar{pct}"] + [
            f"clustering_theta{theta_tag(t)}" for t in cfg.theta_list
        ]
        by_asset = {
            t: {s.asset_id: s.clustering for s in clustering[(kind, t)]}
            for t in cfg.theta_list
        }
        rows = [
            [m.asset_id, m.var, m.cvar]
            + [by_asset[t][m.asset_id] for t in cfg.theta_list]
            for m in measures
        ]
        written.append(_write_csv(outdir / f"risk_clustering_{kind}.csv", header, rows))
    return NetworkArtifacts(paths=written, clustering=clustering)


def _write_matrix(path: Path, ids: list[str], values: np.ndarray) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    nw.export_matrix(ids, values, path)
    return path


def cmd_network(cfg: RunConfig) -> list[Path]:
    """Correlation matrix, filtered graphs, topology stats, and the risk table."""
    return _network_outputs(build_bundle(cfg)).paths


# ---------------------------------------------------------------------------
# cascade
# ---------------------------------------------------------------------------

@dataclass
class CascadeArtifacts:
    paths: list[Path]
    reports: list[SimulationReport]
    histories: dict[float, list[np.ndarray]]


def _cascade_outputs(bundle: PanelBundle, scenario_choice: str | None = None,
                     targets: tuple[str, ...] = (), shock_all: bool = False,
                     transpose: bool = False) -> CascadeArtifacts:
    cfg = bundle.cfg
    outdir = Path(cfg.output_dir) / "cascade"
    ids = bundle.asset_ids
    capcfg = cfg.to_capital_config()
    scenarios, primary = default_scenarios(ids, targets, scenario_choice, shock_all)

    written: list[Path] = []
    reports: list[SimulationReport] = []
    histories: dict[float, list[np.ndarray]] = {}
    summary_rows = []
    raw = nw.exposure_matrix(bundle.corr, bundle.sigma, bundle.ref_prices)
    for theta in cfg.theta_list:
        tag = theta_tag(theta)
        net = nw.threshold_filter(raw, theta, ids, bundle.ref_prices)
        if transpose:
            net = nw.ExposureNetwork(
                asset_ids=ids,
                theta=theta,
                weights=net.weights.T.copy(),
                reference_prices=bundle.ref_prices,
            )
        for scenario in scenarios:
            report = monte_carlo(net, capcfg, scenario, cfg.n_runs, cfg.seed)
            reports.append(report)
            written.append(
                _write_json(
                    outdir
                    / f"simulation_{_scenario_tag(report.scenario)}_theta{tag}.json",
                    report.to_json_dict(),
                )
            )
            summary_rows.append(
                [
                    report.scenario,
                    theta,
                    report.failure_probability,
                    report.avg_failed_assets,
                ]
            )

        corr_net = nw.correlation_network(bundle.corr, theta, bundle.ref_prices)
        seeds = np.zeros(len(ids), dtype=bool)
        for t in primary:
            seeds[ids.index(t)] = True
        det = deterministic_cascade(corr_net.weights, seeds, cfg.influence_threshold)
        histories[theta] = det.history
        heatmap = outdir / f"propagation_heatmap_theta{tag}.csv"
        heatmap.parent.mkdir(parents=True, exist_ok=True)
        export_propagation_heatmap(det.history, ids, heatmap)
        written.append(heatmap)

        survivors = np.nonzero(~det.defaulted)[0]
        if survivors.size:
            sub = nw.ExposureNetwork(
                asset_ids=[ids[i] for i in survivors],
                theta=theta,
                weights=corr_net.weights[np.ix_(survivors, survivors)],
                reference_prices=bundle.ref_prices[survivors],
            )
            post_stats = sorted(
                nw.clustering_coefficients(sub), key=lambda s: s.asset_id
            )
        else:
            post_stats = []
        written.append(
            _write_csv(
                outdir / f"post_cascade_clustering_theta{tag}.csv",
                ["asset", "degree", "clustering"],
                [[s.asset_id, s.degree, s.clustering] for s in post_stats],
            )
        )

    written.append(
        _write_csv(
            outdir / "simulation_summary.csv",
            ["scenario", "theta", "failure_probability", "avg_failed_assets"],
            summary_rows,
        )
    )
    return CascadeArtifacts(paths=written, reports=reports, histories=histories)


def cmd_cascade(cfg: RunConfig, scenario_choice: str | None = None,
                targets: tuple[str, ...] = (), shock_all: bool = False,
                transpose: bool = False) -> list[Path]:
    """Monte Carlo cascades over the scenario x theta grid plus the
    deterministic influence run's propagation heatmap."""
    return _cascade_outputs(
        build_bundle(cfg), scenario_choice, targets, shock_all, transpose
    ).paths


# ---------------------------------------------------------------------------
# tail
# ---------------------------------------------------------------------------

@dataclass
class TailArtifacts:
    paths: list[Path]
    fits: list[risk.TailFit]
    ccdf_curves: list[risk.CcdfCurve]
    hill_curves: list[risk.HillCurve]


def _tail_outputs(bundle: PanelBundle) -> TailArtifacts:
    outdir = Path(bundle.cfg.output_dir) / "tail"
    fits: list[risk.TailFit] = []
    curves: list[risk.CcdfCurve] = []
    hill_curves: list[risk.HillCurve] = []
    written: list[Path] = []
    fit_rows = []

    for j, asset in enumerate(bundle.asset_ids):
        losses = risk.loss_sample(bundle.returns.values[:, j])
        n = losses.size
        if n < 3 or np.unique(losses).size < 2:
            _log.warning(
                "asset %s: %d losses (%d distinct); skipping tail fit",
                asset, n, int(np.unique(losses).size),
            )
            continue
        try:
            fit = risk.tail_fit(asset, losses)
            curve = risk.empirical_ccdf(losses, asset)
            hill_curve = risk.hill_plot_data(losses, 1, n - 1, asset)
        except DataError as exc:
            _log.warning("asset %s: %s; skipping tail fit", asset, exc)
            continue
        fits.append(fit)
        curves.append(curve)
        hill_curves.append(hill_curve)
        written.append(
            _write_csv(
                outdir / f"ccdf_{asset}.csv",
                ["loss", "exceedance_prob"],
                zip(curve.losses.tolist(), curve.exceedance.tolist()),
            )
        )
        written.append(
            _write_csv(
                outdir / f"hill_{asset}.csv",
                ["k", "alpha_hat"],
                zip(hill_curve.ks.tolist(), hill_curve.alphas.tolist()),
            )
        )
        try:
            ls_alpha = -risk.ccdf_tail_slope(curve)
        except DataError:
            ls_alpha = math.nan
        fit_rows.append([asset, ls_alpha, fit.alpha_hat])

    written.append(
        _write_csv(
            outdir / "tail_classification.csv",
            ["asset", "pareto_alpha", "n_losses", "tail_type"],
            [[f.asset_id, f.alpha_hat, f.n_losses, f.tail_class] for f in fits],
        )
    )
    written.append(
        _write_csv(
            outdir / "hill_stable_intervals.csv",
            ["asset", "stable_k_min", "stable_k_max", "stable_alpha"],
            [
                [h.asset_id, h.stable_k_min, h.stable_k_max, h.stable_alpha]
                for h in hill_curves
            ],
        )
    )
    written.append(
        _write_csv(
            outdir / "ccdf_fits.csv",
            ["asset", "least_squares_alpha", "hill_alpha"],
            fit_rows,
        )
    )
    return TailArtifacts(
        paths=written, fits=fits, ccdf_curves=curves, hill_curves=hill_curves
    )


def cmd_tail(cfg: RunConfig) -> list[Path]:
    """Loss-tail classification: Hill fits, CCDF curves, stable intervals."""
    return _tail_outputs(build_bundle(cfg)).paths


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def cmd_report(cfg: RunConfig, scenario_choice: str | None = None,
               targets: tuple[str, ...] = (), shock_all: bool = False,
               transpose: bool = False, figures: bool = True) -> list[Path]:
    """Run every analysis into one output tree, render figures, dump the config."""
    bundle = build_bundle(cfg)
    written = list(_stats_outputs(bundle))
    network_art = _network_outputs(bundle)
    cascade_art = _cascade_outputs(bundle, scenario_choice, targets, shock_all, transpose)
    tail_art = _tail_outputs(bundle)
    written += network_art.paths + cascade_art.paths + tail_art.paths

    config_path = Path(cfg.output_dir) / "run_config.json"
    config_path.parent.mkdir(parents=True, exist_ok=True)
    cfg.dump(config_path)
    written.append(config_path)

    if figures:
        from . import figures as figs

        written += figs.render_report_figures(
            bundle, network_art, cascade_art, tail_art,
            Path(cfg.output_dir) / "figures",
        )
    return written


# ---------------------------------------------------------------------------
# fetch
# ---------------------------------------------------------------------------

def cmd_fetch(tickers: list[str], start: str, end: str, endpoint: str,
              out_path) -> Path:
    """Download daily lows for tickers into a wide CSV ready for --input."""
    try:
        start_date = dt.date.fromisoformat(start)
        end_date = dt.date.fromisoformat(end)
    except ValueError as exc:
        raise ConfigError(f"malformed fetch date: {exc}") from None
    if start_date >= end_date:
        raise ConfigError(f"--start must precede --end: {start} vs {end}")
    return Path(md.fetch_prices(tickers, start_date, end_date, endpoint, out_path))
