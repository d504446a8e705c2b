"""Matplotlib renderings of the report outputs.

One PNG per chart, rendered with the Agg backend from the same in-memory
objects the CSV/JSON writers receive — the delimited files stay the canonical
interface, these are the human-friendly view.  Rendering is deterministic, so
re-running a report reproduces the images byte for byte.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .pipeline import (
    CascadeArtifacts,
    NetworkArtifacts,
    PanelBundle,
    TailArtifacts,
    _scenario_tag,
    theta_tag,
)

_DPI = 120


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def fig_normalized_prices(dates, asset_ids, normalized, path) -> Path:
    fig, ax = plt.subplots(figsize=(10, 6))
    for j, asset in enumerate(asset_ids):
        ax.plot(dates, normalized[:, j], lw=0.8, label=asset)
    ax.set_yscale("log")
    ax.set_xlabel("date")
    ax.set_ylabel("price / first price")
    ax.set_title("Normalized price paths")
    if len(asset_ids) <= 12:
        ax.legend(fontsize=7, ncol=2)
    return _save(fig, Path(path))


def fig_correlation_heatmap(asset_ids, values, path) -> Path:
    fig, ax = plt.subplots(figsize=(8, 7))
    im = ax.imshow(values, vmin=-1.0, vmax=1.0, cmap="RdBu_r")
    ax.set_xticks(range(len(asset_ids)))
    ax.set_yticks(range(len(asset_ids)))
    ax.set_xticklabels(asset_ids, rotation=90, fontsize=6)
    ax.set_yticklabels(asset_ids, fontsize=6)
    ax.set_title("Return correlations")
    fig.colorbar(im, ax=ax, shrink=0.8)
    return _save(fig, Path(path))


def fig_clustering_bars(stats, theta, path) -> Path:
    stats = sorted(stats, key=lambda s: s.asset_id)
    fig, ax = plt.subplots(figsize=(10, 5))
    ax.bar([s.asset_id for s in stats], [s.clustering for s in stats])
    ax.set_ylabel("local clustering")
    ax.set_ylim(0, 1.05)
    ax.set_title(f"Exposure-network clustering (theta={theta:g})")
    ax.tick_params(axis="x", rotation=90, labelsize=6)
    return _save(fig, Path(path))


def fig_propagation_heatmap(history, asset_ids, theta, path) -> Path:
    grid = np.array([np.asarray(row, dtype=bool) for row in history], dtype=int)
    fig, ax = plt.subplots(figsize=(10, 0.6 + 0.4 * grid.shape[0]))
    ax.imshow(grid, aspect="auto", cmap="Greys", vmin=0, vmax=1)
    ax.set_xticks(range(len(asset_ids)))
    ax.set_xticklabels(asset_ids, rotation=90, fontsize=6)
    ax.set_yticks(range(grid.shape[0]))
    ax.set_ylabel("iteration")
    ax.set_title(f"Influence-cascade spread (theta={theta:g})")
    return _save(fig, Path(path))


def fig_ccdf(curves, path) -> Path:
    fig, ax = plt.subplots(figsize=(8, 6))
    for curve in curves:
        ax.loglog(curve.losses, curve.exceedance, lw=0.8, label=curve.asset_id)
    ax.set_xlabel("daily loss magnitude")
    ax.set_ylabel("P(loss >= x)")
    ax.set_title("Loss tail survival curves")
    if len(curves) <= 12:
        ax.legend(fontsize=7)
    return _save(fig, Path(path))


def fig_hill(curves, path) -> Path:
    fig, ax = plt.subplots(figsize=(8, 6))
    for curve in curves:
        ax.plot(curve.ks, curve.alphas, lw=0.8, label=curve.asset_id)
    ax.axhline(3.0, color="grey", lw=0.8, ls="--")
    ax.set_xlabel("tail size k")
    ax.set_ylabel("Hill tail exponent")
    ax.set_title("Hill plots (dashed line: heavy/moderate boundary)")
    if len(curves) <= 12:
        ax.legend(fontsize=7)
    return _save(fig, Path(path))


def fig_failed_histogram(report, path) -> Path:
    ks = sorted(report.histogram)
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.bar([str(k) for k in ks], [report.histogram[k] for k in ks])
    ax.set_xlabel("assets defaulted per run")
    ax.set_ylabel("runs")
    ax.set_title(
        f"{report.scenario} | theta={report.theta:g} | {report.n_runs} runs"
    )
    return _save(fig, Path(path))


def render_report_figures(bundle: PanelBundle, network_art: NetworkArtifacts,
                          cascade_art: CascadeArtifacts, tail_art: TailArtifacts,
                          outdir) -> list[Path]:
    """Render the full report figure set into ``outdir``."""
    outdir = Path(outdir)
    ids = bundle.asset_ids
    written = [
        fig_normalized_prices(
            bundle.dates, ids, bundle.prices / bundle.prices[0],
            outdir / "normalized_prices.png",
        ),
        fig_correlation_heatmap(
            ids, bundle.corr.values, outdir / "correlation_matrix.png"
        ),
    ]
    for theta in bundle.cfg.theta_list:
        tag = theta_tag(theta)
        written.append(
            fig_clustering_bars(
                network_art.clustering[("exposure", theta)], theta,
                outdir / f"clustering_exposure_theta{tag}.png",
            )
        )
        written.append(
            fig_propagation_heatmap(
                cascade_art.histories[theta], ids, theta,
                outdir / f"propagation_heatmap_theta{tag}.png",
            )
        )
    if tail_art.ccdf_curves:
        written.append(fig_ccdf(tail_art.ccdf_curves, outdir / "loss_ccdf.png"))
    if tail_art.hill_curves:
        written.append(fig_hill(tail_art.hill_curves, outdir / "hill_plots.png"))
    for report in cascade_art.reports:
        written.append(
            fig_failed_histogram(
                report,
                outdir
                / f"failed_hist_{_scenario_tag(report.scenario)}_theta{theta_tag(report.theta)}.png",
            )
        )
    return written
