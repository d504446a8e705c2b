"""Correlation and exposure networks over an aligned return panel.

The exposure a shock to asset j exerts on asset i is modeled as
``E[i, j] = rho[i, j] * sigma[i] * price[i]``: co-movement scaled by the
receiving asset's volatility and price level.  Networks are sparsified by an
absolute threshold theta — entries below it are zeroed, which also discards
negative co-movements.  Topology statistics (degree, local clustering via
triangle counts) are computed on the undirected support of the filtered
matrix: nodes are linked when either direction survived the filter.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .market_data import ReturnMatrix

_SYMMETRY_TOL = 1e-12


@dataclass
class CorrelationMatrix:
    """Pearson correlations of aligned return columns (exactly symmetric, unit diagonal)."""

    asset_ids: list[str]
    values: np.ndarray


@dataclass
class ExposureNetwork:
    """A threshold-filtered weighted graph over the panel's assets.

    ``weights[i, j]`` is the surviving directed weight i -> j (0 where the raw
    entry fell below ``theta``); the diagonal is identically zero.
    ``reference_prices`` carries the per-asset price level the cascade engine
    sizes shocks and capital buffers with.
    """

    asset_ids: list[str]
    theta: float
    weights: np.ndarray
    reference_prices: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.reference_prices = np.asarray(self.reference_prices, dtype=float)
        n = len(self.asset_ids)
        if self.weights.shape != (n, n):
            raise DataError(
                f"weight matrix shape {self.weights.shape} does not match "
                f"{n} assets"
            )
        if self.reference_prices.shape != (n,):
            raise DataError("reference_prices length does not match assets")
        if (self.reference_prices <= 0).any():
            raise DataError("reference prices must be positive")

    @property
    def n_assets(self) -> int:
        return len(self.asset_ids)

    def index_of(self, asset_id: str) -> int:
        try:
            return self.asset_ids.index(asset_id)
        except ValueError:
            raise DataError(f"unknown asset {asset_id!r}") from None


@dataclass
class TopologyStats:
    asset_id: str
    degree: int
    clustering: float


def correlation_matrix(returns: ReturnMatrix) -> CorrelationMatrix:
    """Pairwise Pearson correlations (sample covariance, n-1 divisor).

    A constant return column has no defined correlation; it is reported by
    name instead of propagating NaNs.
    """
    values = returns.values
    if values.shape[0] < 2:
        raise DataError("need at least two return rows for correlations")
    centered = values - values.mean(axis=0)
    cov = centered.T @ centered / (values.shape[0] - 1)
    sd = np.sqrt(np.diag(cov))
    flat = [returns.asset_ids[j] for j in np.nonzero(sd == 0)[0]]
    if flat:
        raise DataError(f"zero return variance for: {', '.join(flat)}")
    rho = cov / np.outer(sd, sd)
    # scrub ulp-level asymmetry from the quotient so downstream equality and
    # symmetry checks hold exactly
    rho = (rho + rho.T) / 2.0
    np.fill_diagonal(rho, 1.0)
    np.clip(rho, -1.0, 1.0, out=rho)
    return CorrelationMatrix(list(returns.asset_ids), rho)


def volatilities(returns: ReturnMatrix) -> np.ndarray:
    """Per-asset sample standard deviation (n-1) of the return columns."""
    if returns.values.shape[0] < 2:
        raise DataError("need at least two return rows for volatilities")
    sd = returns.values.std(axis=0, ddof=1)
    flat = [returns.asset_ids[j] for j in np.nonzero(sd == 0)[0]]
    if flat:
        raise DataError(f"zero return variance for: {', '.join(flat)}")
    return sd


def exposure_matrix(
    corr: CorrelationMatrix, sigma: np.ndarray, prices: np.ndarray
) -> np.ndarray:
    """Raw (unfiltered) exposure weights E[i, j] = rho[i, j] * sigma[i] * price[i].

    Row i scales with asset i's own volatility and price level, so the matrix
    is asymmetric even though rho is symmetric.  The diagonal is zeroed: an
    asset has no exposure to itself.
    """
    sigma = np.asarray(sigma, dtype=float)
    prices = np.asarray(prices, dtype=float)
    n = len(corr.asset_ids)
    if sigma.shape != (n,) or prices.shape != (n,):
        raise DataError("sigma/prices length does not match the correlation matrix")
    if (prices <= 0).any():
        raise DataError("reference prices must be positive")
    if (sigma < 0).any():
        raise DataError("volatilities must be non-negative")
    raw = corr.values * (sigma * prices)[:, None]
    np.fill_diagonal(raw, 0.0)
    return raw


def threshold_filter(
    raw: np.ndarray,
    theta: float,
    asset_ids: list[str],
    reference_prices: np.ndarray,
) -> ExposureNetwork:
    """Keep entries >= theta (ties survive), zero the rest and the diagonal."""
    if theta <= 0:
        raise DataError(f"theta must be positive, got {theta}")
    raw = np.asarray(raw, dtype=float)
    weights = np.where(raw >= theta, raw, 0.0)
    np.fill_diagonal(weights, 0.0)
    return ExposureNetwork(
        asset_ids=list(asset_ids),
        theta=theta,
        weights=weights,
        reference_prices=np.asarray(reference_prices, dtype=float).copy(),
    )


def correlation_network(
    corr: CorrelationMatrix,
    theta: float,
    reference_prices: np.ndarray | None = None,
) -> ExposureNetwork:
    """Undirected graph keeping correlations >= theta, weighted by rho itself."""
    n = len(corr.asset_ids)
    prices = (
        np.ones(n)
        if reference_prices is None
        else np.asarray(reference_prices, dtype=float)
    )
    return threshold_filter(corr.values, theta, corr.asset_ids, prices)


def support_adjacency(net: ExposureNetwork) -> np.ndarray:
    """Boolean undirected support: i ~ j when either direction survived the filter."""
    return (net.weights > 0) | (net.weights.T > 0)


def clustering_coefficients(net: ExposureNetwork) -> list[TopologyStats]:
    """Degree and local clustering C_i = 2*T_i / (k_i*(k_i - 1)) per node.

    T_i counts triangles through i on the undirected support graph; nodes with
    degree below 2 get clustering 0 by convention.
    """
    adj = support_adjacency(net).astype(float)
    degrees = adj.sum(axis=1).astype(int)
    triangles = np.diag(np.linalg.matrix_power(adj, 3)) / 2.0
    out = []
    for i, asset in enumerate(net.asset_ids):
        k = int(degrees[i])
        c = 2.0 * triangles[i] / (k * (k - 1)) if k >= 2 else 0.0
        out.append(TopologyStats(asset_id=asset, degree=k, clustering=float(c)))
    return out


def incoming_exposure(net: ExposureNetwork) -> np.ndarray:
    """Column sums of the filtered weights: what each asset absorbs from the rest."""
    return net.weights.sum(axis=0)


def market_group(asset_id: str) -> str:
    """Coarse venue bucket from the ticker suffix (São Paulo listings vs the rest)."""
    return "brazil" if asset_id.upper().endswith(".SA") else "developed"


def export_graph(net: ExposureNetwork, stats: list[TopologyStats],
                 nodes_path, edges_path) -> None:
    """Write node and edge lists for plotting/inspection.

    Nodes: ``asset,clustering,degree,market_group`` sorted by ticker.  Edges:
    ``src,dst,weight``; a symmetric weight matrix is emitted once per pair with
    src < dst, an asymmetric one gets one row per directed edge.  Row order is
    lexicographic so identical networks serialize identically.
    """
    by_id = {s.asset_id: s for s in stats}
    missing = [a for a in net.asset_ids if a not in by_id]
    if missing:
        raise DataError(f"missing topology stats for: {', '.join(missing)}")

    with open(nodes_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["asset", "clustering", "degree", "market_group"])
        for asset in sorted(net.asset_ids):
            s = by_id[asset]
            writer.writerow(
                [asset, f"{s.clustering:.6g}", s.degree, market_group(asset)]
            )

    symmetric = bool(
        np.allclose(net.weights, net.weights.T, rtol=0.0, atol=_SYMMETRY_TOL)
    )
    order = np.argsort(np.asarray(net.asset_ids, dtype=object))
    rows = []
    for oi in order:
        for oj in order:
            w = net.weights[oi, oj]
            if w <= 0:
                continue
            if symmetric and net.asset_ids[oi] >= net.asset_ids[oj]:
                continue
            rows.append((net.asset_ids[oi], net.asset_ids[oj], w))
    with open(edges_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["src", "dst", "weight"])
        for src, dst, w in rows:
            writer.writerow([src, dst, f"{w:.6g}"])


def export_matrix(asset_ids: list[str], values: np.ndarray, path) -> None:
    """Square matrix dump with ticker header row and column (debug aid)."""
    values = np.asarray(values, dtype=float)
    n = len(asset_ids)
    if values.shape != (n, n):
        raise DataError(f"matrix shape {values.shape} does not match {n} assets")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([""] + list(asset_ids))
        for i, asset in enumerate(asset_ids):
            writer.writerow([asset] + [f"{v:.6g}" for v in values[i]])
