"""Independent reference implementations the tests compare the library against.

Everything here is written in deliberately plain Python (loops, sorted(),
math.log) so a vectorization bug in the package cannot hide in a shared code
path.  Where exact float equality is asserted (VaR/CVaR, cascade default
sets), the oracle mirrors the library's accumulation order so both sides
perform the identical sequence of IEEE operations; the independent part is the
selection/indexing logic, which is what the tests are pinning down.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


# ---------------------------------------------------------------------------
# risk
# ---------------------------------------------------------------------------

def quantile_index(q: float, n: int) -> int:
    """1-indexed lower order statistic: ceil(q*n), clamped to at least 1."""
    return max(1, math.ceil(q * n - 1e-9))


def var_by_sort(sample, alpha_level: float) -> float:
    srt = sorted(float(x) for x in sample)
    idx = quantile_index(1.0 - alpha_level, len(srt))
    return srt[idx - 1]


def cvar_by_sort(sample, alpha_level: float) -> float:
    srt = sorted(float(x) for x in sample)
    idx = quantile_index(1.0 - alpha_level, len(srt))
    threshold = srt[idx - 1]
    j = idx
    while j < len(srt) and srt[j] == threshold:
        j += 1
    # np.mean so the reduction matches the implementation bit for bit; the
    # tail membership above is the independently derived part.
    return float(np.mean(np.asarray(srt[:j])))


def hill_by_hand(losses, k: int) -> float:
    xs = sorted((float(x) for x in losses), reverse=True)
    ref = math.log(xs[k])
    total = 0.0
    for i in range(k):
        total += math.log(xs[i]) - ref
    return k / total


def ccdf_by_count(losses) -> list[tuple[float, float]]:
    vals = [float(x) for x in losses]
    n = len(vals)
    points = []
    for x in sorted(set(vals)):
        exceed = sum(1 for v in vals if v >= x) / n
        points.append((x, exceed))
    return points


def stats_two_pass(column) -> tuple[float, float, float, float]:
    vals = [float(x) for x in column]
    n = len(vals)
    mean = sum(vals) / n
    ss = sum((v - mean) ** 2 for v in vals)
    return mean, math.sqrt(ss / (n - 1)), min(vals), max(vals)


# ---------------------------------------------------------------------------
# network
# ---------------------------------------------------------------------------

def correlation_by_sums(values) -> list[list[float]]:
    values = np.asarray(values, dtype=float)
    t, n = values.shape
    means = [sum(values[:, j]) / t for j in range(n)]
    out = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            cov = sum(
                (values[r, i] - means[i]) * (values[r, j] - means[j])
                for r in range(t)
            ) / (t - 1)
            si = math.sqrt(
                sum((values[r, i] - means[i]) ** 2 for r in range(t)) / (t - 1)
            )
            sj = math.sqrt(
                sum((values[r, j] - means[j]) ** 2 for r in range(t)) / (t - 1)
            )
            out[i][j] = cov / (si * sj)
    return out


def clustering_by_enumeration(adjacency) -> list[float]:
    adj = np.asarray(adjacency, dtype=bool)
    n = adj.shape[0]
    coeffs = []
    for i in range(n):
        nbrs = [j for j in range(n) if adj[i][j]]
        k = len(nbrs)
        if k < 2:
            coeffs.append(0.0)
            continue
        tri = sum(1 for a, b in itertools.combinations(nbrs, 2) if adj[a][b])
        coeffs.append(2.0 * tri / (k * (k - 1)))
    return coeffs


def column_sums(weights) -> list[float]:
    w = np.asarray(weights, dtype=float)
    return [sum(w[i, j] for i in range(w.shape[0])) for j in range(w.shape[1])]


# ---------------------------------------------------------------------------
# cascade
# ---------------------------------------------------------------------------

def cascade_by_hand(weights, prices, capital_ratio, min_capital_ratio,
                    shocks: dict[int, float]) -> list[bool]:
    """Fixed-point iteration of the capital cascade in plain Python.

    ``shocks`` maps asset index -> shock fraction, applied in key order.
    Capital starts at capital_ratio*price; an asset defaults when its capital
    is strictly below min_capital_ratio*price; each defaulter transmits
    max(0, w_ij - (K_i - D_i)) exactly once, one synchronous step after its
    default, with K_i frozen at the capital it held entering that step.
    """
    w = [[float(v) for v in row] for row in np.asarray(weights, dtype=float)]
    p = [float(v) for v in prices]
    n = len(p)
    cap = [capital_ratio * p[i] for i in range(n)]
    kmin = [min_capital_ratio * p[i] for i in range(n)]
    incoming = [sum(w[i][j] for i in range(n)) for j in range(n)]

    defaulted = [False] * n
    for t, s in shocks.items():
        cap[t] -= s * p[t]
        if cap[t] < kmin[t]:
            defaulted[t] = True

    transmitted = [False] * n
    while True:
        pending = [i for i in range(n) if defaulted[i] and not transmitted[i]]
        if not pending:
            return defaulted
        snapshot = list(cap)
        delta = [0.0] * n
        for i in pending:
            shortfall = snapshot[i] - incoming[i]
            for j in range(n):
                if w[i][j] > 0:
                    delta[j] += max(0.0, w[i][j] - shortfall)
        for j in range(n):
            cap[j] -= delta[j]
            if not defaulted[j] and cap[j] < kmin[j]:
                defaulted[j] = True
        for i in pending:
            transmitted[i] = True


def influence_step_by_hand(weights, threshold, defaults) -> list[bool]:
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    out = []
    for i in range(n):
        influence = sum(w[i][j] for j in range(n) if defaults[j])
        out.append(bool(defaults[i]) or influence > threshold)
    return out
