"""Empirical tail-risk measures on daily return samples.

Value-at-risk is the lower empirical order statistic at the (1 - alpha)
quantile; expected shortfall (CVaR) averages every return at or below it.
Power-law tails are measured on loss magnitudes (absolute values of strictly
negative returns) with the Hill (1975) estimator and summarized by an
empirical complementary CDF.  A distribution is called heavy-tailed when the
fitted tail exponent is below 3, i.e. when the variance of the tail is barely
(or not) finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError

MIN_SAMPLE = 20
HEAVY_TAIL_BOUNDARY = 3.0
DEFAULT_TAIL_FRACTION = 0.05
STABLE_WINDOW_SPREAD = 0.2


@dataclass
class RiskMeasures:
    asset_id: str
    alpha_level: float
    var: float
    cvar: float


@dataclass
class CcdfCurve:
    """Exceedance probabilities P(loss >= x) at each distinct observed loss."""

    asset_id: str
    losses: np.ndarray
    exceedance: np.ndarray


@dataclass
class HillCurve:
    """Hill estimates over a range of tail sizes plus the flattest stretch.

    ``stable_k_min``/``stable_k_max`` bound the longest contiguous k-window in
    which the estimates spread (max - min) at most ``STABLE_WINDOW_SPREAD``;
    ``stable_alpha`` is the mean estimate over that window.
    """

    asset_id: str
    ks: np.ndarray
    alphas: np.ndarray
    stable_k_min: int
    stable_k_max: int
    stable_alpha: float


@dataclass
class TailFit:
    asset_id: str
    alpha_hat: float
    k_used: int
    n_losses: int
    tail_class: str
    threshold_percentile: float


def _as_sample(returns) -> np.ndarray:
    sample = np.asarray(returns, dtype=float).ravel()
    if sample.size < MIN_SAMPLE:
        raise DataError(
            f"need at least {MIN_SAMPLE} return observations, got {sample.size}"
        )
    if np.isnan(sample).any():
        raise DataError("return sample contains NaN")
    return sample


def _quantile_index(q: float, n: int) -> int:
    # 1-indexed ceil(q*n); the small epsilon guards against float fuzz pushing
    # an exact integer product just above it.
    return max(1, math.ceil(q * n - 1e-9))


def var(returns, alpha_level: float = 0.95) -> float:
    """Empirical value-at-risk: the ceil((1-alpha)*n)-th smallest return.

    Reported in return space, so losses come out negative (a 95% VaR of -0.011
    means the worst 5% of days lost 1.1% or more).
    """
    if not 0.0 < alpha_level < 1.0:
        raise DataError(f"alpha_level must be in (0, 1), got {alpha_level}")
    sample = np.sort(_as_sample(returns))
    idx = _quantile_index(1.0 - alpha_level, sample.size)
    return float(sample[idx - 1])


def cvar(returns, alpha_level: float = 0.95) -> float:
    """Expected shortfall: mean of all returns at or below the VaR."""
    sample = np.sort(_as_sample(returns))
    idx = _quantile_index(1.0 - alpha_level, sample.size)
    threshold = sample[idx - 1]
    tail = sample[: int(np.searchsorted(sample, threshold, side="right"))]
    return float(np.mean(tail))


def risk_measures(asset_id: str, returns, alpha_level: float = 0.95) -> RiskMeasures:
    """VaR and CVaR of one asset's return sample at the given confidence."""
    return RiskMeasures(
        asset_id=asset_id,
        alpha_level=alpha_level,
        var=var(returns, alpha_level),
        cvar=cvar(returns, alpha_level),
    )


def loss_sample(returns) -> np.ndarray:
    """Magnitudes of the strictly negative returns (zeros are not losses)."""
    sample = np.asarray(returns, dtype=float).ravel()
    return -sample[sample < 0]


def empirical_ccdf(losses, asset_id: str = "") -> CcdfCurve:
    """P(loss >= x) evaluated at each distinct observed loss, ascending.

    The first point always has probability exactly 1.  Needs at least two
    distinct losses; an all-equal sample has no curve to speak of.
    """
    sample = np.asarray(losses, dtype=float).ravel()
    if sample.size == 0:
        raise DataError("empty loss sample")
    values, counts = np.unique(sample, return_counts=True)
    if values.size < 2:
        raise DataError(
            f"degenerate loss sample: all {sample.size} losses equal {values[0]!r}"
        )
    n = sample.size
    exceed = (n - np.cumsum(counts) + counts) / n
    return CcdfCurve(asset_id=asset_id, losses=values, exceedance=exceed)


def hill_estimate(losses, k: int | None = None) -> float:
    """Hill tail-index estimate from the k largest losses.

    alpha_hat = [ (1/k) * sum_{i=1..k} (ln X_(i) - ln X_(k+1)) ]^-1 with X_(i)
    the i-th largest loss.  When ``k`` is omitted it defaults to 5% of the
    sample (at least 1).  All losses must be positive and k must satisfy
    1 <= k < n.
    """
    sample = np.asarray(losses, dtype=float).ravel()
    n = sample.size
    if n < 2:
        raise DataError(f"need at least 2 losses for a tail fit, got {n}")
    if (sample <= 0).any():
        raise DataError("losses must be strictly positive for a log tail fit")
    if k is None:
        k = max(1, int(DEFAULT_TAIL_FRACTION * n))
    if not 1 <= k < n:
        raise DataError(f"tail size k={k} out of range [1, {n - 1}]")
    logs = np.log(np.sort(sample)[::-1])
    mean_excess = float(np.mean(logs[:k] - logs[k]))
    if mean_excess <= 0.0:
        raise DataError(
            f"degenerate tail: the {k + 1} largest losses are identical"
        )
    return 1.0 / mean_excess


def hill_plot_data(losses, k_min: int = 1, k_max: int | None = None,
                   asset_id: str = "") -> HillCurve:
    """Hill estimates for every tail size k in [k_min, k_max].

    Also locates the longest contiguous window of k values over which the
    estimate moves by at most ``STABLE_WINDOW_SPREAD`` — the flat stretch one
    would read the tail index from on a Hill plot.  Ties go to the window that
    starts at the smallest k.
    """
    sample = np.asarray(losses, dtype=float).ravel()
    n = sample.size
    if n < 3:
        raise DataError(f"need at least 3 losses for a Hill curve, got {n}")
    if (sample <= 0).any():
        raise DataError("losses must be strictly positive for a log tail fit")
    if k_max is None:
        k_max = n - 1
    if not 1 <= k_min <= k_max <= n - 1:
        raise DataError(
            f"tail range [{k_min}, {k_max}] out of bounds for {n} losses"
        )
    logs = np.log(np.sort(sample)[::-1])
    prefix = np.cumsum(logs)
    ks = np.arange(k_min, k_max + 1)
    mean_excess = prefix[ks - 1] / ks - logs[ks]
    if (mean_excess <= 0.0).any():
        bad = int(ks[np.argmax(mean_excess <= 0.0)])
        raise DataError(f"degenerate tail: the {bad + 1} largest losses are identical")
    alphas = 1.0 / mean_excess
    lo_idx, hi_idx = _longest_stable_window(alphas, STABLE_WINDOW_SPREAD)
    return HillCurve(
        asset_id=asset_id,
        ks=ks,
        alphas=alphas,
        stable_k_min=int(ks[lo_idx]),
        stable_k_max=int(ks[hi_idx]),
        stable_alpha=float(alphas[lo_idx : hi_idx + 1].mean()),
    )


def _longest_stable_window(values: np.ndarray, spread: float) -> tuple[int, int]:
    """Indices [lo, hi] of the longest window with max-min <= spread (first wins)."""
    from collections import deque

    best = (0, 0)
    lo = 0
    maxq: deque[int] = deque()
    minq: deque[int] = deque()
    for hi in range(values.size):
        v = values[hi]
        while maxq and values[maxq[-1]] <= v:
            maxq.pop()
        maxq.append(hi)
        while minq and values[minq[-1]] >= v:
            minq.pop()
        minq.append(hi)
        while values[maxq[0]] - values[minq[0]] > spread:
            lo += 1
            if maxq[0] < lo:
                maxq.popleft()
            if minq[0] < lo:
                minq.popleft()
        if hi - lo > best[1] - best[0]:
            best = (lo, hi)
    return best


def classify_tail(alpha_hat: float, boundary: float = HEAVY_TAIL_BOUNDARY) -> str:
    """"heavy" when the tail exponent is strictly below the boundary, else "moderate"."""
    if not np.isfinite(alpha_hat) or alpha_hat <= 0:
        raise DataError(f"tail exponent must be positive and finite, got {alpha_hat}")
    return "heavy" if alpha_hat < boundary else "moderate"


def tail_fit(asset_id: str, losses, k: int | None = None) -> TailFit:
    """Hill fit + classification of one asset's loss sample."""
    sample = np.asarray(losses, dtype=float).ravel()
    n = sample.size
    if k is None:
        k = max(1, int(DEFAULT_TAIL_FRACTION * n))
    alpha_hat = hill_estimate(sample, k)
    return TailFit(
        asset_id=asset_id,
        alpha_hat=alpha_hat,
        k_used=k,
        n_losses=n,
        tail_class=classify_tail(alpha_hat),
        threshold_percentile=100.0 * (1.0 - k / n),
    )


def ccdf_tail_slope(curve: CcdfCurve, min_quantile: float = 0.95) -> float:
    """Least-squares slope of log-exceedance vs log-loss in the upper tail.

    The fit uses the curve points whose exceedance probability is at most
    ``1 - min_quantile`` — i.e. losses above that sample quantile.  For a
    power-law tail P(X >= x) ~ x^-alpha the slope is -alpha.  Needs at least
    two distinct curve points past the cutoff.
    """
    if not 0.0 <= min_quantile < 1.0:
        raise DataError(f"min_quantile must be in [0, 1), got {min_quantile}")
    mask = curve.exceedance <= (1.0 - min_quantile)
    if int(mask.sum()) < 2:
        raise DataError(
            f"fewer than two distinct losses above the {min_quantile:.0%} quantile"
        )
    slope, _ = np.polyfit(
        np.log(curve.losses[mask]), np.log(curve.exceedance[mask]), 1
    )
    return float(slope)
