"""Default-cascade engines on exposure networks.

Two propagation models over the same filtered networks:

* a Gai & Kapadia (2010)-style capital cascade — every asset holds a capital
  buffer proportional to its price level; an exogenous shock destroys part of
  it; an asset whose buffer falls below its minimum defaults and passes
  ``L[i, j] = max(0, W[i, j] - (K_i - D_i))`` to each neighbor j it is linked
  to, where D_i is the (static) total exposure flowing into i.  Losses within
  an iteration add up, updates are synchronous, defaults are absorbing, and
  every defaulter transmits exactly once, at the step after its default.

* a deterministic influence-threshold recursion on correlation graphs —
  a node defaults as soon as the summed weights from already-defaulted nodes
  exceed its threshold.

The Monte Carlo driver repeats the capital cascade under randomly sized
shocks; per-run generators are derived from (seed, run index) so results are
bit-for-bit reproducible regardless of execution order.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError
from .network import ExposureNetwork, incoming_exposure

DEFAULT_INFLUENCE_THRESHOLD = 0.5


@dataclass(frozen=True)
class CapitalConfig:
    """Capital sizing and shock drawing rules for the capital cascade.

    Capital starts at ``capital_ratio * price``; an asset defaults when it
    drops strictly below ``min_capital_ratio * price``.  Exogenous shocks are
    drawn uniformly from [shock_low, shock_high] and destroy ``s * price`` of
    the target's capital.  A run counts as a systemic failure when strictly
    more than ``systemic_failure_count`` assets end up in default.
    """

    capital_ratio: float = 0.2
    min_capital_ratio: float = 0.1
    shock_low: float = 0.1
    shock_high: float = 0.5
    systemic_failure_count: int = 5

    def __post_init__(self):
        if not 0.0 < self.min_capital_ratio < self.capital_ratio:
            raise DataError(
                "need 0 < min_capital_ratio < capital_ratio, got "
                f"{self.min_capital_ratio} / {self.capital_ratio}"
            )
        if not 0.0 <= self.shock_low < self.shock_high:
            raise DataError(
                f"need 0 <= shock_low < shock_high, got "
                f"{self.shock_low} / {self.shock_high}"
            )
        if self.systemic_failure_count < 0:
            raise DataError("systemic_failure_count must be non-negative")


@dataclass(frozen=True)
class Scenario:
    """Which assets receive the exogenous shock each run.

    kind is one of "general" (one uniformly random asset per run), "single"
    (one named asset), "simultaneous" (several named assets), or "all"
    (every asset).
    """

    kind: str
    targets: tuple[str, ...] = ()

    _KINDS = ("general", "single", "simultaneous", "all")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise DataError(f"unknown scenario kind {self.kind!r}")
        if self.kind == "single" and len(self.targets) != 1:
            raise DataError("single-shock scenario needs exactly one target")
        if self.kind == "simultaneous" and len(self.targets) < 1:
            raise DataError("simultaneous scenario needs at least one target")
        if self.kind in ("general", "all") and self.targets:
            raise DataError(f"{self.kind} scenario takes no targets")

    @classmethod
    def general(cls) -> "Scenario":
        return cls("general")

    @classmethod
    def single(cls, target: str) -> "Scenario":
        return cls("single", (target,))

    @classmethod
    def simultaneous(cls, targets) -> "Scenario":
        return cls("simultaneous", tuple(targets))

    @classmethod
    def all_assets(cls) -> "Scenario":
        return cls("all")

    @property
    def label(self) -> str:
        if self.kind == "single":
            return f"single:{self.targets[0]}"
        if self.kind == "simultaneous":
            return "simultaneous:" + "+".join(self.targets)
        return self.kind


@dataclass
class CascadeState:
    """Mutable snapshot of one cascade run.

    ``history`` holds the default vector after the initial shocks and after
    every propagation iteration that flagged someone new; ``iteration`` is the
    number of such rows minus one.  ``transmitted`` marks assets whose default
    losses have already been passed on.
    """

    capitals: np.ndarray
    defaulted: np.ndarray
    transmitted: np.ndarray
    iteration: int
    history: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def initial(cls, prices, cfg: CapitalConfig) -> "CascadeState":
        prices = np.asarray(prices, dtype=float)
        if (prices <= 0).any():
            raise DataError("prices must be positive to size capital buffers")
        n = prices.shape[0]
        return cls(
            capitals=cfg.capital_ratio * prices,
            defaulted=np.zeros(n, dtype=bool),
            transmitted=np.zeros(n, dtype=bool),
            iteration=0,
            history=[],
        )

    @property
    def n_defaulted(self) -> int:
        return int(self.defaulted.sum())


def apply_shock(state: CascadeState, target: int, s: float, prices,
                cfg: CapitalConfig) -> CascadeState:
    """Destroy ``s * price`` of the target's capital; flag default if it breaches.

    The default test is strict: capital exactly at the minimum survives.
    """
    prices = np.asarray(prices, dtype=float)
    if not 0 <= target < prices.shape[0]:
        raise DataError(f"shock target index {target} out of range")
    if s < 0:
        raise DataError(f"shock size must be non-negative, got {s}")
    capitals = state.capitals.copy()
    capitals[target] -= s * prices[target]
    defaulted = state.defaulted.copy()
    if capitals[target] < cfg.min_capital_ratio * prices[target]:
        defaulted[target] = True
    return replace(state, capitals=capitals, defaulted=defaulted)


def gai_kapadia_step(state: CascadeState, net: ExposureNetwork,
                     incoming: np.ndarray, cfg: CapitalConfig) -> CascadeState:
    """One synchronous propagation iteration.

    Every asset that defaulted since the last step sends
    ``max(0, W[i, j] - (K_i - D_i))`` along each of its outgoing edges; losses
    are summed per receiver and applied at once, then receivers below their
    minimum capital are flagged.  K_i is the sender's capital frozen at its
    moment of default (it can be negative, in which case the transmitted loss
    exceeds the face exposure).  ``incoming`` is the static vector of column
    sums D.
    """
    newly = state.defaulted & ~state.transmitted
    if not newly.any():
        raise DataError("no newly defaulted assets to propagate")
    incoming = np.asarray(incoming, dtype=float)
    k_min = cfg.min_capital_ratio * net.reference_prices

    losses = np.zeros_like(state.capitals)
    for i in np.nonzero(newly)[0]:
        row = net.weights[i]
        edges = row > 0
        if not edges.any():
            continue
        shortfall = state.capitals[i] - incoming[i]
        losses[edges] += np.maximum(0.0, row[edges] - shortfall)

    capitals = state.capitals - losses
    fresh = ~state.defaulted & (capitals < k_min)
    defaulted = state.defaulted | fresh

    base_history = state.history if state.history else [state.defaulted.copy()]
    if fresh.any():
        history = list(base_history) + [defaulted.copy()]
        iteration = state.iteration + 1
    else:
        history = list(base_history)
        iteration = state.iteration
    return CascadeState(
        capitals=capitals,
        defaulted=defaulted,
        transmitted=state.transmitted | newly,
        iteration=iteration,
        history=history,
    )


def run_cascade(initial: CascadeState, net: ExposureNetwork,
                cfg: CapitalConfig) -> CascadeState:
    """Propagate to the fixed point: iterate until nobody new defaults.

    With no initial defaults this returns immediately (0 iterations).  Since
    every counted iteration flags at least one new default the loop runs at
    most n_assets times.
    """
    state = initial
    if not state.history:
        state = replace(state, history=[state.defaulted.copy()])
    incoming = incoming_exposure(net)
    while (state.defaulted & ~state.transmitted).any():
        state = gai_kapadia_step(state, net, incoming, cfg)
    return state


@dataclass
class SimulationReport:
    """Aggregated Monte Carlo outcome for one (scenario, theta) cell."""

    seed: int
    n_runs: int
    theta: float
    scenario: str
    failure_probability: float
    avg_failed_assets: float
    histogram: dict[int, int]
    failed_counts: list[int]

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_runs": self.n_runs,
            "theta": self.theta,
            "scenario": self.scenario,
            "failure_probability": self.failure_probability,
            "avg_failed_assets": self.avg_failed_assets,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
        }


def _run_substream(seed: int, run_index: int) -> np.random.Generator:
    """Independent per-run generator keyed by (seed, run index).

    Keying the SeedSequence with both values gives every run its own stream,
    so a parallel schedule would reproduce the serial results bit-for-bit.
    """
    return np.random.default_rng(np.random.SeedSequence([seed, run_index]))


def monte_carlo(net: ExposureNetwork, cfg: CapitalConfig, scenario: Scenario,
                n_runs: int, seed: int) -> SimulationReport:
    """Repeat shock -> cascade ``n_runs`` times and aggregate failure counts.

    Per run: pick the scenario's targets (the "general" scenario draws one
    uniformly random asset from the run's own substream), hit each with an
    independent Uniform(shock_low, shock_high) shock, cascade to the fixed
    point, and record how many assets ended up defaulted.  The failure
    probability is the fraction of runs with strictly more than
    ``systemic_failure_count`` defaults.
    """
    if n_runs < 1:
        raise DataError(f"n_runs must be at least 1, got {n_runs}")
    n = net.n_assets
    prices = net.reference_prices
    if scenario.kind in ("single", "simultaneous"):
        fixed_targets = [net.index_of(t) for t in scenario.targets]
    elif scenario.kind == "all":
        fixed_targets = list(range(n))
    else:
        fixed_targets = None

    counts = []
    for run_index in range(n_runs):
        rng = _run_substream(seed, run_index)
        if fixed_targets is None:
            targets = [int(rng.integers(0, n))]
        else:
            targets = fixed_targets
        state = CascadeState.initial(prices, cfg)
        for t in targets:
            s = float(rng.uniform(cfg.shock_low, cfg.shock_high))
            state = apply_shock(state, t, s, prices, cfg)
        final = run_cascade(state, net, cfg)
        counts.append(final.n_defaulted)

    counts_arr = np.asarray(counts)
    return SimulationReport(
        seed=seed,
        n_runs=n_runs,
        theta=net.theta,
        scenario=scenario.label,
        failure_probability=float(
            np.mean(counts_arr > cfg.systemic_failure_count)
        ),
        avg_failed_assets=float(counts_arr.mean()),
        histogram=dict(sorted(Counter(counts).items())),
        failed_counts=counts,
    )


# ---------------------------------------------------------------------------
# deterministic influence-threshold engine
# ---------------------------------------------------------------------------

@dataclass
class PropagationResult:
    """Outcome of a deterministic influence cascade."""

    defaulted: np.ndarray
    iteration: int
    history: list[np.ndarray]


def recursion_step(weights: np.ndarray, thresholds, defaults: np.ndarray) -> np.ndarray:
    """One synchronous threshold update: D' = (W @ D > tau) OR D.

    The OR keeps defaults absorbing; with an all-false input nothing fires.
    ``thresholds`` may be a scalar or a per-asset vector.
    """
    weights = np.asarray(weights, dtype=float)
    defaults = np.asarray(defaults, dtype=bool)
    influence = weights @ defaults.astype(float)
    return (influence > np.asarray(thresholds, dtype=float)) | defaults


def deterministic_cascade(
    weights: np.ndarray,
    seed_defaults: np.ndarray,
    influence_threshold: float = DEFAULT_INFLUENCE_THRESHOLD,
) -> PropagationResult:
    """Iterate the threshold recursion from the seed set to its fixed point.

    ``weights`` is a filtered correlation matrix (zero diagonal); a node
    defaults once the summed weights from all currently defaulted nodes
    strictly exceed ``influence_threshold``.  History row 0 is the seed set;
    one row is appended per iteration that flagged someone.
    """
    weights = np.asarray(weights, dtype=float)
    defaults = np.asarray(seed_defaults, dtype=bool).copy()
    if weights.shape != (defaults.size, defaults.size):
        raise DataError(
            f"weights shape {weights.shape} does not match {defaults.size} seeds"
        )
    history = [defaults.copy()]
    iteration = 0
    while True:
        nxt = recursion_step(weights, influence_threshold, defaults)
        if (nxt == defaults).all():
            break
        defaults = nxt
        history.append(defaults.copy())
        iteration += 1
    return PropagationResult(defaulted=defaults, iteration=iteration, history=history)


def export_propagation_heatmap(history: list[np.ndarray], asset_ids: list[str],
                               path) -> None:
    """Write the iteration x asset default grid as CSV (cells are 0/1)."""
    if not history:
        raise DataError("empty propagation history")
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration"] + list(asset_ids))
        for t, row in enumerate(history):
            writer.writerow([t] + [int(v) for v in np.asarray(row, dtype=bool)])
