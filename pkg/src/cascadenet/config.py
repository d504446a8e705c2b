"""Run configuration: defaults, JSON round trip, and override resolution.

Config files are flat JSON objects whose keys mirror :class:`RunConfig`
fields.  Resolution order (highest wins): command-line flags, config file,
the ``CASCADENET_SEED`` environment variable (seed only), built-in defaults.
"""

from __future__ import annotations

import datetime as dt
import json
import os
from dataclasses import asdict, dataclass, field, fields

from .cascade import CapitalConfig
from .errors import ConfigError
from .market_data import REFERENCE_PRICE_MODES

ENV_SEED = "CASCADENET_SEED"


@dataclass
class RunConfig:
    input_csv: str | None = None
    date_start: str | None = None
    date_end: str | None = None
    theta_list: list[float] = field(default_factory=lambda: [0.3, 0.5])
    alpha_level: float = 0.95
    capital_ratio: float = 0.2
    min_capital_ratio: float = 0.1
    shock_low: float = 0.1
    shock_high: float = 0.5
    systemic_failure_count: int = 5
    n_runs: int = 1000
    seed: int = 42
    reference_price_mode: str = "mean"
    influence_threshold: float = 0.5
    output_dir: str = "out"

    # -- parsing helpers ---------------------------------------------------

    @property
    def start_date(self) -> dt.date | None:
        return _parse_date("date_start", self.date_start)

    @property
    def end_date(self) -> dt.date | None:
        return _parse_date("date_end", self.date_end)

    def to_capital_config(self) -> CapitalConfig:
        return CapitalConfig(
            capital_ratio=self.capital_ratio,
            min_capital_ratio=self.min_capital_ratio,
            shock_low=self.shock_low,
            shock_high=self.shock_high,
            systemic_failure_count=self.systemic_failure_count,
        )

    def validate(self) -> "RunConfig":
        if not self.theta_list:
            raise ConfigError("theta_list must not be empty")
        if any(t <= 0 for t in self.theta_list):
            raise ConfigError(f"every theta must be positive: {self.theta_list}")
        if not 0.0 < self.alpha_level < 1.0:
            raise ConfigError(f"alpha_level must be in (0, 1): {self.alpha_level}")
        if not 0.0 < self.min_capital_ratio < self.capital_ratio:
            raise ConfigError(
                "need 0 < min_capital_ratio < capital_ratio, got "
                f"{self.min_capital_ratio} / {self.capital_ratio}"
            )
        if not 0.0 <= self.shock_low < self.shock_high:
            raise ConfigError(
                f"need 0 <= shock_low < shock_high, got "
                f"{self.shock_low} / {self.shock_high}"
            )
        if self.systemic_failure_count < 0:
            raise ConfigError("systemic_failure_count must be non-negative")
        if self.n_runs < 1:
            raise ConfigError(f"n_runs must be at least 1: {self.n_runs}")
        if self.influence_threshold <= 0:
            raise ConfigError(
                f"influence_threshold must be positive: {self.influence_threshold}"
            )
        if self.reference_price_mode not in REFERENCE_PRICE_MODES:
            raise ConfigError(
                f"reference_price_mode must be one of "
                f"{', '.join(REFERENCE_PRICE_MODES)}: {self.reference_price_mode!r}"
            )
        start, end = self.start_date, self.end_date
        if start is not None and end is not None and start >= end:
            raise ConfigError(
                f"date_start must precede date_end: {self.date_start} vs {self.date_end}"
            )
        return self

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(self.to_dict(), indent=2, sort_keys=True))
            fh.write("\n")

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        return cls(**_read_config_file(path)).validate()


def _parse_date(name: str, value: str | None) -> dt.date | None:
    if value is None:
        return None
    try:
        return dt.date.fromisoformat(value)
    except ValueError:
        raise ConfigError(f"{name}: malformed ISO date {value!r}") from None


def _read_config_file(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a flat JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys: {', '.join(unknown)}")
    return data


def resolve_config(config_path=None, overrides: dict | None = None,
                   env: dict | None = None) -> RunConfig:
    """Merge defaults, an optional config file, the env seed, and flag overrides.

    ``overrides`` maps RunConfig field names to values; None values are
    treated as "flag not given".  The environment seed applies only when
    neither a flag nor the file pinned one.
    """
    env = os.environ if env is None else env
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    unknown = sorted(set(overrides) - {f.name for f in fields(RunConfig)})
    if unknown:
        raise ConfigError(f"unknown config overrides: {', '.join(unknown)}")

    file_data = _read_config_file(config_path) if config_path else {}
    merged = RunConfig().to_dict()
    merged.update(file_data)

    if "seed" not in overrides and "seed" not in file_data:
        env_seed = env.get(ENV_SEED)
        if env_seed is not None:
            try:
                merged["seed"] = int(env_seed)
            except ValueError:
                raise ConfigError(
                    f"{ENV_SEED} must be an integer, got {env_seed!r}"
                ) from None

    merged.update(overrides)
    return RunConfig(**merged).validate()
