"""Experiment configuration.

Defaults describe the reference mission: 33 working
areas of 100m x 100m with 3 scouts each, 6 connecting stripes with 2
archivists each, 4 monitoring quadrants with 1 supervisor each.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

CONFIG_ENV_VAR = "SURVSIM_CONFIG"

TECHNIQUES = ("br", "fl", "brcbr", "brclfl", "adlh", "adfh")
# techniques in the default sweep; plain flooding is available but left out
SWEEP_TECHNIQUES = ("br", "brcbr", "brclfl", "adlh", "adfh")
MODELS = (1, 2, 3)
AREAS = ("large", "small")


class ConfigError(ValueError):
    """Invalid configuration values."""


@dataclass(frozen=True)
class RadioConfig:
    tx_range: float = 250.0  # m
    path_loss_exponent: float = 3.0
    shadowing_sigma_db: float = 6.0
    bandwidth: float = 11e6  # bit/s
    # None -> bandwidth/8 bytes per second; math.inf disables congestion
    per_tick_node_budget: float | None = None

    def __post_init__(self):
        for name in ("tx_range", "path_loss_exponent", "shadowing_sigma_db", "bandwidth"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"radio.{name} must be positive")
        if self.per_tick_node_budget is not None and not self.per_tick_node_budget > 0:
            raise ConfigError("radio.per_tick_node_budget must be positive")

    def node_budget(self, tick: float = 1.0) -> float:
        if self.per_tick_node_budget is not None:
            return self.per_tick_node_budget
        return self.bandwidth / 8.0 * tick


@dataclass(frozen=True)
class AreaPreset:
    """Operation-area dependent sizes."""
    side: float  # operation area is side x side meters

    def __post_init__(self):
        if not self.side > 0:
            raise ConfigError("area side must be positive")


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to lay out one mission (one operation area)."""
    width: float = 5000.0
    height: float = 5000.0
    working_areas: int = 33
    working_size: float = 100.0
    scouts_per_area: int = 3
    scout_speed: tuple[float, float] = (1.0, 5.0)
    vertical_stripes: int = 3
    horizontal_stripes: int = 3
    stripe_width: float = 50.0
    archivists_per_area: int = 2
    archivist_speed: tuple[float, float] = (5.0, 10.0)
    monitoring_areas: int = 4
    supervisors_per_area: int = 1
    supervisor_speed: tuple[float, float] = (10.0, 15.0)
    placement_attempts: int = 10_000

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ConfigError("operation area dimensions must be positive")
        if not self.working_size > 0 or not self.stripe_width > 0:
            raise ConfigError("area sizes must be positive")
        if self.working_size > min(self.width, self.height):
            raise ConfigError("working area larger than operation area")
        counts = {
            "working_areas": self.working_areas,
            "scouts_per_area": self.scouts_per_area,
            "vertical_stripes": self.vertical_stripes,
            "horizontal_stripes": self.horizontal_stripes,
            "archivists_per_area": self.archivists_per_area,
            "monitoring_areas": self.monitoring_areas,
            "supervisors_per_area": self.supervisors_per_area,
        }
        for name, value in counts.items():
            if value < 0:
                raise ConfigError(f"{name} must be non-negative, got {value}")
        if self.monitoring_areas < 1:
            raise ConfigError("at least one monitoring area is required")
        for name in ("scout_speed", "archivist_speed", "supervisor_speed"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise ConfigError(f"{name} must satisfy 0 < min <= max")
        if self.placement_attempts < 1:
            raise ConfigError("placement_attempts must be >= 1")

    @property
    def n_robots(self) -> int:
        stripes = self.vertical_stripes + self.horizontal_stripes
        return (self.working_areas * self.scouts_per_area
                + stripes * self.archivists_per_area
                + self.monitoring_areas * self.supervisors_per_area)


@dataclass(frozen=True)
class ProtocolConfig:
    data_size: int = 500  # bytes per data item
    hello_size: int = 2000  # bytes; "a few KBytes"
    creation_period: tuple[float, float] = (3.0, 7.0)
    hello_period: tuple[float, float] = (8.0, 12.0)
    surv_requirements: tuple[float, ...] = (1.0, 0.75, 0.5)
    ttl_full: int = 10
    ttl_limited: int = 3
    digest_size: int = 10
    staleness: float = 15.0

    def __post_init__(self):
        if self.data_size <= 0 or self.hello_size <= 0:
            raise ConfigError("message sizes must be positive")
        for name in ("creation_period", "hello_period"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise ConfigError(f"{name} must satisfy 0 < min <= max")
        if not self.surv_requirements or any(not 0 <= sr <= 1 for sr in self.surv_requirements):
            raise ConfigError("survivability requirements must lie in [0, 1]")
        if self.ttl_full < 1 or self.ttl_limited < 1:
            raise ConfigError("TTLs must be >= 1")
        if self.digest_size < 0 or self.staleness <= 0:
            raise ConfigError("digest_size >= 0 and staleness > 0 required")


@dataclass(frozen=True)
class TimingConfig:
    duration: float = 1000.0
    tick: float = 1.0
    warmup: float = 100.0
    clustered_window: float = 0.3  # clustered failures happen in the last 30%

    def __post_init__(self):
        if self.duration < 0 or self.tick <= 0 or self.warmup < 0:
            raise ConfigError("invalid timing values")
        if not 0 < self.clustered_window <= 1:
            raise ConfigError("clustered_window must be in (0, 1]")


def _default_presets() -> dict[str, AreaPreset]:
    return {"large": AreaPreset(5000.0), "small": AreaPreset(2000.0)}


@dataclass(frozen=True)
class ExperimentConfig:
    areas: dict[str, AreaPreset] = field(default_factory=_default_presets)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    radio: RadioConfig = field(default_factory=RadioConfig)
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    timing: TimingConfig = field(default_factory=TimingConfig)
    techniques: tuple[str, ...] = SWEEP_TECHNIQUES
    models: tuple[int, ...] = MODELS
    rates: tuple[float, ...] = tuple(round(0.1 * i, 1) for i in range(10))
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    area_names: tuple[str, ...] = AREAS
    output_dir: str = "out"

    def __post_init__(self):
        for t in self.techniques:
            if t not in TECHNIQUES:
                raise ConfigError(f"unknown technique {t!r}")
        for m in self.models:
            if m not in MODELS:
                raise ConfigError(f"unknown failure model {m!r}")
        for r in self.rates:
            if not 0 <= r <= 1:
                raise ConfigError(f"failure rate {r} outside [0, 1]")
        for a in self.area_names:
            if a not in self.areas:
                raise ConfigError(f"unknown area preset {a!r}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")

    def scenario_config(self, area: str) -> ScenarioConfig:
        """Default scenario resized to one operation-area preset."""
        try:
            preset = self.areas[area]
        except KeyError:
            raise ConfigError(f"unknown area preset {area!r}") from None
        return dataclasses.replace(self.scenario, width=preset.side, height=preset.side)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


_SECTIONS = {
    "scenario": ScenarioConfig,
    "radio": RadioConfig,
    "protocol": ProtocolConfig,
    "timing": TimingConfig,
}


def _build(cls, data: dict[str, Any]):
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"unknown keys for {cls.__name__}: {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        # JSON has no tuples; everything list-valued here is a tuple field
        kwargs[key] = tuple(value) if isinstance(value, list) else value
    return cls(**kwargs)


def config_from_dict(data: dict[str, Any]) -> ExperimentConfig:
    data = dict(data)
    kwargs: dict[str, Any] = {}
    for name, cls in _SECTIONS.items():
        if name in data:
            kwargs[name] = _build(cls, data.pop(name))
    if "areas" in data:
        kwargs["areas"] = {k: _build(AreaPreset, v) for k, v in data.pop("areas").items()}
    top = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(data) - top
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    for key, value in data.items():
        kwargs[key] = tuple(value) if isinstance(value, list) else value
    return ExperimentConfig(**kwargs)


def load_config(path: str | os.PathLike | None = None) -> ExperimentConfig:
    """Load a JSON config; falls back to $SURVSIM_CONFIG, then to defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return ExperimentConfig()
    with open(Path(path)) as fh:
        return config_from_dict(json.load(fh))


def dump_config(config: ExperimentConfig, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
