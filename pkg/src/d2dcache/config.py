"""Experiment configuration tree, JSON round-tripping, and named presets."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field

from .channel import RAYLEIGH_POWER_LAW, WINNER_LOGNORMAL, ChannelConfig
from .content import ContentConfig
from .geometry import MATERN_II, TRANSLATED_GRID, ParentProcess


class ConfigError(ValueError):
    """Malformed experiment configuration."""


@dataclass(frozen=True)
class NetworkConfig:
    """All model parameters for one experiment point."""

    parent: ParentProcess = field(default_factory=ParentProcess)
    r_c: float = 50.0               # cluster radius (m)
    lambda_u: float = 0.012         # caching-user intensity (1/m^2)
    lambda_r: float = 0.003         # requesting-user intensity (1/m^2)
    content: ContentConfig = field(default_factory=ContentConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    epsilon: float = 0.05           # slot-rounding parameter, 0 <= eps <= 1
    n_m_max: int | None = None      # match cap; None -> auto power of two
    rho_sim_factor: float = 40.0    # interference truncation = factor * delta
    noise_floor: float = 0.0        # additive noise hook, off by default

    def __post_init__(self):
        if self.r_c <= 0:
            raise ConfigError("r_c must be positive")
        if self.parent.delta < 2.0 * self.r_c - 1e-9:
            raise ConfigError("clearance delta must be >= 2*r_c")
        if self.lambda_u < 0 or self.lambda_r < 0:
            raise ConfigError("user intensities must be nonnegative")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon must lie in [0, 1]")
        if self.n_m_max is not None and (self.n_m_max < 1
                                         or self.n_m_max & (self.n_m_max - 1)):
            raise ConfigError("n_m_max must be a power of two")

    @property
    def mean_cachers(self) -> float:
        return self.lambda_u * math.pi * self.r_c ** 2

    @property
    def mean_requests(self) -> float:
        return self.lambda_r * math.pi * self.r_c ** 2

    @property
    def parent_density(self) -> float:
        return self.parent.density

    @property
    def coverage(self) -> float:
        """Fraction of the plane covered by clusters, lambda_p |B(0,R_c)|."""
        return self.parent_density * math.pi * self.r_c ** 2

    @property
    def rho_sim(self) -> float:
        return self.rho_sim_factor * self.parent.delta


@dataclass(frozen=True)
class LtCompareConfig:
    eta_min: float = 1e5
    eta_max: float = 1e9
    n_eta: int = 10
    d_values: tuple[float, ...] = (0.0, 35.0)
    n1: int = 8


@dataclass(frozen=True)
class RateSweepConfig:
    rate_min: float = 2e-3
    rate_max: float = 1.0
    n_rates: int = 16


@dataclass(frozen=True)
class TradeoffGridConfig:
    """Axes of the exhaustive search plus the constraint grids."""

    rc_min: float = 25.0
    rc_max: float = 150.0
    n_rc: int = 12
    rate_min: float = 1e-4
    rate_max: float = 1.0
    n_rates: int = 12
    lam_min: float = 1e-5
    lam_max: float = 1e-2
    n_lam: int = 12
    factor_min: float = 1.0       # delta = 2 * r_c * factor, so delta >= 2 r_c
    factor_max: float = 3.0
    n_factors: int = 12
    rate_floors: tuple[float, ...] = (0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4)
    density_floors: tuple[float, ...] = (3e-6, 1e-5, 3e-5, 5e-5)
    local_floors: tuple[float, ...] = tuple(round(0.05 * k, 2) for k in range(20))
    fixed_rates: tuple[float, ...] = (0.048, 0.09, 0.24)


@dataclass(frozen=True)
class ExperimentConfig:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    seed: int = 0
    replicates: int = 2000
    lt_compare: LtCompareConfig = field(default_factory=LtCompareConfig)
    rate_sweep: RateSweepConfig = field(default_factory=RateSweepConfig)
    tradeoff: TradeoffGridConfig = field(default_factory=TradeoffGridConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _build(cls, data: dict, path: str):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(f"unknown key {path}{key}")
        ftype = fields[key].type
        if isinstance(value, dict):
            sub = _NESTED.get((cls, key))
            if sub is None:
                raise ConfigError(f"{path}{key} does not take a table")
            kwargs[key] = _build(sub, value, f"{path}{key}.")
        elif isinstance(value, list):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {path.rstrip('.') or cls.__name__}: {exc}") from exc


_NESTED = {
    (ExperimentConfig, "network"): NetworkConfig,
    (ExperimentConfig, "lt_compare"): LtCompareConfig,
    (ExperimentConfig, "rate_sweep"): RateSweepConfig,
    (ExperimentConfig, "tradeoff"): TradeoffGridConfig,
    (NetworkConfig, "parent"): ParentProcess,
    (NetworkConfig, "content"): ContentConfig,
    (NetworkConfig, "channel"): ChannelConfig,
}


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a key-value tree")
    return _build(ExperimentConfig, data, "")


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(data)


def apply_overrides(cfg: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    """Apply dotted-path overrides such as network.content.cache_size=10."""
    data = cfg.to_dict()
    for dotted, value in overrides.items():
        node = data
        parts = dotted.split(".")
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"unknown override path {dotted}")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(f"unknown override path {dotted}")
        node[parts[-1]] = value
    return config_from_dict(data)


# ---------------------------------------------------------------------------
# Named presets carrying each figure's caption parameters. Values the caption
# leaves open (Matern proposal intensity for fig4, its library) fall back to
# the body-text defaults.

def _rayleigh() -> ChannelConfig:
    return ChannelConfig(kind=RAYLEIGH_POWER_LAW, alpha=4.0, c_tilde=1.0, tx_power=1.0)


def _winner() -> ChannelConfig:
    return ChannelConfig(kind=WINNER_LOGNORMAL)


def _fig4() -> ExperimentConfig:
    # The caption pins the densities and eps but not the library; this size
    # puts the slot-count mode at 8, the regime the LT study describes.
    net = NetworkConfig(
        parent=ParentProcess(MATERN_II, 2e-4, 100.0), r_c=50.0,
        lambda_u=0.072, lambda_r=0.018,
        content=ContentConfig(400_000, 6, 0.6), channel=_rayleigh(), epsilon=0.5)
    return ExperimentConfig(network=net, replicates=2000)


def _tradeoff_base(library: int) -> ExperimentConfig:
    net = NetworkConfig(
        parent=ParentProcess(MATERN_II, 2e-4, 100.0), r_c=50.0,
        lambda_u=0.012, lambda_r=0.003,
        content=ContentConfig(library, 6, 0.6), channel=_rayleigh(), epsilon=0.05)
    return ExperimentConfig(network=net, replicates=2000)


def _service_comparison(parent: ParentProcess, channel: ChannelConfig,
                        cache_size: int, epsilon: float) -> ExperimentConfig:
    net = NetworkConfig(
        parent=parent, r_c=20.0, lambda_u=0.0278, lambda_r=0.0278,
        content=ContentConfig(300, cache_size, 0.4), channel=channel,
        epsilon=epsilon)
    return ExperimentConfig(network=net, replicates=2000,
                            rate_sweep=RateSweepConfig(2e-3, 1.0, 16))


PRESETS = {
    "fig4": _fig4,
    "fig5": lambda: _tradeoff_base(500),
    "fig6": lambda: _tradeoff_base(500),
    "fig7": lambda: _tradeoff_base(500),
    "fig8-matern-winner": lambda: _service_comparison(
        ParentProcess(MATERN_II, 2e-4, 40.0), _winner(), 10, 0.0),
    "fig8-matern-rayleigh": lambda: _service_comparison(
        ParentProcess(MATERN_II, 2e-4, 40.0), _rayleigh(), 10, 0.1),
    "fig9-grid-winner": lambda: _service_comparison(
        ParentProcess(TRANSLATED_GRID, 2e-4, 50.0), _winner(), 10, 0.0),
    "fig9-grid-rayleigh": lambda: _service_comparison(
        ParentProcess(TRANSLATED_GRID, 2e-4, 50.0), _rayleigh(), 10, 0.1),
}


def preset(name: str) -> ExperimentConfig:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from "
                          f"{sorted(PRESETS)}") from None
    return factory()
