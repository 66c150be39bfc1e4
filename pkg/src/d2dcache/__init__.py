"""Stochastic-geometry simulator for clustered D2D video caching networks."""

from .config import (ChannelConfig, ContentConfig, ExperimentConfig,
                     NetworkConfig, preset)
from .geometry import ParentProcess, Window
from .mc import MetricEstimate

__all__ = [
    "ChannelConfig", "ContentConfig", "ExperimentConfig", "NetworkConfig",
    "ParentProcess", "Window", "MetricEstimate", "preset",
]
