"""Scenario configuration: physical parameters, policies, reproducibility.

Defaults reproduce the reference operating point: a 5 m disc, 50 GHz of
bandwidth around 300 GHz, 0.9 degree beams, 100 dB lumped link budget,
1 Gb/s QoS threshold, 0.2 m user bodies, and 60% transmission probability.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from .capacity import QuadratureSpec
from .channel import AbsorptionModel, ChannelParams, default_absorption
from .relay import STRATEGIES, TRIGGER_BLOCKED_OR_BELOW, TRIGGERS

# Sweep grids for the reference experiments.
DEFAULT_SWEEP_DENSITIES = (0.3, 0.6, 0.9, 1.2, 1.5)       # UE/m^2
DEFAULT_SWEEP_JITTERS = (0.0, 0.05, 0.2)                  # m
CDF_DENSITIES = (0.3, 1.5)                                # UE/m^2
DEFAULT_THRESHOLD_GRID_BPS = tuple(float(t) for t in np.arange(0.0, 60.0e9 + 1.0, 2.5e9))


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything one Monte-Carlo experiment depends on."""

    # Topology
    ue_density: float = 0.3            # UE/m^2
    network_radius_m: float = 5.0
    body_radius_m: float = 0.2
    tx_probability: float = 0.6        # probability a UE transmits this drop

    # Channel
    jitter_std_m: float = 0.0          # pointing jitter; 0 = perfectly aligned
    bandwidth_hz: float = 50e9
    center_frequency_hz: float = 300e9
    link_budget_db: float = 100.0      # lumped Pt*Gt*Gr/N0 in dB
    beamwidth_3db_deg: float = 0.9
    rx_aperture_radius_m: float = 0.05
    absorption: AbsorptionModel = field(default_factory=default_absorption)

    # Service / strategies
    qos_threshold_bps: float = 1e9
    strategies: tuple[str, ...] = STRATEGIES

    # Monte-Carlo controls
    drops: int = 2000
    master_seed: int = 12345
    quadrature: QuadratureSpec = QuadratureSpec()

    # Policy switches
    relay_trigger: str = TRIGGER_BLOCKED_OR_BELOW
    relay_exclusivity: bool = False    # a UE may relay for one pair only
    allow_inactive_relays: bool = True
    half_duplex_factor: bool = False   # apply 1/2 pre-log to relayed paths
    include_outages_in_mean: bool = True

    def __post_init__(self) -> None:
        positive = (
            ("ue_density", self.ue_density),
            ("network_radius_m", self.network_radius_m),
            ("body_radius_m", self.body_radius_m),
            ("bandwidth_hz", self.bandwidth_hz),
            ("center_frequency_hz", self.center_frequency_hz),
            ("beamwidth_3db_deg", self.beamwidth_3db_deg),
            ("rx_aperture_radius_m", self.rx_aperture_radius_m),
            ("qos_threshold_bps", self.qos_threshold_bps),
        )
        for name, value in positive:
            if not value > 0.0:
                raise ValueError(f"{name}: must be > 0, got {value}")
        if not 0.0 <= self.tx_probability <= 1.0:
            raise ValueError(f"tx_probability: must lie in [0, 1], got {self.tx_probability}")
        if self.jitter_std_m < 0.0:
            raise ValueError(f"jitter_std_m: must be >= 0, got {self.jitter_std_m}")
        if not 0.0 < self.beamwidth_3db_deg < 180.0:
            raise ValueError(f"beamwidth_3db_deg: must lie in (0, 180), got {self.beamwidth_3db_deg}")
        if self.drops < 1:
            raise ValueError(f"drops: must be >= 1, got {self.drops}")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed: must be a non-negative 64-bit integer")
        if not self.strategies:
            raise ValueError("strategies: need at least one of " + ", ".join(STRATEGIES))
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ValueError(f"strategies: unknown strategy {s!r}")
        if self.relay_trigger not in TRIGGERS:
            raise ValueError(f"relay_trigger: must be one of {TRIGGERS}, got {self.relay_trigger!r}")
        # ChannelParams construction re-validates band, gain, and absorption coverage.
        self.channel_params()

    @property
    def link_gain(self) -> float:
        """Lumped link budget in linear units."""
        return 10.0 ** (self.link_budget_db / 10.0)

    def channel_params(self) -> ChannelParams:
        return ChannelParams(
            center_frequency_hz=self.center_frequency_hz,
            bandwidth_hz=self.bandwidth_hz,
            link_gain=self.link_gain,
            half_power_beamwidth_rad=float(np.deg2rad(self.beamwidth_3db_deg)),
            jitter_std_m=self.jitter_std_m,
            rx_aperture_radius_m=self.rx_aperture_radius_m,
            absorption=self.absorption,
        )

    def at_cell(self, ue_density: float, jitter_std_m: float) -> "ScenarioConfig":
        """The same scenario at another (density, jitter) sweep cell."""
        return replace(self, ue_density=float(ue_density), jitter_std_m=float(jitter_std_m))


def config_field_names() -> tuple[str, ...]:
    return tuple(f.name for f in fields(ScenarioConfig))
