"""THz link channel: spreading + molecular absorption, and misalignment fading.

The deterministic amplitude gain of a link at frequency ``f`` and distance
``d`` is

    (c / (4 pi f d)) * sqrt(Gt * Gr) * exp(-k(f) * d / 2)

with ``k(f)`` the molecular absorption coefficient. Antenna misalignment is
a multiplicative gain A0 * exp(-2 rho^2 / R_eq^2) driven by a Rayleigh
radial pointing error ``rho``; A0 and R_eq follow the circular-aperture
Gaussian-beam collection model.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.constants import c as LIGHT_SPEED_M_S
from scipy.special import erf

DEFAULT_TABLE_RESOURCE = "absorption_275_325ghz.txt"


@dataclass(frozen=True)
class AbsorptionModel:
    """Molecular absorption coefficient k(f), constant or tabulated.

    Table mode interpolates linearly between knots and refuses to
    extrapolate outside the tabulated range.
    """

    mode: str                                  # "constant" | "table"
    k_const: float = 0.0                       # 1/m, constant mode
    frequencies_hz: np.ndarray | None = None   # sorted knots, table mode
    k_per_m: np.ndarray | None = None          # values at the knots
    source: str | None = None                  # provenance label for manifests

    def __post_init__(self) -> None:
        if self.mode == "constant":
            if self.k_const < 0.0:
                raise ValueError("absorption coefficient must be >= 0")
        elif self.mode == "table":
            freqs = np.asarray(self.frequencies_hz, dtype=float).reshape(-1)
            ks = np.asarray(self.k_per_m, dtype=float).reshape(-1)
            if freqs.size < 2 or freqs.size != ks.size:
                raise ValueError("absorption table needs matching frequency/value columns with >= 2 rows")
            if not np.all(np.diff(freqs) > 0.0):
                raise ValueError("absorption table frequencies must be strictly increasing")
            if np.any(ks < 0.0):
                raise ValueError("absorption coefficients must be >= 0")
            freqs.setflags(write=False)
            ks.setflags(write=False)
            object.__setattr__(self, "frequencies_hz", freqs)
            object.__setattr__(self, "k_per_m", ks)
        else:
            raise ValueError(f"unknown absorption mode {self.mode!r}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AbsorptionModel):
            return NotImplemented
        if self.mode != other.mode:
            return False
        if self.mode == "constant":
            return self.k_const == other.k_const
        return (np.array_equal(self.frequencies_hz, other.frequencies_hz)
                and np.array_equal(self.k_per_m, other.k_per_m))

    @classmethod
    def constant(cls, k_per_m: float) -> "AbsorptionModel":
        return cls(mode="constant", k_const=float(k_per_m), source=f"constant:{float(k_per_m)!r}")

    @classmethod
    def from_arrays(cls, frequencies_hz, k_per_m, source: str | None = None) -> "AbsorptionModel":
        return cls(mode="table", frequencies_hz=np.asarray(frequencies_hz, dtype=float),
                   k_per_m=np.asarray(k_per_m, dtype=float), source=source)

    @classmethod
    def from_file(cls, path) -> "AbsorptionModel":
        """Load a two-column 'frequency_Hz k_per_m' text table ('#' comments)."""
        data = np.loadtxt(Path(path), comments="#", dtype=float)
        if data.ndim != 2 or data.shape[1] != 2:
            raise ValueError(f"{path}: expected two whitespace-separated columns")
        return cls.from_arrays(data[:, 0], data[:, 1], source=str(path))

    def coverage_hz(self) -> tuple[float, float]:
        if self.mode == "constant":
            return 0.0, np.inf
        return float(self.frequencies_hz[0]), float(self.frequencies_hz[-1])


@functools.lru_cache(maxsize=1)
def default_absorption() -> AbsorptionModel:
    """The shipped standard-atmosphere table (275-325 GHz band covered)."""
    ref = resources.files("thznet.data").joinpath(DEFAULT_TABLE_RESOURCE)
    with resources.as_file(ref) as path:
        model = AbsorptionModel.from_file(path)
    return AbsorptionModel.from_arrays(model.frequencies_hz, model.k_per_m,
                                       source=f"builtin:{DEFAULT_TABLE_RESOURCE}")


def molecular_absorption(model: AbsorptionModel, f_hz):
    """k(f) in 1/m; scalar in, scalar out, array in, array out.

    Table mode interpolates linearly and raises for frequencies outside
    the tabulated coverage (no extrapolation).
    """
    f = np.asarray(f_hz, dtype=float)
    if model.mode == "constant":
        out = np.broadcast_to(np.float64(model.k_const), f.shape).copy()
        return float(out) if f.ndim == 0 else out
    lo, hi = model.coverage_hz()
    if np.any(f < lo) or np.any(f > hi):
        raise ValueError(f"frequency outside absorption table coverage [{lo}, {hi}] Hz")
    out = np.interp(f, model.frequencies_hz, model.k_per_m)
    return float(out) if f.ndim == 0 else out


@dataclass(frozen=True)
class ChannelParams:
    """Physical link parameters shared by all links of a scenario."""

    center_frequency_hz: float        # f_c
    bandwidth_hz: float               # B, band is [f_c - B/2, f_c + B/2]
    link_gain: float                  # lumped linear budget Pt*Gt*Gr/N0
    half_power_beamwidth_rad: float   # full 3 dB beamwidth
    jitter_std_m: float               # pointing-jitter standard deviation
    rx_aperture_radius_m: float       # effective RX aperture radius
    absorption: AbsorptionModel

    def __post_init__(self) -> None:
        if self.center_frequency_hz <= 0.0 or self.bandwidth_hz <= 0.0:
            raise ValueError("center frequency and bandwidth must be positive")
        if self.center_frequency_hz - self.bandwidth_hz / 2.0 <= 0.0:
            raise ValueError("band edge f_c - B/2 must stay positive")
        if self.link_gain <= 0.0:
            raise ValueError("link gain must be positive (linear units)")
        if not 0.0 < self.half_power_beamwidth_rad < np.pi:
            raise ValueError("half-power beamwidth must lie in (0, pi) rad")
        if self.jitter_std_m < 0.0:
            raise ValueError("jitter standard deviation must be >= 0")
        if self.rx_aperture_radius_m <= 0.0:
            raise ValueError("aperture radius must be positive")
        lo, hi = self.absorption.coverage_hz()
        if self.band_hz[0] < lo or self.band_hz[1] > hi:
            raise ValueError("absorption model does not cover the transmission band")

    @property
    def band_hz(self) -> tuple[float, float]:
        half = self.bandwidth_hz / 2.0
        return self.center_frequency_hz - half, self.center_frequency_hz + half


def _spreading_amplitude(light_speed: float, f_hz, d_m):
    return light_speed / (4.0 * np.pi * np.asarray(f_hz, dtype=float) * np.asarray(d_m, dtype=float))


def path_gain(params: ChannelParams, f_hz, d_m, tx_gain: float = 1.0, rx_gain: float = 1.0):
    """Deterministic amplitude gain of the link at frequency f and distance d.

    The scenario folds antenna gains into the lumped link budget, so the
    defaults tx_gain = rx_gain = 1 are what the simulator uses; the explicit
    arguments exist for unit-level checks.
    """
    d = np.asarray(d_m, dtype=float)
    if np.any(d <= 0.0):
        raise ValueError("distance must be positive")
    k = molecular_absorption(params.absorption, f_hz)
    out = (_spreading_amplitude(LIGHT_SPEED_M_S, f_hz, d)
           * np.sqrt(tx_gain * rx_gain) * np.exp(-0.5 * np.asarray(k) * d))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class BeamGeometry:
    """Gaussian-beam collection geometry of one link (fields broadcast over d).

    capture_fraction is the power fraction collected at zero pointing
    offset; equivalent_radius_m sets how fast the collected power decays
    with radial offset.
    """

    capture_fraction: np.ndarray | float      # A0 in (0, 1]
    equivalent_radius_m: np.ndarray | float   # R_eq
    beam_radius_m: np.ndarray | float         # beam radius at the RX plane
    rx_aperture_radius_m: float


def beam_geometry(params: ChannelParams, d_m) -> BeamGeometry:
    """Collection fraction and equivalent beam radius at distance d.

    Beam radius grows as d * tan(theta_3dB / 2); with v =
    sqrt(pi/2) * a / w_d the collected fraction is erf(v)^2 and
    R_eq^2 = w_d^2 * sqrt(pi) * erf(v) / (2 v exp(-v^2)).
    """
    d = np.asarray(d_m, dtype=float)
    if np.any(d <= 0.0):
        raise ValueError("distance must be positive")
    w_d = d * np.tan(params.half_power_beamwidth_rad / 2.0)
    v = np.sqrt(np.pi / 2.0) * params.rx_aperture_radius_m / w_d
    erf_v = erf(v)
    a0 = erf_v**2
    # exp(v^2) overflows once the aperture dwarfs the beam (v ~ 27); the
    # limit R_eq -> inf is correct there: collection is offset-insensitive.
    with np.errstate(over="ignore"):
        req_sq = w_d**2 * np.sqrt(np.pi) * erf_v * np.exp(v**2) / (2.0 * v)
    req = np.sqrt(req_sq)
    if d.ndim == 0:
        return BeamGeometry(float(a0), float(req), float(w_d), params.rx_aperture_radius_m)
    return BeamGeometry(a0, req, w_d, params.rx_aperture_radius_m)


def pointing_gain(geo: BeamGeometry, rho_m):
    """Misalignment amplitude gain A0 * exp(-2 rho^2 / R_eq^2)."""
    out = geo.capture_fraction * np.exp(
        -2.0 * np.asarray(rho_m, dtype=float) ** 2 / np.asarray(geo.equivalent_radius_m) ** 2
    )
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class MisalignmentSample:
    """Radial pointing error and the gain it induces."""

    rho_m: np.ndarray | float
    gain: np.ndarray | float


def sample_misalignment(params: ChannelParams, geo: BeamGeometry,
                        rng: np.random.Generator, size=None) -> MisalignmentSample:
    """Draw Rayleigh(jitter_std) pointing errors and the resulting gains.

    Zero jitter is the perfectly aligned case: rho = 0 and the gain equals
    the capture fraction exactly.
    """
    if params.jitter_std_m == 0.0:
        rho = np.zeros(size) if size is not None else 0.0
        gain = np.broadcast_to(geo.capture_fraction, np.shape(rho)).copy() if size is not None \
            else float(geo.capture_fraction)
        return MisalignmentSample(rho_m=rho, gain=gain)
    rho = rng.rayleigh(scale=params.jitter_std_m, size=size)
    return MisalignmentSample(rho_m=rho, gain=pointing_gain(geo, rho))
