"""Wideband link capacity: band-integrated Shannon rate of a THz link.

Capacity is the integral of log2(1 + snr_density(f)) across the
transmission band [f_c - B/2, f_c + B/2], evaluated with composite
Simpson quadrature that doubles its panel count until two successive
estimates agree to a relative tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channel import ChannelParams, LIGHT_SPEED_M_S, molecular_absorption

# Integrand-grid elements evaluated per chunk (cache locality + memory cap).
_GRID_CHUNK_ELEMENTS = 1 << 15


@dataclass(frozen=True)
class QuadratureSpec:
    """Adaptive-Simpson controls: initial panels, tolerance, refinement cap."""

    panels: int = 64
    rtol: float = 1e-6
    max_levels: int = 14

    def __post_init__(self) -> None:
        if self.panels < 2 or self.panels % 2 != 0:
            raise ValueError("panel count must be an even integer >= 2")
        if self.rtol <= 0.0:
            raise ValueError("relative tolerance must be positive")
        if self.max_levels < 0:
            raise ValueError("refinement level cap must be >= 0")


class QuadratureError(RuntimeError):
    """Quadrature failed to converge; carries the last two estimates."""

    def __init__(self, message: str, previous, latest):
        super().__init__(message)
        self.estimates = (previous, latest)


def snr_density(params: ChannelParams, f_hz, d_m, pointing_gain):
    """Per-frequency SNR density g * (c/(4 pi f d))^2 * exp(-k(f) d) * gain^2."""
    d = np.asarray(d_m, dtype=float)
    if np.any(d <= 0.0):
        raise ValueError("distance must be positive")
    f = np.asarray(f_hz, dtype=float)
    k = molecular_absorption(params.absorption, f)
    spread = LIGHT_SPEED_M_S / (4.0 * np.pi * f * d)
    out = params.link_gain * spread**2 * np.exp(-np.asarray(k) * d) * np.asarray(pointing_gain) ** 2
    return float(out) if np.ndim(out) == 0 else out


def _simpson(values: np.ndarray, step: float) -> np.ndarray:
    """Composite Simpson sum along the last axis (odd number of samples)."""
    acc = values[..., 0] + values[..., -1]
    acc = acc + 4.0 * values[..., 1:-1:2].sum(axis=-1)
    acc = acc + 2.0 * values[..., 2:-1:2].sum(axis=-1)
    return acc * (step / 3.0)


def adaptive_simpson(fn: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                     quad: QuadratureSpec = QuadratureSpec()):
    """Integrate fn over [lo, hi], doubling panels until successive estimates agree.

    ``fn`` maps a frequency grid (m,) to integrand samples, either (m,) or
    (..., m); integration runs along the last axis. Raises QuadratureError
    when the relative change between the last two doublings still exceeds
    rtol after ``max_levels`` refinements.
    """
    def estimate(panels: int) -> np.ndarray:
        grid = np.linspace(lo, hi, panels + 1)
        vals = np.asarray(fn(grid), dtype=float)
        return _simpson(vals, (hi - lo) / panels)

    panels = quad.panels
    history = [estimate(panels)]
    for _ in range(quad.max_levels):
        panels *= 2
        history.append(estimate(panels))
        if np.all(np.abs(history[-1] - history[-2]) <= quad.rtol * np.abs(history[-1])):
            out = history[-1]
            return out if out.ndim else float(out)
        del history[:-2]
    raise QuadratureError(
        f"no convergence to rtol={quad.rtol} within {quad.max_levels} refinements",
        history[-2] if len(history) > 1 else history[-1], history[-1],
    )


def _log_rate_grid(params: ChannelParams, f_grid: np.ndarray,
                   d: np.ndarray, gain: np.ndarray) -> np.ndarray:
    """log2(1 + snr_density) sampled on (links, frequencies)."""
    k = molecular_absorption(params.absorption, f_grid)
    spread_sq = (LIGHT_SPEED_M_S / (4.0 * np.pi)) ** 2 / (f_grid**2)[None, :]
    snr = (params.link_gain * spread_sq / (d**2)[:, None]
           * np.exp(-np.outer(d, k)) * (gain**2)[:, None])
    return np.log1p(snr) / np.log(2.0)


def link_capacity_batch(params: ChannelParams, d_m, unblocked, pointing_gain,
                        quad: QuadratureSpec = QuadratureSpec()) -> np.ndarray:
    """Capacities in bit/s for many links at once; blocked links get 0.

    All links share one refinement loop: each level doubles the panel
    count, links whose two latest estimates agree to rtol drop out, and a
    link still unconverged after max_levels raises QuadratureError.
    """
    d = np.atleast_1d(np.asarray(d_m, dtype=float))
    gain = np.broadcast_to(np.asarray(pointing_gain, dtype=float), d.shape)
    clear = np.broadcast_to(np.asarray(unblocked, dtype=bool), d.shape)
    if np.any(d <= 0.0):
        raise ValueError("distance must be positive")
    lo, hi = params.band_hz

    caps = np.zeros(d.shape, dtype=float)
    pending = np.flatnonzero(clear)
    if pending.size == 0:
        return caps

    def estimate(ids: np.ndarray, panels: int) -> np.ndarray:
        grid = np.linspace(lo, hi, panels + 1)
        step = (hi - lo) / panels
        # Small chunks keep the (chunk, panels+1) integrand cache-resident.
        chunk = int(np.clip(_GRID_CHUNK_ELEMENTS // (panels + 1), 1, ids.size))
        out = np.empty(ids.size, dtype=float)
        for start in range(0, ids.size, chunk):
            sel = ids[start:start + chunk]
            out[start:start + chunk] = _simpson(
                _log_rate_grid(params, grid, d[sel], gain[sel]), step)
        return out

    panels = quad.panels
    prev = estimate(pending, panels)
    for level in range(quad.max_levels):
        panels *= 2
        cur = estimate(pending, panels)
        done = np.abs(cur - prev) <= quad.rtol * np.abs(cur)
        caps[pending[done]] = cur[done]
        if bool(done.all()):
            pending = pending[:0]
            break
        if level == quad.max_levels - 1:
            raise QuadratureError(
                f"{int((~done).sum())} link(s) unconverged after {quad.max_levels} refinements",
                prev[~done], cur[~done],
            )
        pending = pending[~done]
        prev = cur[~done]
    if pending.size:  # max_levels == 0 leaves everything unchecked
        raise QuadratureError("no refinement budget to confirm convergence",
                              prev, prev)
    return caps


def link_capacity(params: ChannelParams, d_m: float, unblocked, pointing_gain: float,
                  quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Capacity in bit/s of a single link (0 exactly when blocked)."""
    return float(link_capacity_batch(params, [d_m], [bool(unblocked)], [pointing_gain], quad)[0])


@dataclass(frozen=True, slots=True)
class LinkBudget:
    """Frozen per-link state: endpoints, geometry, fading draw, capacity."""

    source: int
    dest: int
    distance_m: float
    unblocked: bool
    pointing_gain: float
    capacity_bps: float

    def __post_init__(self) -> None:
        if not self.unblocked and self.capacity_bps != 0.0:
            raise ValueError("blocked link must carry zero capacity")
        if self.capacity_bps < 0.0:
            raise ValueError("capacity must be >= 0")


def end_to_end_capacity(direct: LinkBudget | None,
                        relayed: tuple[LinkBudget, LinkBudget] | None) -> tuple[float, str]:
    """Capacity of the path the relay stage picked: min of legs, or the direct rate.

    This only evaluates the decode-and-forward bottleneck rule; it does not
    choose between the paths.
    """
    if relayed is not None:
        first, second = relayed
        if first.dest != second.source:
            raise ValueError("relayed legs do not chain: first.dest != second.source")
        return min(first.capacity_bps, second.capacity_bps), "relayed"
    if direct is None:
        raise ValueError("need a direct link or a relayed leg pair")
    return direct.capacity_bps, "direct"
