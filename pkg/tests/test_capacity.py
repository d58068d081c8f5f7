"""Capacity: SNR density, adaptive Simpson quadrature, bottleneck rule."""
import math

import numpy as np
import pytest

from thznet.capacity import (LinkBudget, QuadratureError, QuadratureSpec,
                             adaptive_simpson, end_to_end_capacity,
                             link_capacity, link_capacity_batch, snr_density)
from thznet.channel import AbsorptionModel, ChannelParams, beam_geometry


def params_with(absorption=None, gain=1e10):
    return ChannelParams(center_frequency_hz=300e9, bandwidth_hz=50e9,
                         link_gain=gain, half_power_beamwidth_rad=math.radians(0.9),
                         jitter_std_m=0.0, rx_aperture_radius_m=0.01,
                         absorption=absorption or AbsorptionModel.constant(0.0))


LOSSLESS = params_with()


def trapezoid_reference(params, d, gain, panels=1_000_000):
    """Independent oracle: dense trapezoid integration of log2(1 + snr)."""
    lo, hi = params.band_hz
    f = np.linspace(lo, hi, panels + 1)
    return float(np.trapezoid(np.log2(1.0 + snr_density(params, f, d, gain)), f))


# --------------------------------------------------------------- snr density

def test_snr_density_zero_gain():
    assert snr_density(LOSSLESS, 300e9, 1.0, 0.0) == 0.0
    assert snr_density(LOSSLESS, 312e9, 7.3, 0.0) == 0.0


def test_snr_density_reference_value():
    # g * (c/(4 pi f d))^2 at 100 dB, 300 GHz, 1 m; frozen from an
    # arbitrary-precision evaluation of the closed form
    assert snr_density(LOSSLESS, 300e9, 1.0, 1.0) == pytest.approx(63.238151746038339, rel=1e-12)


def test_snr_density_decreasing_in_frequency():
    f = np.linspace(275e9, 325e9, 64)
    vals = snr_density(LOSSLESS, f, 2.0, 1.0)
    assert np.all(np.diff(vals) < 0.0)


def test_snr_density_rejects_zero_distance():
    with pytest.raises(ValueError):
        snr_density(LOSSLESS, 300e9, 0.0, 1.0)


# ---------------------------------------------------------------- quadrature

def test_constant_integrand_gives_bandwidth_times_rate():
    # log2(1 + snr) == 1 across the band integrates to B exactly
    result = adaptive_simpson(lambda f: np.ones_like(f), 275e9, 325e9)
    assert result == pytest.approx(50e9, rel=1e-12)


def test_blocked_link_has_zero_capacity():
    assert link_capacity(LOSSLESS, 2.0, False, 0.7) == 0.0


def test_quadrature_matches_trapezoid_oracle_at_reference_point():
    params = params_with(absorption=None)
    # default operating point: 2 m, perfectly aligned
    gain = beam_geometry(params, 2.0).capture_fraction
    ours = link_capacity(params, 2.0, True, gain)
    reference = trapezoid_reference(params, 2.0, gain)
    assert ours == pytest.approx(reference, rel=1e-6)


def test_batch_equals_scalar():
    rng = np.random.default_rng(4)
    d = rng.uniform(0.5, 9.0, 32)
    gain = rng.uniform(0.0, 1.0, 32)
    clear = rng.random(32) < 0.7
    batch = link_capacity_batch(LOSSLESS, d, clear, gain)
    for i in range(32):
        assert batch[i] == link_capacity(LOSSLESS, float(d[i]), bool(clear[i]), float(gain[i]))


def test_capacity_monotone_in_distance_and_gain():
    rng = np.random.default_rng(5)
    for _ in range(20):
        d = np.sort(rng.uniform(0.5, 10.0, 8))
        gain = float(rng.uniform(0.1, 1.0))
        caps = link_capacity_batch(LOSSLESS, d, np.ones(8, bool), gain)
        assert np.all(np.diff(caps) < 0.0)
        gains = np.sort(rng.uniform(0.0, 1.0, 8))
        caps_g = link_capacity_batch(LOSSLESS, 3.0 * np.ones(8), np.ones(8, bool), gains)
        assert np.all(np.diff(caps_g) >= 0.0)


def test_capacity_upper_bound():
    # B * log2(1 + g * (c/(4 pi f_lo d))^2 * A0^2) with zero absorption bounds
    # every capacity at that distance
    params = params_with()
    rng = np.random.default_rng(6)
    f_lo = params.band_hz[0]
    for _ in range(25):
        d = float(rng.uniform(0.5, 10.0))
        a0 = float(beam_geometry(params, d).capture_fraction)
        gain = a0 * float(rng.uniform(0.0, 1.0))
        cap = link_capacity(params, d, True, gain)
        bound = params.bandwidth_hz * math.log2(1.0 + snr_density(params, f_lo, d, a0))
        assert cap <= bound * (1.0 + 1e-12)


def test_quadrature_failure_carries_last_two_estimates():
    tight = QuadratureSpec(panels=2, rtol=1e-30, max_levels=2)
    with pytest.raises(QuadratureError) as exc_info:
        link_capacity(LOSSLESS, 2.0, True, 0.5, tight)
    prev, latest = exc_info.value.estimates
    # both are genuine estimates of the same integral
    assert np.all(np.abs(np.asarray(prev) - np.asarray(latest))
                  < 1e-3 * np.abs(np.asarray(latest)))
    with pytest.raises(QuadratureError):
        adaptive_simpson(lambda f: np.log2(1.0 + 1.0 / f), 275e9, 325e9, tight)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(panels=3)
    with pytest.raises(ValueError):
        QuadratureSpec(rtol=0.0)


# ------------------------------------------------------------- end to end

def lb(src, dst, cap, unblocked=True):
    return LinkBudget(source=src, dest=dst, distance_m=1.0, unblocked=unblocked,
                      pointing_gain=0.5 if unblocked else 0.0,
                      capacity_bps=cap if unblocked else 0.0)


def test_min_rule():
    cap, path = end_to_end_capacity(None, (lb(0, 2, 10e9), lb(2, 1, 7e9)))
    assert (cap, path) == (7e9, "relayed")
    cap, _ = end_to_end_capacity(None, (lb(0, 2, 5e9), lb(2, 1, 5e9)))
    assert cap == 5e9


def test_direct_path_passthrough():
    cap, path = end_to_end_capacity(lb(0, 1, 12e9), None)
    assert (cap, path) == (12e9, "direct")


def test_legs_must_chain():
    with pytest.raises(ValueError):
        end_to_end_capacity(None, (lb(0, 2, 10e9), lb(3, 1, 7e9)))


def test_blocked_budget_forces_zero_capacity():
    with pytest.raises(ValueError):
        LinkBudget(source=0, dest=1, distance_m=1.0, unblocked=False,
                   pointing_gain=0.0, capacity_bps=1e9)
