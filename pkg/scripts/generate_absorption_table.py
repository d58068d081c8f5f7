#!/usr/bin/env python3
"""Regenerate the shipped molecular-absorption table.

The table approximates sea-level absorption (296 K, 1 atm, moderate
humidity) across 270-330 GHz with two pressure-broadened water-vapor
resonances (325.15 and 380.2 GHz) on top of a slowly rising continuum.
Magnitudes are anchored so the window floor sits near 0.01 dB/m around
300 GHz and the 325 GHz line edge reaches a few 0.01 dB/m, which is the
usual order for this transmission window. Swap the file for measured or
line-by-line data when absolute absorption matters.
"""
from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "thznet" / "data" / "absorption_275_325ghz.txt"

# (center [GHz], half-width [GHz], peak k [1/m])
WATER_LINES = (
    (325.15, 3.0, 0.012),
    (380.20, 3.5, 0.060),
)
CONTINUUM_FLOOR = 1.5e-3      # 1/m
CONTINUUM_SLOPE = 6.0e-4      # 1/m over the 270-330 GHz span


def absorption_coefficient(freq_ghz: np.ndarray) -> np.ndarray:
    """k(f) in 1/m for frequencies given in GHz."""
    f = np.asarray(freq_ghz, dtype=float)
    k = CONTINUUM_FLOOR + CONTINUUM_SLOPE * (f - 270.0) / 60.0
    for center, gamma, peak in WATER_LINES:
        k = k + peak * gamma**2 / ((f - center) ** 2 + gamma**2)
    return k


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    ap.add_argument("--f-min-ghz", type=float, default=270.0)
    ap.add_argument("--f-max-ghz", type=float, default=330.0)
    ap.add_argument("--step-ghz", type=float, default=0.25)
    args = ap.parse_args()

    freqs = np.arange(args.f_min_ghz, args.f_max_ghz + args.step_ghz / 2, args.step_ghz)
    ks = absorption_coefficient(freqs)

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w", encoding="utf-8") as fh:
        fh.write("# Molecular absorption coefficient, sea-level standard atmosphere approximation\n")
        fh.write("# (two water-vapor resonances at 325.15/380.2 GHz plus continuum; see scripts/generate_absorption_table.py)\n")
        fh.write("# columns: frequency_Hz k_per_m\n")
        for f_ghz, k in zip(freqs, ks):
            fh.write(f"{f_ghz * 1e9:.6e} {k:.9e}\n")
    print(f"wrote {len(freqs)} rows to {args.out}")


if __name__ == "__main__":
    main()
