"""Command-line front end: scenario files in, plot-ready CSV tables out.

Subcommands: ``run`` (single cell), ``sweep`` (density x jitter grid),
``figure2`` (mean throughput vs density per jitter level and strategy),
``figure3`` (capacity-CDF tables at the reference densities), and
``validate`` (parse the scenario and exit). No plotting here: the CSVs are
the interface to whatever renders them.
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime
import json
import os
import sys
from pathlib import Path

import yaml

from . import __version__
from .capacity import QuadratureSpec
from .channel import AbsorptionModel, default_absorption
from .config import (CDF_DENSITIES, DEFAULT_SWEEP_DENSITIES, DEFAULT_SWEEP_JITTERS,
                     DEFAULT_THRESHOLD_GRID_BPS, ScenarioConfig, config_field_names)
from .simulation import CellResult, sweep as run_sweep

THREADS_ENV_VAR = "THZNET_THREADS"

MEANS_HEADER = ("lambda", "sigma_s", "strategy", "mean_throughput_bps",
                "stderr_bps", "n_samples", "drops_ok", "drops_failed")
FIGURE2_HEADER = ("lambda", "sigma_s", "strategy", "mean_throughput_bps", "stderr_bps")
FIGURE3_HEADER = ("lambda", "sigma_s", "strategy", "C_thr_bps", "P_C")


class ScenarioError(ValueError):
    """Scenario file rejected; carries one message per violation."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = tuple(problems)


@dataclasses.dataclass(frozen=True)
class SweepSpec:
    """Sweep lists and output settings carried by a scenario file."""

    ue_density_values: tuple[float, ...] = DEFAULT_SWEEP_DENSITIES
    jitter_std_values: tuple[float, ...] = DEFAULT_SWEEP_JITTERS
    threshold_grid_bps: tuple[float, ...] = DEFAULT_THRESHOLD_GRID_BPS
    output_dir: str | None = None


def _parse_absorption(node, problems: list[str]) -> AbsorptionModel | None:
    if not isinstance(node, dict):
        problems.append("absorption: expected a mapping with a 'mode' key")
        return None
    known = {"mode", "k_per_m", "path"}
    for key in node:
        if key not in known:
            problems.append(f"absorption.{key}: unknown key")
    mode = node.get("mode")
    try:
        if mode == "constant":
            return AbsorptionModel.constant(float(node.get("k_per_m", 0.0)))
        if mode == "table":
            path = node.get("path")
            return AbsorptionModel.from_file(path) if path else default_absorption()
        problems.append(f"absorption.mode: must be 'constant' or 'table', got {mode!r}")
    except (OSError, ValueError) as exc:
        problems.append(f"absorption: {exc}")
    return None


def _parse_quadrature(node, problems: list[str]) -> QuadratureSpec | None:
    if not isinstance(node, dict):
        problems.append("quadrature: expected a mapping")
        return None
    known = {"panels", "rtol", "max_levels"}
    for key in node:
        if key not in known:
            problems.append(f"quadrature.{key}: unknown key")
    try:
        return QuadratureSpec(
            panels=int(node.get("panels", QuadratureSpec.panels)),
            rtol=float(node.get("rtol", QuadratureSpec.rtol)),
            max_levels=int(node.get("max_levels", QuadratureSpec.max_levels)),
        )
    except (TypeError, ValueError) as exc:
        problems.append(f"quadrature: {exc}")
        return None


_SWEEP_KEYS = {"ue_density_values", "jitter_std_values"}
_TOP_EXTRA_KEYS = {"sweep", "threshold_grid_bps", "output_dir"}

_FLOAT_FIELDS = {
    "ue_density", "network_radius_m", "body_radius_m", "tx_probability",
    "jitter_std_m", "bandwidth_hz", "center_frequency_hz", "link_budget_db",
    "beamwidth_3db_deg", "rx_aperture_radius_m", "qos_threshold_bps",
}
_INT_FIELDS = {"drops", "master_seed"}
_BOOL_FIELDS = {"relay_exclusivity", "allow_inactive_relays", "half_duplex_factor",
                "include_outages_in_mean"}


def parse_scenario(path) -> tuple[ScenarioConfig, SweepSpec]:
    """Load and validate a scenario file; an empty file means all defaults.

    Unknown keys are rejected; every violation is reported with its key
    path and reason.
    """
    raw = Path(path).read_text(encoding="utf-8")
    try:
        doc = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ScenarioError([f"malformed scenario file: {exc}"]) from exc
    return scenario_from_dict(doc)


def scenario_from_dict(doc) -> tuple[ScenarioConfig, SweepSpec]:
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ScenarioError(["scenario file must contain a key/value mapping"])

    problems: list[str] = []
    overrides: dict[str, object] = {}
    field_names = set(config_field_names())

    for key, value in doc.items():
        if key in _TOP_EXTRA_KEYS:
            continue
        if key not in field_names:
            problems.append(f"{key}: unknown key")
            continue
        try:
            if key in _FLOAT_FIELDS:
                overrides[key] = float(value)
            elif key in _INT_FIELDS:
                overrides[key] = int(value)
            elif key in _BOOL_FIELDS:
                if not isinstance(value, bool):
                    raise TypeError("expected true/false")
                overrides[key] = value
            elif key == "strategies":
                overrides[key] = tuple(str(v) for v in value)
            elif key == "relay_trigger":
                overrides[key] = str(value)
            elif key == "quadrature":
                parsed = _parse_quadrature(value, problems)
                if parsed is not None:
                    overrides[key] = parsed
            elif key == "absorption":
                parsed = _parse_absorption(value, problems)
                if parsed is not None:
                    overrides[key] = parsed
        except (TypeError, ValueError) as exc:
            problems.append(f"{key}: {exc}")

    sweep_spec = SweepSpec()
    if "sweep" in doc:
        node = doc["sweep"]
        if not isinstance(node, dict):
            problems.append("sweep: expected a mapping")
        else:
            for key in node:
                if key not in _SWEEP_KEYS:
                    problems.append(f"sweep.{key}: unknown key")
            try:
                sweep_spec = dataclasses.replace(
                    sweep_spec,
                    ue_density_values=tuple(float(v) for v in node.get(
                        "ue_density_values", DEFAULT_SWEEP_DENSITIES)),
                    jitter_std_values=tuple(float(v) for v in node.get(
                        "jitter_std_values", DEFAULT_SWEEP_JITTERS)),
                )
            except (TypeError, ValueError) as exc:
                problems.append(f"sweep: {exc}")
    if "threshold_grid_bps" in doc:
        try:
            grid = tuple(sorted(float(v) for v in doc["threshold_grid_bps"]))
            if not grid:
                raise ValueError("grid must not be empty")
            sweep_spec = dataclasses.replace(sweep_spec, threshold_grid_bps=grid)
        except (TypeError, ValueError) as exc:
            problems.append(f"threshold_grid_bps: {exc}")
    if "output_dir" in doc:
        sweep_spec = dataclasses.replace(sweep_spec, output_dir=str(doc["output_dir"]))

    if problems:
        raise ScenarioError(problems)
    try:
        cfg = ScenarioConfig(**overrides)
    except ValueError as exc:
        raise ScenarioError([str(exc)]) from exc
    return cfg, sweep_spec


def _absorption_to_dict(model: AbsorptionModel) -> dict:
    if model.mode == "constant":
        return {"mode": "constant", "k_per_m": model.k_const}
    if model.source and not model.source.startswith("builtin:"):
        return {"mode": "table", "path": model.source}
    return {"mode": "table"}


def scenario_to_dict(cfg: ScenarioConfig, spec: SweepSpec) -> dict:
    """Plain-data view of a scenario, the inverse of scenario_from_dict."""
    out: dict[str, object] = {}
    for f in dataclasses.fields(ScenarioConfig):
        value = getattr(cfg, f.name)
        if f.name == "absorption":
            out[f.name] = _absorption_to_dict(value)
        elif f.name == "quadrature":
            out[f.name] = {"panels": value.panels, "rtol": value.rtol,
                           "max_levels": value.max_levels}
        elif f.name == "strategies":
            out[f.name] = list(value)
        else:
            out[f.name] = value
    out["sweep"] = {
        "ue_density_values": list(spec.ue_density_values),
        "jitter_std_values": list(spec.jitter_std_values),
    }
    out["threshold_grid_bps"] = list(spec.threshold_grid_bps)
    if spec.output_dir is not None:
        out["output_dir"] = spec.output_dir
    return out


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_csv(path: Path, header: tuple[str, ...], rows: list[tuple]) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(x) for x in row) + "\n")


def _means_rows(cells: list[CellResult], header: tuple[str, ...]) -> list[tuple]:
    slim = header == FIGURE2_HEADER
    rows = []
    for cell in cells:
        for strategy in sorted(cell.stats):
            st = cell.stats[strategy]
            row = (_fmt(cell.ue_density), _fmt(cell.jitter_std_m), strategy,
                   _fmt(st.mean_bps), _fmt(st.stderr_bps))
            if not slim:
                row = row + (st.n_samples, cell.drops_ok, cell.drops_failed)
            rows.append(row)
    return rows


def _cdf_rows(cells: list[CellResult]) -> list[tuple]:
    rows = []
    for cell in cells:
        for strategy in sorted(cell.stats):
            st = cell.stats[strategy]
            for thr, p in zip(st.thresholds_bps, st.cdf):
                rows.append((_fmt(cell.ue_density), _fmt(cell.jitter_std_m),
                             strategy, _fmt(thr), _fmt(p)))
    return rows


def _write_manifest(out_dir: Path, args: argparse.Namespace, cfg: ScenarioConfig,
                    spec: SweepSpec, cells: list[CellResult], outputs: list[str]) -> None:
    manifest = {
        "package": "thznet",
        "version": __version__,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "command": args.command,
        "master_seed": cfg.master_seed,
        "threads": args.threads,
        "scenario": scenario_to_dict(cfg, spec),
        "cells": [
            {"ue_density": c.ue_density, "jitter_std_m": c.jitter_std_m,
             "drops_ok": c.drops_ok, "drops_failed": c.drops_failed,
             "error": c.error}
            for c in cells
        ],
        "outputs": outputs,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_summary(out_dir: Path, cells: list[CellResult]) -> None:
    lines = []
    for cell in cells:
        if cell.error is not None:
            lines.append(f"lambda={cell.ue_density:g} sigma={cell.jitter_std_m:g}  FAILED: {cell.error}")
            continue
        for strategy in sorted(cell.stats):
            st = cell.stats[strategy]
            lines.append(
                f"lambda={cell.ue_density:g} sigma={cell.jitter_std_m:g} {strategy:>6}: "
                f"mean {st.mean_bps / 1e9:.3f} Gbit/s (se {st.stderr_bps / 1e9:.3f}), "
                f"{st.n_samples} samples, drops {cell.drops_ok}/{cell.drops_ok + cell.drops_failed}"
            )
    (out_dir / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _load_scenario(args) -> tuple[ScenarioConfig, SweepSpec]:
    if args.scenario is not None:
        cfg, spec = parse_scenario(args.scenario)
    else:
        cfg, spec = ScenarioConfig(), SweepSpec()
        print("no scenario file given; using built-in defaults", file=sys.stderr)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    if args.drops is not None:
        cfg = dataclasses.replace(cfg, drops=args.drops)
    return cfg, spec


def _resolve_out(args, spec: SweepSpec) -> Path:
    target = args.out or spec.output_dir
    if target is None:
        raise ScenarioError(["no output directory: pass --out or set output_dir in the scenario"])
    out_dir = Path(target)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def _execute(args, cfg: ScenarioConfig, spec: SweepSpec,
             densities, jitters) -> list[CellResult]:
    return run_sweep(cfg, densities, jitters, spec.threshold_grid_bps, workers=args.threads)


def _finish(args, cfg, spec, cells: list[CellResult], out_dir: Path,
            csv_name: str, header: tuple[str, ...], rows: list[tuple]) -> int:
    _write_csv(out_dir / csv_name, header, rows)
    _write_summary(out_dir, cells)
    _write_manifest(out_dir, args, cfg, spec, cells, [csv_name, "summary.txt"])
    failed = [c for c in cells if c.error is not None]
    for cell in failed:
        print(f"cell lambda={cell.ue_density:g} sigma={cell.jitter_std_m:g} failed: {cell.error}",
              file=sys.stderr)
    if len(failed) == len(cells):
        print("all cells failed", file=sys.stderr)
        return 1
    print(f"wrote {out_dir / csv_name}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sim",
        description="Monte-Carlo THz network simulator: blockage, misalignment, relaying.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "single cell at the scenario's density and jitter"),
        ("sweep", "full density x jitter sweep from the scenario's sweep lists"),
        ("figure2", "mean throughput vs density for each jitter level"),
        ("figure3", "capacity-threshold CDF tables at the reference densities"),
        ("validate", "parse and validate the scenario, then exit"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scenario", type=Path, default=None, help="scenario YAML file")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override master seed")
        p.add_argument("--drops", type=int, default=None, help="override drops per cell")
        p.add_argument("--threads", type=int,
                       default=int(os.environ.get(THREADS_ENV_VAR, "1")),
                       help=f"parallel drop workers (default ${THREADS_ENV_VAR} or 1)")
    args = parser.parse_args(argv)

    try:
        cfg, spec = _load_scenario(args)
        if args.command == "validate":
            yaml.safe_dump(scenario_to_dict(cfg, spec), sys.stdout, sort_keys=False)
            return 0
        out_dir = _resolve_out(args, spec)
        if args.command == "run":
            cells = _execute(args, cfg, spec, [cfg.ue_density], [cfg.jitter_std_m])
            rows = _means_rows(cells, MEANS_HEADER)
            code = _finish(args, cfg, spec, cells, out_dir, "means.csv", MEANS_HEADER, rows)
            if code == 0:
                _write_csv(out_dir / "cdf.csv", FIGURE3_HEADER, _cdf_rows(cells))
            return code
        if args.command == "sweep":
            cells = _execute(args, cfg, spec, spec.ue_density_values, spec.jitter_std_values)
            code = _finish(args, cfg, spec, cells, out_dir, "means.csv", MEANS_HEADER,
                           _means_rows(cells, MEANS_HEADER))
            if code == 0:
                _write_csv(out_dir / "cdf.csv", FIGURE3_HEADER, _cdf_rows(cells))
            return code
        if args.command == "figure2":
            cells = _execute(args, cfg, spec, spec.ue_density_values, DEFAULT_SWEEP_JITTERS)
            return _finish(args, cfg, spec, cells, out_dir, "figure2.csv", FIGURE2_HEADER,
                           _means_rows(cells, FIGURE2_HEADER))
        if args.command == "figure3":
            cells = _execute(args, cfg, spec, CDF_DENSITIES, DEFAULT_SWEEP_JITTERS)
            return _finish(args, cfg, spec, cells, out_dir, "figure3.csv", FIGURE3_HEADER,
                           _cdf_rows(cells))
        raise AssertionError(f"unhandled command {args.command}")
    except ScenarioError as exc:
        for problem in exc.problems:
            print(f"scenario error: {problem}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
