"""CLI: scenario parsing, subcommands, CSV schemas, reproducibility."""
import json
from pathlib import Path

import pytest
import yaml

from thznet.cli import (FIGURE2_HEADER, FIGURE3_HEADER, MEANS_HEADER,
                        ScenarioError, SweepSpec, main, parse_scenario,
                        scenario_from_dict, scenario_to_dict)
from thznet.config import ScenarioConfig

FAST_SCENARIO = {
    "drops": 4,
    "master_seed": 9,
    "ue_density": 0.4,
    "sweep": {"ue_density_values": [0.4], "jitter_std_values": [0.0, 0.05]},
    "threshold_grid_bps": [1e9, 10e9, 30e9],
}


def write_scenario(tmp_path, doc, name="scenario.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc) if doc is not None else "", encoding="utf-8")
    return path


# ------------------------------------------------------------------ parsing

def test_empty_file_means_defaults(tmp_path):
    cfg, spec = parse_scenario(write_scenario(tmp_path, None))
    assert cfg == ScenarioConfig()
    assert spec == SweepSpec()


def test_out_of_range_probability_names_the_key(tmp_path):
    with pytest.raises(ScenarioError) as exc_info:
        parse_scenario(write_scenario(tmp_path, {"tx_probability": 1.4}))
    message = str(exc_info.value)
    assert "tx_probability" in message
    assert "[0, 1]" in message


def test_unknown_keys_rejected(tmp_path):
    with pytest.raises(ScenarioError) as exc_info:
        parse_scenario(write_scenario(tmp_path, {"ue_densty": 0.3, "quadrature": {"pnls": 4}}))
    assert any("ue_densty: unknown key" in p for p in exc_info.value.problems)
    assert any("quadrature.pnls" in p for p in exc_info.value.problems)


def test_round_trip_is_a_fixpoint(tmp_path):
    cfg0, spec0 = ScenarioConfig(), SweepSpec()
    path = write_scenario(tmp_path, scenario_to_dict(cfg0, spec0))
    cfg1, spec1 = parse_scenario(path)
    assert cfg1 == cfg0
    assert spec1 == spec0
    # and a non-default document round-trips too
    doc = dict(FAST_SCENARIO)
    doc.update({"jitter_std_m": 0.05, "relay_exclusivity": True,
                "absorption": {"mode": "constant", "k_per_m": 0.002},
                "quadrature": {"panels": 32, "rtol": 1e-5, "max_levels": 10}})
    cfg2, spec2 = parse_scenario(write_scenario(tmp_path, doc))
    cfg3, spec3 = parse_scenario(write_scenario(tmp_path, scenario_to_dict(cfg2, spec2), "b.yaml"))
    assert cfg3 == cfg2 and spec3 == spec2


def test_malformed_yaml_reports_cleanly(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("{: not yaml", encoding="utf-8")
    with pytest.raises(ScenarioError):
        parse_scenario(path)


def test_bad_strategy_and_trigger_rejected():
    with pytest.raises(ScenarioError):
        scenario_from_dict({"strategies": ["best", "psychic"]})
    with pytest.raises(ScenarioError):
        scenario_from_dict({"relay_trigger": "always"})


# --------------------------------------------------------------- subcommands

def test_validate_round_trip_and_exit_codes(tmp_path, capsys):
    path = write_scenario(tmp_path, FAST_SCENARIO)
    assert main(["validate", "--scenario", str(path)]) == 0
    emitted = yaml.safe_load(capsys.readouterr().out)
    cfg, spec = scenario_from_dict(emitted)
    assert cfg.drops == 4 and spec.ue_density_values == (0.4,)
    bad = write_scenario(tmp_path, {"tx_probability": 2.0}, "bad.yaml")
    assert main(["validate", "--scenario", str(bad)]) == 2


def test_run_writes_artifact(tmp_path):
    scenario = write_scenario(tmp_path, FAST_SCENARIO)
    out = tmp_path / "out"
    assert main(["run", "--scenario", str(scenario), "--out", str(out)]) == 0
    means = (out / "means.csv").read_text().splitlines()
    assert means[0] == ",".join(MEANS_HEADER)
    assert len(means) == 1 + 2  # one cell x two strategies
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["master_seed"] == 9
    assert manifest["scenario"]["relay_exclusivity"] is False
    assert manifest["scenario"]["relay_trigger"] == "blocked_or_below_threshold"
    assert (out / "summary.txt").exists() and (out / "cdf.csv").exists()


def test_figure2_schema(tmp_path):
    scenario = write_scenario(tmp_path, FAST_SCENARIO)
    out = tmp_path / "fig2"
    assert main(["figure2", "--scenario", str(scenario), "--out", str(out)]) == 0
    lines = (out / "figure2.csv").read_text().splitlines()
    assert lines[0] == "lambda,sigma_s,strategy,mean_throughput_bps,stderr_bps"
    # one density x three jitter levels x two strategies
    assert len(lines) == 1 + 1 * 3 * 2
    strategies = {line.split(",")[2] for line in lines[1:]}
    assert strategies == {"best", "random"}


def test_figure3_schema_and_monotone_cdf(tmp_path):
    scenario = write_scenario(tmp_path, dict(FAST_SCENARIO, drops=3))
    out = tmp_path / "fig3"
    assert main(["figure3", "--scenario", str(scenario), "--out", str(out)]) == 0
    lines = (out / "figure3.csv").read_text().splitlines()
    assert lines[0] == "lambda,sigma_s,strategy,C_thr_bps,P_C"
    # two reference densities x three jitters x two strategies x three thresholds
    assert len(lines) == 1 + 2 * 3 * 2 * 3
    groups: dict[tuple, list[float]] = {}
    for line in lines[1:]:
        lam, sig, strat, thr, p = line.split(",")
        groups.setdefault((lam, sig, strat), []).append((float(thr), float(p)))
    for rows in groups.values():
        ps = [p for _, p in sorted(rows)]
        assert all(a <= b for a, b in zip(ps, ps[1:]))
        assert all(0.0 <= p <= 1.0 for p in ps)


def test_identical_invocations_are_byte_identical(tmp_path):
    scenario = write_scenario(tmp_path, FAST_SCENARIO)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--scenario", str(scenario), "--out", str(out_a)]) == 0
    assert main(["run", "--scenario", str(scenario), "--out", str(out_b)]) == 0
    for name in ("means.csv", "cdf.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_seed_and_drops_overrides(tmp_path):
    scenario = write_scenario(tmp_path, FAST_SCENARIO)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    main(["run", "--scenario", str(scenario), "--out", str(out_a)])
    main(["run", "--scenario", str(scenario), "--out", str(out_b), "--seed", "77"])
    assert (out_a / "means.csv").read_bytes() != (out_b / "means.csv").read_bytes()
    assert json.loads((out_b / "manifest.json").read_text())["master_seed"] == 77
    out_c = tmp_path / "c"
    main(["run", "--scenario", str(scenario), "--out", str(out_c), "--drops", "2"])
    manifest = json.loads((out_c / "manifest.json").read_text())
    assert manifest["cells"][0]["drops_ok"] == 2


def test_missing_output_dir_is_an_error(tmp_path):
    scenario = write_scenario(tmp_path, FAST_SCENARIO)
    assert main(["run", "--scenario", str(scenario)]) == 2


def test_threads_flag_matches_serial(tmp_path):
    scenario = write_scenario(tmp_path, FAST_SCENARIO)
    out_a, out_b = tmp_path / "serial", tmp_path / "parallel"
    main(["run", "--scenario", str(scenario), "--out", str(out_a), "--threads", "1"])
    main(["run", "--scenario", str(scenario), "--out", str(out_b), "--threads", "2"])
    assert (out_a / "means.csv").read_bytes() == (out_b / "means.csv").read_bytes()
