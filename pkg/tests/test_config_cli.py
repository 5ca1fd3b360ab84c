import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from suspbridge.cli import COMMANDS, build_parser, main
from suspbridge.config import (
    ConfigError,
    SimulationConfig,
    config_hash,
    emit_config,
    parse_config,
    replace_section,
)
from suspbridge.errors import ParameterError

SMALL = """\
bridge.n_modes = 6
grid.panel_count = 64
grid.fd_points = 1024
cable.ivp_steps = 1024
integrator.t_end = 0.2
picard.horizon = 0.05
"""


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.txt"
    path.write_text(SMALL)
    return path


def run_cli(tmp_path, command, config, *extra, name="out"):
    out = tmp_path / name
    argv = [command] if command else []
    argv += ["--config", str(config), "--out", str(out), *extra]
    code = main(argv)
    return code, out


def read_manifest(out):
    return json.loads((out / "manifest.json").read_text())


class TestParseConfig:
    def test_empty_document_gives_defaults(self):
        assert parse_config("") == SimulationConfig()
        assert parse_config("# only a comment\n\n   \n") == SimulationConfig()

    def test_values(self):
        cfg = parse_config("bridge.n_modes = 8  # fewer modes\nintegrator.method = rk4\noutput.formats = csv\n")
        assert cfg.bridge.n_modes == 8
        assert cfg.integrator.method == "rk4"
        assert cfg.output.formats == ("csv",)
        assert cfg.bridge.H0 == SimulationConfig().bridge.H0

    def test_round_trip(self):
        cfg = parse_config(SMALL + "initial.scenario = slackening\nbridge.ell = 0.35\n")
        assert parse_config(emit_config(cfg)) == cfg
        assert emit_config(parse_config(emit_config(cfg))) == emit_config(cfg)

    def test_default_round_trip_lists_every_key(self):
        text = emit_config(SimulationConfig())
        keys = [line.split("=")[0].strip() for line in text.splitlines() if "=" in line]
        assert "bridge.kappa0" in keys and "picard.inner_dt" in keys and "cable.s0" in keys
        assert len(keys) == len(set(keys))

    def test_n_modes_zero(self):
        with pytest.raises(ConfigError) as info:
            parse_config("bridge.n_modes = 0\n")
        assert "n_modes" in str(info.value)
        assert info.value.line == 1

    @pytest.mark.parametrize(
        "text, line",
        [
            ("bridge.M = 1.0\nnot an assignment\n", 2),
            ("\n\nbridge.M 1.0\n", 3),
            ("nodots = 1\n", 1),
            ("a.b.c = 1\n", 1),
            ("bridge.M = 1\nwind.speed = 3\n", 2),
            ("bridge.Mass = 3\n", 1),
            ("bridge.M = 1\nbridge.M = 2\n", 2),
            ("bridge.M = heavy\n", 1),
            ("bridge.n_modes = 2.5\n", 1),
            ("bridge.M =\n", 1),
            ("integrator.dt = nan\n", 1),
        ],
    )
    def test_syntax_errors_report_line(self, text, line):
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        assert info.value.line == line
        assert str(info.value).startswith(f"line {line}: ")

    def test_semantic_message(self):
        with pytest.raises(ConfigError) as info:
            parse_config("# header\nbridge.kappa0 = -1\n")
        assert info.value.line == 2
        assert "[bridge]" in str(info.value)

    def test_cross_check_fd_points(self):
        with pytest.raises(ConfigError) as info:
            parse_config("bridge.n_modes = 32\ngrid.fd_points = 256\n")
        assert info.value.key == "grid.fd_points"
        assert info.value.line == 2

    def test_cross_check_horizon(self):
        with pytest.raises(ConfigError):
            parse_config("picard.horizon = 1e-4\n")

    def test_bad_format(self):
        with pytest.raises(ConfigError):
            parse_config("output.formats = csv, parquet\n")

    def test_bad_scenario(self):
        with pytest.raises(ConfigError):
            parse_config("initial.scenario = hurricane\n")

    def test_config_error_is_parameter_error(self):
        assert issubclass(ConfigError, ParameterError)


class TestConfigHelpers:
    def test_hash_stable_and_sensitive(self):
        a = parse_config(SMALL)
        assert config_hash(a) == config_hash(parse_config(SMALL))
        assert config_hash(a) != config_hash(replace_section(a, "bridge", n_modes=5))
        assert config_hash(a, {"x": True}) != config_hash(a, {"x": False})

    def test_replace_section(self):
        cfg = replace_section(SimulationConfig(), "integrator", dt=5e-4)
        assert cfg.integrator.dt == 5e-4
        with pytest.raises(ParameterError):
            replace_section(cfg, "weather", dt=1.0)
        with pytest.raises(ParameterError):
            replace_section(cfg, "integrator", step=1.0)


class TestParser:
    def test_commands(self):
        parser = build_parser()
        assert set(COMMANDS) == {"cable", "eigs", "simulate", "picard", "energy-audit", "force-compare"}
        args = parser.parse_args(["eigs", "--debug-xi-one"])
        assert args.command == "eigs" and args.debug_xi_one

    def test_unknown_command(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["fly"])

    def test_command_required(self, capsys):
        with pytest.raises(SystemExit) as info:
            main([])
        assert info.value.code == 2


def _check_outputs(out):
    manifest = read_manifest(out)
    listed = set(manifest["files"])
    on_disk = {p.name for p in out.iterdir()} - {"manifest.json"}
    assert listed == on_disk
    for name in listed:
        text = (out / name).read_text()
        assert text or name.endswith(".jsonl"), name
        if name.endswith(".csv"):
            rows = list(csv.reader(text.splitlines()))
            assert all(not cell.replace("_", "").replace(".", "").isdigit() for cell in rows[0]), name
            assert len({len(r) for r in rows}) == 1, name
        elif name.endswith(".json"):
            json.loads(text)
        elif name.endswith(".jsonl"):
            for line in text.splitlines():
                json.loads(line)
    return manifest


class TestCommands:
    def test_cable(self, tmp_path, small_config):
        code, out = run_cli(tmp_path, "cable", small_config)
        assert code == 0
        manifest = _check_outputs(out)
        assert {"cable_profile.csv", "sag_conventions.json"} <= set(manifest["files"])
        m = manifest["metrics"]
        assert m["shoot_residual"] <= 1e-9
        assert m["symmetry_error"] <= 1e-9
        assert m["sag_gap_reproducing_readings"]

    def test_eigs(self, tmp_path, small_config):
        code, out = run_cli(tmp_path, "eigs", small_config)
        assert code == 0
        m = _check_outputs(out)["metrics"]
        assert len(m["eigenvalues"]) == 6
        assert m["orthonormality_error"] <= 1e-8

    def test_eigs_xi_one(self, tmp_path, small_config):
        code, out = run_cli(tmp_path, "eigs", small_config, "--debug-xi-one")
        assert code == 0
        manifest = _check_outputs(out)
        assert manifest["flags"]["debug_xi_one"] is True
        assert manifest["metrics"]["max_rel_dev_from_H0_k2"] <= 1e-6

    def test_flags_change_hash(self, tmp_path, small_config):
        _, a = run_cli(tmp_path, "eigs", small_config, name="a")
        _, b = run_cli(tmp_path, "eigs", small_config, "--debug-xi-one", name="b")
        assert read_manifest(a)["config_hash"] != read_manifest(b)["config_hash"]

    def test_simulate_longitudinal(self, tmp_path, small_config):
        code, out = run_cli(tmp_path, "simulate", small_config)
        assert code == 0
        manifest = _check_outputs(out)
        assert {"trajectory.csv", "energy.csv", "events.jsonl"} <= set(manifest["files"])
        m = manifest["metrics"]
        assert m["max_abs_theta"] <= 1e-9
        assert m["max_abs_p1_minus_p2"] <= 1e-9
        assert m["slack_events"] == 0
        header = (out / "energy.csv").read_text().splitlines()[0].split(",")
        assert header[:3] == ["t", "total_nominal", "total_corrected"]
        traj_header = (out / "trajectory.csv").read_text().splitlines()[0].split(",")
        assert traj_header[0] == "t" and len(traj_header) == 1 + 8 * 6

    def test_simulate_slackening(self, tmp_path):
        path = tmp_path / "slack.txt"
        path.write_text(SMALL.replace("t_end = 0.2", "t_end = 1.0") + "initial.scenario = slackening\n")
        code, out = run_cli(tmp_path, "simulate", path)
        assert code == 0
        m = read_manifest(out)["metrics"]
        assert m["slack_events"] > 0
        events = (out / "events.jsonl").read_text().splitlines()
        assert len(events) == m["slack_events"]

    def test_energy_audit(self, tmp_path, small_config):
        code, out = run_cli(tmp_path, "energy-audit", small_config)
        assert code == 0
        manifest = _check_outputs(out)
        assert "energy_residual.csv" in manifest["files"]
        assert manifest["metrics"]["relative_drift_total_corrected"] <= 1e-5

    def test_picard(self, tmp_path, small_config):
        code, out = run_cli(tmp_path, "picard", small_config)
        assert code == 0
        manifest = _check_outputs(out)
        m = manifest["metrics"]
        assert m["converged"]
        assert m["sup_diff_vs_verlet"] <= 1e-6
        assert len(m["ladder_contraction_ratios"]) == 3
        report = json.loads((out / "picard_report.json").read_text())
        assert report["converged"]

    def test_force_compare(self, tmp_path, small_config):
        code, out = run_cli(tmp_path, "force-compare", small_config)
        assert code == 0
        manifest = _check_outputs(out)
        header = (out / "force_compare.csv").read_text().splitlines()[0]
        assert header == "x,h_first_order,h_timoshenko,h_bvk"
        assert manifest["metrics"]["max_relative_spread"] >= 0

    def test_csv_only(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text(SMALL + "output.formats = csv\n")
        code, out = run_cli(tmp_path, "cable", path)
        assert code == 0
        assert read_manifest(out)["files"] == ["cable_profile.csv"]

    def test_seed_manifest(self, tmp_path, small_config):
        code, out = run_cli(tmp_path, None, small_config, "--seed-manifest")
        assert code == 0
        written = (out / "config.txt").read_text()
        assert parse_config(written) == parse_config(SMALL)
        assert read_manifest(out)["command"] == "seed-manifest"

    def test_deterministic(self, tmp_path):
        path = tmp_path / "d.txt"
        path.write_text(SMALL + "initial.scenario = torsional-perturbed\n")
        _, a = run_cli(tmp_path, "simulate", path, name="a")
        _, b = run_cli(tmp_path, "simulate", path, name="b")
        for name in read_manifest(a)["files"] + ["manifest.json"]:
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_csv_floats_round_trip(self, tmp_path, small_config):
        _, out = run_cli(tmp_path, "eigs", small_config)
        rows = list(csv.reader((out / "basis_u.csv").read_text().splitlines()))
        values = np.array([[float(c) for c in r] for r in rows[1:]])
        assert values.shape == (256, 7)
        assert np.all(np.isfinite(values))


class TestExitCodes:
    def test_bad_config_exit_2(self, tmp_path, capsys):
        path = tmp_path / "bad.txt"
        path.write_text("bridge.n_modes = 0\n")
        code, _ = run_cli(tmp_path, "eigs", path)
        assert code == 2
        assert "line 1" in capsys.readouterr().err

    def test_missing_config_exit_2(self, tmp_path):
        code, _ = run_cli(tmp_path, "eigs", tmp_path / "nope.txt")
        assert code == 2

    def test_numerical_exit_3(self, tmp_path):
        path = tmp_path / "tight.txt"
        path.write_text(
            "bridge.H0 = 3.0\nbridge.m = 1.3\nbridge.M = 4.2\ncable.s0 = 0.3\n"
            "cable.ivp_steps = 64\ncable.tolerance = 1e-15\n"
        )
        code, _ = run_cli(tmp_path, "cable", path)
        assert code == 3

    def test_blow_up_exit_4(self, tmp_path):
        path = tmp_path / "huge_dt.txt"
        path.write_text(
            "integrator.dt = 0.5\nintegrator.t_end = 2000.0\nbridge.n_modes = 4\n"
            "grid.panel_count = 32\ngrid.fd_points = 1024\n"
        )
        code, _ = run_cli(tmp_path, "simulate", path)
        assert code == 4

    def test_module_entry_point(self, tmp_path, small_config):
        result = subprocess.run(
            [sys.executable, "-m", "suspbridge", "eigs", "--config", str(small_config), "--out", str(tmp_path / "m")],
            capture_output=True,
            text=True,
            check=False,
        )
        assert result.returncode == 0, result.stderr
        assert "orthonormality_error" in result.stdout
