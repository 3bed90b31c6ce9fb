import json
from pathlib import Path

import numpy as np
import pytest

from marsquad import cli, params
from marsquad.config import (ConfigError, config_snapshot, derived_report, load_config,
                             parse_overrides)
from marsquad.scenarios import list_scenarios, scenario_names, scenario_path

MINIMAL = """
[trajectory]
type = constant
x = 0.0
y = 0.0
z = 0.0

[sim]
controller = mpc
duration = 1.0
"""


@pytest.fixture
def minimal_cfg(tmp_path):
    path = tmp_path / "minimal.cfg"
    path.write_text(MINIMAL)
    return path


class TestLoading:
    def test_minimal_config_uses_defaults(self, minimal_cfg):
        cfg = load_config(minimal_cfg)
        assert cfg.veh.mass == params.VehicleParams.default().mass
        assert cfg.env == params.MARS
        assert cfg.sim.duration == 1.0
        assert cfg.mpc.horizon >= 1

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.cfg")

    def test_unknown_section_rejected(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text(MINIMAL + "\n[typo_section]\nfoo = 1\n")
        with pytest.raises(ConfigError, match="typo_section"):
            load_config(p)

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text(MINIMAL + "\n[mpc]\nhorizont = 20\n")
        with pytest.raises(ConfigError, match="mpc.horizont"):
            load_config(p)

    def test_negative_mass_reported_with_field(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text(MINIMAL + "\n[vehicle]\nmass = -3.0\n")
        with pytest.raises(ConfigError, match="mass"):
            load_config(p)

    def test_supersonic_tip_rejected(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text(MINIMAL + "\n[vehicle]\nmax_rotor_speed = 600.0\n")
        with pytest.raises(ConfigError, match="[Mm]ach"):
            load_config(p)

    def test_trajectory_key_for_wrong_type_rejected(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text(MINIMAL.replace("type = constant", "type = constant\nradius = 2.0"))
        with pytest.raises(ConfigError, match="radius"):
            load_config(p)

    def test_all_problems_collected(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text(MINIMAL + "\n[vehicle]\nmass = -3.0\nbogus = 1\n")
        with pytest.raises(ConfigError) as exc:
            load_config(p)
        assert len(exc.value.problems) >= 2

    def test_environment_profile_earth(self, tmp_path):
        p = tmp_path / "earth.cfg"
        p.write_text(MINIMAL + "\n[environment]\nprofile = earth\n"
                     "[vehicle]\nmax_rotor_speed = 150.0\n")
        cfg = load_config(p)
        assert cfg.env.gravity == pytest.approx(9.81)

    def test_pulse_parsing(self, tmp_path):
        p = tmp_path / "dist.cfg"
        p.write_text(MINIMAL + "\n[disturbance]\npulses = 1 2 0.5 0 0 0 0 0.01 ; 3 4 0 1 0 0 0 0\n")
        cfg = load_config(p)
        assert len(cfg.disturbance.pulses) == 2
        assert cfg.disturbance.pulses[0].force == (0.5, 0.0, 0.0)
        assert cfg.disturbance.pulses[1].t_start == 3.0

    def test_malformed_pulse_rejected(self, tmp_path):
        p = tmp_path / "dist.cfg"
        p.write_text(MINIMAL + "\n[disturbance]\npulses = 1 2 3\n")
        with pytest.raises(ConfigError, match="pulse"):
            load_config(p)


class TestOverrides:
    def test_parse(self):
        assert parse_overrides(["sim.seed=4"]) == [("sim", "seed", "4")]

    def test_malformed(self):
        with pytest.raises(ConfigError):
            parse_overrides(["simseed=4"])
        with pytest.raises(ConfigError):
            parse_overrides(["sim.seed"])

    def test_override_applies(self, minimal_cfg):
        cfg = load_config(minimal_cfg, ["sim.seed=99", "mpc.horizon=12"])
        assert cfg.sim.seed == 99
        assert cfg.mpc.horizon == 12

    def test_override_still_strict(self, minimal_cfg):
        with pytest.raises(ConfigError, match="mpc.bogus"):
            load_config(minimal_cfg, ["mpc.bogus=1"])


class TestSnapshot:
    def test_round_trip(self, tmp_path, minimal_cfg):
        cfg = load_config(minimal_cfg, ["sim.seed=42"])
        snap = tmp_path / "snap.cfg"
        snap.write_text(config_snapshot(cfg))
        cfg2 = load_config(snap)
        assert cfg2.sim.seed == 42
        assert cfg2.veh == cfg.veh
        assert cfg2.env == cfg.env
        assert config_snapshot(cfg2).split("\n")[1:] == config_snapshot(cfg).split("\n")[1:]

    def test_derived_report_values(self, minimal_cfg):
        rep = derived_report(load_config(minimal_cfg))
        assert rep["speed_of_sound_m_s"] == pytest.approx(233.0, abs=0.5)
        assert rep["hover_thrust_N"] == pytest.approx(44.53, abs=0.01)
        assert rep["hover_speed_rad_s"] == pytest.approx(247.2, abs=0.5)
        assert rep["tip_mach_at_max"] < 1.0


class TestShippedScenarios:
    def test_at_least_four_scenarios(self):
        assert len(scenario_names()) >= 4

    def test_expected_names_present(self):
        names = scenario_names()
        for expected in ("hover", "step_xyz", "helix", "square_corners",
                         "helix_disturbed"):
            assert expected in names

    def test_descriptions_nonempty(self):
        for name, description in list_scenarios():
            assert description

    def test_every_scenario_validates(self):
        for name in scenario_names():
            cfg = load_config(scenario_path(name))
            assert cfg.name == name

    def test_unknown_scenario_raises(self):
        with pytest.raises(KeyError):
            scenario_path("warp_drive")


class TestCli:
    def test_validate_ok(self, capsys):
        rc = cli.main(["validate", "--config", str(scenario_path("hover"))])
        assert rc == 0
        out = capsys.readouterr().out
        assert "speed_of_sound" in out

    def test_validate_reports_all_violations(self, tmp_path, capsys):
        p = tmp_path / "bad.cfg"
        p.write_text(MINIMAL + "\n[vehicle]\nmass = -3.0\nbogus = 1\n")
        rc = cli.main(["validate", "--config", str(p)])
        assert rc == 2
        err = capsys.readouterr().err
        assert "mass" in err and "bogus" in err

    def test_run_missing_config_no_outputs(self, tmp_path, capsys):
        out = tmp_path / "results"
        rc = cli.main(["run", "--config", str(tmp_path / "nope.cfg"),
                       "--out", str(out)])
        assert rc == 2
        assert not out.exists()

    def test_run_writes_artifacts(self, tmp_path, minimal_cfg, capsys):
        out = tmp_path / "results"
        rc = cli.main(["run", "--config", str(minimal_cfg), "--out", str(out),
                       "--set", "sim.duration=0.5"])
        assert rc == 0
        base = out / "minimal" / "mpc"
        assert (base / "log.csv").is_file()
        assert (base / "metrics.json").is_file()
        assert (base / "config.ini").is_file()
        metrics = json.loads((base / "metrics.json").read_text())
        assert metrics["constraint_violations"] == 0

    def test_run_both_prints_table(self, tmp_path, minimal_cfg, capsys):
        out = tmp_path / "results"
        rc = cli.main(["run", "--config", str(minimal_cfg), "--out", str(out),
                       "--controller", "both", "--set", "sim.duration=0.5"])
        assert rc == 0
        text = capsys.readouterr().out
        assert "mpc" in text and "pid" in text
        assert (out / "minimal" / "pid" / "log.csv").is_file()

    def test_seed_override_changes_snapshot(self, tmp_path, minimal_cfg):
        out = tmp_path / "results"
        cli.main(["run", "--config", str(minimal_cfg), "--out", str(out),
                  "--seed", "123", "--set", "sim.duration=0.5"])
        snap = (out / "minimal" / "mpc" / "config.ini").read_text()
        assert "seed = 123" in snap

    def test_sweep_runs_multiple(self, tmp_path, capsys):
        a = tmp_path / "a.cfg"
        b = tmp_path / "b.cfg"
        a.write_text(MINIMAL)
        b.write_text(MINIMAL.replace("x = 0.0", "x = 0.2"))
        out = tmp_path / "sweep_out"
        rc = cli.main(["sweep", str(a), str(b), "--out", str(out),
                       "--set", "sim.duration=0.5", "--jobs", "2"])
        assert rc == 0
        assert (out / "a" / "mpc" / "log.csv").is_file()
        assert (out / "b" / "mpc" / "log.csv").is_file()

    def test_sweep_rejects_invalid_config(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text(MINIMAL + "\n[vehicle]\nmass = -1\n")
        rc = cli.main(["sweep", str(bad)])
        assert rc == 2
