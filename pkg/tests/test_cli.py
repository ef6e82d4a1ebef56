import math

import pytest

from tricoupler.cli import EXIT_CALIBRATION, EXIT_CONFIG, EXIT_DESIGN, EXIT_SOLVER, MODE_HEADER, main
from tricoupler.config import ConfigError, RunConfig, load_config, parse_assignments
from tricoupler.material import SELLMEIER_SETS
from tricoupler.spdc import assemble_state, solve_mode_set, state_csv


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_defaults_build_models():
    cfg = RunConfig()
    assert cfg.material().sellmeier_ordinary == SELLMEIER_SETS["congruent"][0]
    assert cfg.geometry().length_um == 2550.0
    assert cfg.filter_center == 1350.0


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# design point\ngeometry.gap_d_um = 7.5\npump.pump_mode = 1  # antisymmetric\n")
    cfg = load_config(path, ["geometry.gap_d_um=8"])
    assert cfg.gap_d_um == 8.0 and cfg.pump_mode == 1


def test_unknown_key_named():
    with pytest.raises(ConfigError, match="geometry.gap_um"):
        parse_assignments(["geometry.gap_um = 3"])


@pytest.mark.parametrize("line", ["pump.pump_mode = 2", "geometry.width_a_um = x", "nonsense"])
def test_bad_values(line):
    with pytest.raises(ConfigError):
        load_config(None, [line])


def test_sellmeier_set_selectable():
    cfg = load_config(None, ["material.sellmeier_set = mgo"])
    assert cfg.material().sellmeier_extraordinary == SELLMEIER_SETS["mgo"][1]
    custom = load_config(None, ["material.sellmeier_o = 1,0.01,2,0.02,3,400"])
    assert custom.material().sellmeier_ordinary == (1.0, 0.01, 2.0, 0.02, 3.0, 400.0)


def test_echo_roundtrip():
    cfg = load_config(None, ["sweep.tolerance_nm = -25,25", "geometry.grating_period_um = 6.9"])
    again = load_config(None, cfg.echo().splitlines())
    assert again == cfg


def test_dry_run(tmp_path, capsys):
    assert run(tmp_path / "o", "design", "--dry-run") == 0
    out = capsys.readouterr().out
    assert "pump.wavelength_nm = 675.0" in out
    assert not (tmp_path / "o").exists()


def test_unknown_key_exit(tmp_path, capsys):
    assert run(tmp_path, "modes", "--set", "geometry.bogus=1") == EXIT_CONFIG
    assert "geometry.bogus" in capsys.readouterr().err


def test_modes_table(tmp_path):
    assert run(tmp_path, "modes") == 0
    lines = (tmp_path / "modes.csv").read_text().splitlines()
    assert lines[0] == MODE_HEADER
    pols = [line.split(",")[:2] for line in lines[1:]]
    assert pols == [["H", "0"], ["H", "0"], ["H", "1"], ["H", "2"], ["V", "0"], ["V", "1"], ["V", "2"]]
    assert all(float(line.split(",")[4]) < 1e-10 for line in lines[1:])


def test_modes_decoupled_note(tmp_path):
    assert run(tmp_path, "modes", "--set", "geometry.gap_d_um=60") == 0
    assert "decoupled" in (tmp_path / "modes_summary.txt").read_text()
    assert len((tmp_path / "modes.csv").read_text().splitlines()) == 8


def test_solver_failure_exit(tmp_path):
    assert run(tmp_path, "modes", "--set", "material.delta_n_h=0.02") == EXIT_SOLVER


def test_design_failure_exit(tmp_path, monkeypatch):
    monkeypatch.setenv("QPM_THREADS", "many")
    assert run(tmp_path, "sweep-wavelength", "--set", "sweep.signal_points=3") == EXIT_DESIGN


def test_calibration_failure_exit(tmp_path):
    assert run(tmp_path, "calibrate", "--set", "calibrate.target_K=10") == EXIT_CALIBRATION
    assert "status = failed" in (tmp_path / "calibration.txt").read_text()


def test_deterministic_outputs(tmp_path):
    for name in ("a", "b"):
        assert run(tmp_path / name, "sweep-grating") == 0
        assert run(tmp_path / name, "modes") == 0
    for f in ("spectrum_grating.csv", "modes.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_grating_csv_header(tmp_path):
    run(tmp_path, "sweep-grating", "--set", "pump.pump_mode=1")
    lines = (tmp_path / "spectrum_grating.csv").read_text().splitlines()
    assert lines[0] == "axis_value,process_1,process_2,process_3,process_4"
    assert len(lines) == 302


def test_state_zero_width_is_slice(tmp_path, material, geometry):
    period = 2 * math.pi / 0.898
    assert run(tmp_path, "state", "--set", f"geometry.grating_period_um={period!r}",
               "--set", "state.filter_width_nm=0") == 0
    modes = solve_mode_set(material, geometry, 0.675, 1.35)
    direct = assemble_state(0, modes, 2 * math.pi / period, geometry.length_um)
    assert (tmp_path / "state.csv").read_text() == state_csv(direct)
    assert "|H_sI, V_iI>" in (tmp_path / "state_metrics.txt").read_text()


def test_state_filter_outside_sweep(tmp_path):
    assert run(tmp_path, "state", "--set", "state.filter_center_nm=1500") == EXIT_CONFIG


def test_state_entropy_drops_off_crossing(tmp_path):
    def entropy(center):
        out = tmp_path / str(center)
        assert main(["state", "--out", str(out), "--set", f"state.filter_center_nm={center}"]) == 0
        text = (out / "state_metrics.txt").read_text()
        return float(text.split("schmidt_entropy_bits = ")[1].split()[0])

    assert entropy(1300) < entropy(1350)
