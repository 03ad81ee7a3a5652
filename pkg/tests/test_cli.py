"""Command-line behaviors: dispatch, config merging, outputs, exit codes."""

import json

import numpy as np
import pytest

from cptsim.cli import main

from oracles import lorentzian_scan


def run(capsys, *argv):
    try:
        code = main(list(argv))
    except SystemExit as exc:  # argparse rejects bad flags with exit 2
        code = exc.code
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_scan(path, seed=0, meta=(), **kwargs):
    rng = np.random.default_rng(seed)
    f, y, truth = lorentzian_scan(rng, **kwargs)
    lines = [f"# {k} = {v}" for k, v in dict(meta).items()]
    lines.append("frequency_hz,signal")
    lines += [f"{float(a)!r},{float(b)!r}" for a, b in zip(f, y)]
    path.write_text("\n".join(lines) + "\n")
    return truth


# ------------------------------------------------------------------ solve

def test_solve_zero_rabi_uniform(capsys):
    code, out, _ = run(capsys, "solve", "--rabi-hz", "0", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert all(v == 0.125 for v in data["ground"].values())
    assert data["rho_ee"] == 0.0


def test_solve_fig1_preset_none_mode(capsys):
    code, out, _ = run(capsys, "solve", "--preset", "fig1", "--mode", "none",
                       "--format", "json")
    assert code == 0
    data = json.loads(out)
    ground = data["ground"]
    assert max(ground, key=ground.get) == "F2_m2"
    assert data["params_hz"]["gamma_opt_hz"] == 1e9
    assert data["params_hz"]["delta_opt_hz"] == -30e6


def test_solve_fig1_preset_complete_mode(capsys):
    code, out, _ = run(capsys, "solve", "--preset", "fig1", "--mode", "both",
                       "--format", "json")
    assert code == 0
    data = json.loads(out)
    excited = data["complete"]["excited_effective"]
    values = list(excited.values())
    assert all(v == values[0] for v in values)
    ground = data["complete"]["ground"]
    assert ground["F1_m1"] < ground["F1_m-1"]
    assert ground["F2_m2"] < data["none"]["ground"]["F2_m2"]


def test_solve_csv_format(capsys):
    code, out, _ = run(capsys, "solve", "--rabi-hz", "1e6")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "quantity,value"
    assert any(line.startswith("ground.F2_m-2,") for line in lines)


def test_hz_round_trip_full_precision(capsys):
    rabi = "943472.5306745064"
    _, out, _ = run(capsys, "solve", "--rabi-hz", rabi, "--format", "json")
    data = json.loads(out)
    assert data["params_hz"]["rabi_hz"] == float(rabi)


def test_mode_both_rejected_outside_solve(capsys):
    code, _, err = run(capsys, "sweep", "--rabi-hz", "1e6", "--mode", "both")
    assert code == 2


# ------------------------------------------------------------------ sweep

def test_sweep_writes_csv_and_metrics(tmp_path, capsys):
    out = tmp_path / "shape.csv"
    code, _, _ = run(capsys, "sweep", "--preset", "fig1", "--mode", "complete",
                     "--n-points", "301", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "delta_hz,rho_ee"
    assert len(lines) > 300
    metrics = json.loads((tmp_path / "shape_metrics.json").read_text())
    assert metrics["asymmetry"] < 1e-6
    assert metrics["physical_contrast"] > 0.3


def test_sweep_flat_region_no_resonance_exit_code(capsys):
    code, _, err = run(capsys, "sweep", "--rabi-hz", "0", "--n-points", "3")
    assert code == 3
    assert "NoResonance" in err


def test_sweep_stdout_metrics(capsys):
    code, out, _ = run(capsys, "sweep", "--pumping-strength", "5",
                       "--n-points", "201")
    assert code == 0
    metrics = json.loads(out)
    assert metrics["fwhm_hz"] > 0


# --------------------------------------------------------- contrast-ratio

def test_contrast_ratio_table(capsys):
    code, out, _ = run(capsys, "contrast-ratio", "--pumping-strengths",
                       "10,1000", "--format", "json")
    assert code == 0
    rows = json.loads(out)["rows"]
    assert [r["pumping_strength"] for r in rows] == [10.0, 1000.0]
    assert rows[1]["ratio"] > rows[0]["ratio"]
    assert rows[1]["ratio"] == pytest.approx(1.894, abs=0.01)


def test_contrast_ratio_weak_pumping(capsys):
    code, out, _ = run(capsys, "contrast-ratio", "--pumping-strengths",
                       "0.001", "--format", "json")
    assert code == 0
    row = json.loads(out)["rows"][0]
    assert row["contrast_none"] < 1e-3
    assert row["contrast_complete"] < 1e-3


# -------------------------------------------------------- power-broadening

def test_power_broadening_round_trip(capsys):
    code, out, _ = run(capsys, "power-broadening", "--preset", "fig1",
                       "--mode", "complete", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["fwhm_hz"] == pytest.approx(data["target_fwhm_hz"], rel=0.01)
    assert data["fwhm_hz"] == pytest.approx(4 * data["fwhm0_hz"], rel=0.01)


# ----------------------------------------------------------- spin-exchange

def test_spin_exchange_monotone_width(capsys):
    code, out, _ = run(capsys, "spin-exchange", "--t-min-c", "50",
                       "--t-max-c", "90", "--t-step-c", "5")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "temperature_C,n_cm3,vr_cm_s,gamma_se_rad_s,width_hz"
    widths = [float(line.split(",")[4]) for line in lines[1:]]
    assert len(widths) == 9
    assert all(b > a for a, b in zip(widths, widths[1:]))


def test_spin_exchange_prefactor_and_linearity(capsys):
    _, out1, _ = run(capsys, "spin-exchange", "--t-min-c", "60",
                     "--t-max-c", "60", "--format", "json")
    _, out2, _ = run(capsys, "spin-exchange", "--t-min-c", "60",
                     "--t-max-c", "60", "--nuclear-spin", "3.5",
                     "--format", "json")
    _, out3, _ = run(capsys, "spin-exchange", "--t-min-c", "60",
                     "--t-max-c", "60", "--sigma-se-cm2", "3.8e-14",
                     "--format", "json")
    g1 = json.loads(out1)["rows"][0]["gamma_se_rad_s"]
    g2 = json.loads(out2)["rows"][0]["gamma_se_rad_s"]
    g3 = json.loads(out3)["rows"][0]["gamma_se_rad_s"]
    assert g2 / g1 == pytest.approx(0.6875 / 0.625, rel=1e-12)
    assert g3 == pytest.approx(2 * g1, rel=1e-12)


def test_spin_exchange_out_of_range(capsys):
    code, _, err = run(capsys, "spin-exchange", "--t-max-c", "400")
    assert code == 3
    assert "OutOfRange" in err


# ---------------------------------------------------------------- analyze

def test_analyze_directory(tmp_path, capsys):
    scans = tmp_path / "scans"
    scans.mkdir()
    for i, inten in enumerate([0.1, 0.3]):
        write_scan(scans / f"s{i}.csv", seed=i, contrast=0.03 + 0.02 * i,
                   meta={"temperature_C": 65, "intensity_mW_cm2": inten})
    (scans / "broken.csv").write_text("frequency_hz,signal\n1,2\nbad\n")
    out = tmp_path / "table.csv"
    code, _, _ = run(capsys, "analyze", str(scans), "--out", str(out))
    assert code == 0  # soft per-file errors keep the batch green
    rows = out.read_text().strip().splitlines()
    assert len(rows) == 4  # header + 3 files
    assert sum("ParseError" in r for r in rows) == 1
    mirror = json.loads((tmp_path / "table.json").read_text())
    assert len(mirror["rows"]) == 3
    assert len(mirror["qmax"]) == 1
    assert mirror["qmax"][0]["intensity_mW_cm2"] == 0.3


def test_analyze_total_failure_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("frequency_hz,signal\n1,2\n")
    code, _, err = run(capsys, "analyze", str(bad))
    assert code == 3


def test_analyze_missing_input(tmp_path, capsys):
    code, _, err = run(capsys, "analyze", str(tmp_path / "nope.csv"))
    assert code == 2


# ------------------------------------------------------------------ config

def test_config_file_merging(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# run configuration\nrabi_hz = 1e6\ngamma_g_hz = 250\n")
    _, out, _ = run(capsys, "solve", "--config", str(cfg), "--format", "json")
    data = json.loads(out)
    # printed values are angular/2pi at full precision (1 ulp from input)
    assert data["params_hz"]["rabi_hz"] == pytest.approx(1e6, rel=1e-15)
    assert data["params_hz"]["gamma_g_hz"] == pytest.approx(250.0, rel=1e-15)
    # explicit flag beats the config value
    _, out2, _ = run(capsys, "solve", "--config", str(cfg),
                     "--gamma-g-hz", "400", "--format", "json")
    assert json.loads(out2)["params_hz"]["gamma_g_hz"] == pytest.approx(
        400.0, rel=1e-15)


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("not_a_flag = 1\n")
    code, _, err = run(capsys, "solve", "--config", str(cfg), "--rabi-hz", "1")
    assert code == 2
    assert "not_a_flag" in err


def test_missing_rabi_is_config_error(capsys):
    code, _, err = run(capsys, "solve")
    assert code == 2
    assert "rabi" in err


def test_rabi_and_strength_conflict(capsys):
    code, _, err = run(capsys, "solve", "--rabi-hz", "1e6",
                       "--pumping-strength", "5")
    assert code == 2


# -------------------------------------------------------------- determinism

def test_repeat_runs_byte_identical(tmp_path, capsys):
    args = ("sweep", "--pumping-strength", "8", "--mode", "complete",
            "--n-points", "201")
    _, out1, _ = run(capsys, *args)
    _, out2, _ = run(capsys, *args)
    assert out1 == out2

    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, *args, "--out", str(a))
    run(capsys, *args, "--out", str(b))
    assert a.read_bytes() == b.read_bytes()
