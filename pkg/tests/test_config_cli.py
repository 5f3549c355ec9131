import io
import json

import numpy as np
import pytest

from edmr import cli
from edmr.config import SCHEMA, config_hash, dump_config, parse_config
from edmr.errors import ConfigurationError, UsageError
from edmr.experiments import SweepResult, run_detuning_map, run_field_sweep, resonant_config
from edmr.dynamics import PulseSpec, rabi_frequency
from edmr.spinsys import SpinPairConfig, gyromagnetic
from edmr.svg import emit_plot

SMALL_RABI = """
[rabi]
powers_W = [0.25, 1.0, 2.25, 4.0]
"""


def test_empty_config_defaults():
    run = parse_config("")
    cfg = run.spin
    assert (cfg.g_a, cfg.hyperfine_A) == (1.9985, 4.2)
    assert (run.window.t1, run.window.t2) == (7e-6, 23e-6)
    assert run.pulse.length == 480e-9
    assert run.detection.t0 == 3e-6
    assert run.seed == 0


def test_negative_rate_names_key():
    with pytest.raises(ConfigurationError, match=r"rates\.singlet_per_s"):
        parse_config("[rates]\nsinglet_per_s = -1.0\n")


@pytest.mark.parametrize("text, key", [
    ("[pulse]\nlength_us = 0.48\n", "pulse.length_us"),
    ("[spin]\nb0_T = 0.35\n", "spin.b0_T"),
    ("[boxcr]\nt1_us = 7\n", "boxcr"),
])
def test_unknown_keys_rejected(text, key):
    with pytest.raises(ConfigurationError, match=key.replace(".", r"\.")):
        parse_config(text)


def test_type_and_cross_checks():
    with pytest.raises(ConfigurationError, match="spin.g_donor"):
        parse_config('[spin]\ng_donor = "two"\n')
    with pytest.raises(ConfigurationError, match="boxcar"):
        parse_config("[boxcar]\nt1_us = 20.0\nt2_us = 10.0\n")
    with pytest.raises(ConfigurationError, match="sum to 1"):
        parse_config("[ensemble]\nnuclear_weights = [0.5, 0.6]\n")
    with pytest.raises(ConfigurationError, match="not both"):
        parse_config("[pulse]\nb1_mT = 0.1\npower_W = 1.0\n")
    with pytest.raises(ConfigurationError, match="TOML"):
        parse_config("[spin\n")
    with pytest.raises(ConfigurationError):
        parse_config("", "sweep")


def test_round_trip():
    text = """
[spin]
g_defect = 2.0081
b0_mT = 350.1
exchange_rad_per_s = 1.0e6
[pulse]
power_W = 2.25
[ensemble]
b1_distribution = "gaussian"
b1_rel_sigma = 0.1
[run]
seed = 11
formats = ["csv"]
"""
    a = parse_config(text, "transient")
    b = parse_config(dump_config(a), "transient")
    assert a == b
    assert config_hash(a) == config_hash(b)


def test_power_calibration_matches_direct_b1():
    a = parse_config("[pulse]\npower_W = 4.0\n[calibration]\nb1_ref_mT = 0.1\np_ref_W = 1.0\n")
    b = parse_config("[pulse]\nb1_mT = 0.2\n")
    assert a.pulse == b.pulse


def test_b0_defaults_to_line():
    run = parse_config("")
    assert run.spin.B0 == pytest.approx(350.35095398922374, rel=1e-12)
    assert run.spin_at(0.5).B0 == pytest.approx(346.1509539892237, rel=1e-12)
    fixed = parse_config("[spin]\nb0_mT = 350.3\n")
    assert fixed.spin_at(0.5).B0 == 350.3


def test_every_default_satisfies_its_constraint():
    for section, keys in SCHEMA.items():
        for key, (_, default, check, _) in keys.items():
            if check is not None and isinstance(default, (int, float, str, list)):
                assert check(default), f"{section}.{key}"


def test_stdin_config(monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO("[run]\nseed = 5\n"))
    assert parse_config("-").seed == 5


def test_config_file_path(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("[run]\nseed = 9\n")
    assert parse_config(str(p)).seed == 9
    with pytest.raises(ConfigurationError):
        parse_config(str(tmp_path / "missing.toml"))


def run_cli(tmp_path, name, experiment, text, *extra):
    cfg = tmp_path / f"{name}.toml"
    cfg.write_text(text)
    out = tmp_path / name
    code = cli.main([experiment, "--config", str(cfg), "--out", str(out), *extra])
    return code, out


def test_cli_rabi_files(tmp_path):
    code, out = run_cli(tmp_path, "rabi", "rabi", SMALL_RABI, "--format", "csv,json,svg")
    assert code == 0
    names = {p.name for p in out.iterdir()}
    for k in range(1, 5):
        assert f"q_tau_p{k}.csv" in names and f"fft_p{k}.csv" in names
    fit = json.loads((out / "fit.json").read_text())
    assert 0.98 <= fit["slope_over_gamma"] <= 1.02
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    m = cli.ResultManifest(**manifest)
    assert m.verify(out)


def test_cli_csv_format(tmp_path):
    code, out = run_cli(tmp_path, "nut", "nutation", "[nutation]\ntau_points = 20\n")
    assert code == 0
    raw = (out / "nutation.csv").read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "tau_s,singlet"
    first = lines[2].split(",")
    assert len(first) == 2 and all("e" in v for v in first)
    data = np.loadtxt(out / "nutation.csv", delimiter=",", skiprows=1)
    assert data.shape == (20, 2)


def test_cli_rerun_is_byte_identical(tmp_path):
    _, a = run_cli(tmp_path, "a", "transient", "[transient]\nstop_us = 50.0\n", "--seed", "3")
    _, b = run_cli(tmp_path, "b", "transient", "[transient]\nstop_us = 50.0\n", "--seed", "3")
    for name in ("transient.csv", "config.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    assert ma["config_hash"] == mb["config_hash"]
    assert [f["sha256"] for f in ma["files"]] == [f["sha256"] for f in mb["files"]]


def test_cli_numerical_failure_recorded(tmp_path):
    code, out = run_cli(tmp_path, "bad", "transient",
                        "[rates]\ntriplet_per_s = 0.0\ndissociation_per_s = 0.0\n")
    assert code == cli.EXIT_NUMERICAL
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "error"
    assert manifest["error"]["type"] == "SteadyStateError"


def test_cli_usage_errors(tmp_path, capsys):
    code, _ = run_cli(tmp_path, "u", "transient", "[rates]\nsinglet_per_s = -1\n")
    assert code == cli.EXIT_USAGE
    assert "rates.singlet_per_s" in capsys.readouterr().err
    code, _ = run_cli(tmp_path, "v", "transient", "", "--format", "csv,png")
    assert code == cli.EXIT_USAGE
    with pytest.raises(SystemExit):
        cli.main(["sweep", "--config", "x.toml"])


def test_cli_log_env(tmp_path, monkeypatch):
    monkeypatch.setenv("EDMR_LOG", "debug")
    code, _ = run_cli(tmp_path, "log", "nutation", "[nutation]\ntau_points = 10\n")
    assert code == 0


def test_plot_usage_errors():
    empty = SweepResult("x", np.array([]), "y", np.array([]))
    with pytest.raises(UsageError):
        emit_plot(empty)
    ok = SweepResult("x", np.arange(3.0), "y", np.arange(3.0))
    with pytest.raises(UsageError):
        emit_plot(ok, "pie")
    with pytest.raises(UsageError):
        emit_plot(ok, "contour")


def test_field_sweep_plot_labels_peaks():
    res = run_field_sweep(SpinPairConfig(), PulseSpec(), np.arange(344.0, 352.0, 0.1))
    svg = emit_plot(res)
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert svg.count('fill="red"') == len(res.meta["peaks"]) == 3


def test_detuning_map_overlay_is_formula():
    cfg = resonant_config(SpinPairConfig())
    B = cfg.B0 + np.linspace(-0.5, 0.5, 5)
    taus = 4e-9 * np.arange(200)
    m = run_detuning_map(cfg, taus, B, 0.1)
    gam = gyromagnetic(cfg.g_a)
    formula = rabi_frequency(gam, 0.1, 2 * np.pi * cfg.mw_freq, gam * (B - 2.1) * 1e-3) / (2 * np.pi)
    assert np.allclose(m.result.columns["predicted_Hz"], formula, rtol=1e-12)
    svg = emit_plot(m.result, "contour")
    assert 'stroke="white"' in svg
