"""Configuration parsing/round-trip and the command-line surface."""

import json
from pathlib import Path

import numpy as np
import pytest

from tubepinn.cli import main, read_field_csv, read_waveform_csv, shift_waveform, sweep_time_step
from tubepinn.config import ConfigError, RunConfig, parse_config, serialize_config

MICRO_CONFIG = """
# micro profile: smallest run that exercises the full pipeline
[network]
n_nodes = 8
n_blocks = 1

[sampler]
n_interior = 100
n_boundary = 32
n_coupling = 32
n_periodic = 32
n_measurement = 32

[training]
epochs = 4

[fdm]
delta_x = 0.01
n_periods = 8
field_periods = 4
store_stride = 1
csv_stride_x = 5
csv_stride_t = 50
"""


def test_defaults_resolve_per_profile_and_mode():
    cfg = parse_config("")
    paper = cfg.resolved("paper", inverse=False)
    assert paper["network"]["n_nodes"] == 200 and paper["network"]["n_blocks"] == 5
    assert paper["sampler"]["n_interior"] == 5000
    assert paper["training"]["epochs"] == 20000
    assert paper["training"]["lr_decay"] == 0.007
    assert paper["weights"]["lambda_E"] == 0.58
    desk = cfg.resolved("desk", inverse=False)
    assert desk["network"]["n_nodes"] == 64 and desk["network"]["n_blocks"] == 3
    assert desk["sampler"]["n_interior"] == 2000
    assert desk["training"]["epochs"] == 5000
    inv = cfg.resolved("paper", inverse=True)
    assert inv["network"]["n_nodes"] == 400 and inv["network"]["n_blocks"] == 2
    assert inv["training"]["lr_decay"] == 0.005
    assert inv["weights"]["lambda_E"] == 5.8
    assert inv["weights"]["lambda_M"] == 5.0e-3
    assert inv["training"]["epochs"] == 100000


def test_cp_default_tracks_convention():
    cfg = parse_config("[air]\ncp_convention = \"si_J\"\n")
    assert cfg.resolved()["air"]["cp"] == 1010.0
    assert parse_config("").resolved()["air"]["cp"] == 1.01


def test_unknown_keys_rejected_with_location():
    with pytest.raises(ConfigError, match="line 2.*unknown key"):
        parse_config("[tube]\nlenght = 1.0\n")
    with pytest.raises(ConfigError, match="line 1.*unknown section"):
        parse_config("[pipes]\n")
    with pytest.raises(ConfigError, match="outside"):
        parse_config("length = 1.0\n")
    with pytest.raises(ConfigError, match="integer"):
        parse_config("[training]\nepochs = 2.5\n")
    with pytest.raises(ConfigError, match="true/false"):
        parse_config("[training]\ninclude_periodicity = 1\n")


def test_round_trip_is_identity():
    text = """
[tube]
length = 0.8
diameter = 0.008

[training]
epochs = 123
include_periodicity = false

[network]
activation = "tanh"
"""
    cfg = parse_config(text)
    again = parse_config(serialize_config(cfg))
    assert again.explicit == cfg.explicit
    # full-default serialization also round-trips
    full = serialize_config(cfg, include_defaults=True)
    assert parse_config(full).resolved() == cfg.resolved()


def test_set_validates_keys():
    cfg = RunConfig()
    cfg.set("training", "seed", 5)
    assert cfg.get("training", "seed") == 5
    with pytest.raises(ConfigError):
        cfg.set("training", "sseed", 5)


def test_sweep_time_step_policy():
    dt = sweep_time_step(3.82e-3, 340.0, 1e-2)
    assert 340.0 * dt / 1e-2 < 1.0
    assert 340.0 * dt / 1e-2 > 0.9


def test_shift_waveform_roundtrip():
    t = np.linspace(0, 1.0, 64, endpoint=False)
    wave = np.sin(2 * np.pi * t) + 0.3 * np.cos(4 * np.pi * t)
    shifted = shift_waveform(t, wave, 1.0, 0.5)
    back = shift_waveform(t, shifted, 1.0, 0.5)
    assert np.allclose(back, wave, atol=1e-12)
    expected = np.sin(2 * np.pi * (t + 0.5)) + 0.3 * np.cos(4 * np.pi * (t + 0.5))
    assert np.allclose(shifted, expected, atol=1e-3)


@pytest.fixture()
def micro_config(tmp_path):
    path = tmp_path / "micro.cfg"
    path.write_text(MICRO_CONFIG)
    return path


def test_cli_export_source_and_diagnostics(micro_config, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["export-source", "--config", str(micro_config), "--out", str(out)]) == 0
    src = out / "source" / "source.csv"
    t, u = read_waveform_csv(src)
    assert t.size == 2048 and u.max() == pytest.approx(1.0, abs=1e-6)
    manifest = json.loads((out / "source" / "manifest.json").read_text())
    assert "source.csv" in manifest["files"]
    capsys.readouterr()  # drain the export-source status line

    assert main(["diagnostics", "--config", str(micro_config)]) == 0
    printed = capsys.readouterr().out
    diag = json.loads(printed)
    assert diag["fdm_cfl"] == pytest.approx(0.017, abs=1e-3)


def test_cli_fdm_and_forward_and_compare(micro_config, tmp_path):
    out = tmp_path / "out"
    assert main(["fdm", "--config", str(micro_config), "--out", str(out)]) == 0
    fdm_dir = out / "fdm"
    t, p = read_waveform_csv(fdm_dir / "waveform_outlet.csv")
    assert t[0] == 0.0 and t[-1] == pytest.approx(1 / 261.6, rel=1e-6)
    x, tt, pf, uf = read_field_csv(fdm_dir / "field.csv")
    assert x[0] == 0.0 and x[-1] == pytest.approx(1.0)

    assert main(["forward", "--config", str(micro_config), "--out", str(out)]) == 0
    fwd_dir = out / "forward"
    manifest = json.loads((fwd_dir / "manifest.json").read_text())
    assert len(manifest["files"]) >= 3
    xg, tg, pg, ug = read_field_csv(fwd_dir / "field.csv")
    assert tg[-1] == pytest.approx(1 / 261.6, rel=1e-6)  # field covers one period
    history = (fwd_dir / "loss_history.csv").read_text().splitlines()
    assert history[0].startswith("epoch,L_all,L_E,L_B,L_C,L_P")
    assert len(history) == 1 + 4  # header + epochs

    assert main(["compare", "--pinn", str(fwd_dir), "--fdm", str(fdm_dir), "--out", str(out)]) == 0
    cmp_dir = out / "compare"
    summary = json.loads((cmp_dir / "summary.json").read_text())
    assert 0 <= summary["median_relative_delta"] <= summary["p95_relative_delta"]
    spectra = (cmp_dir / "spectra.csv").read_text().splitlines()
    assert spectra[0] == "frequency,pinn,fdm"

    # self-comparison: identical runs difference to zero
    assert main(["compare", "--pinn", str(fdm_dir), "--fdm", str(fdm_dir), "--out", str(tmp_path / "self")]) == 0
    self_summary = json.loads((tmp_path / "self" / "compare" / "summary.json").read_text())
    assert self_summary["max_relative_delta"] < 1e-12


def test_cli_forward_rerun_is_byte_identical(micro_config, tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["forward", "--config", str(micro_config), "--out", str(out_a), "--seed", "5"]) == 0
    assert main(["forward", "--config", str(micro_config), "--out", str(out_b), "--seed", "5"]) == 0
    hist_a = (out_a / "forward" / "loss_history.csv").read_bytes()
    hist_b = (out_b / "forward" / "loss_history.csv").read_bytes()
    assert hist_a == hist_b
    man_a = json.loads((out_a / "forward" / "manifest.json").read_text())
    man_b = json.loads((out_b / "forward" / "manifest.json").read_text())
    assert man_a == man_b


def test_cli_inverse_modes(micro_config, tmp_path):
    out = tmp_path / "out"
    assert main(["fdm", "--config", str(micro_config), "--out", str(out)]) == 0
    target = out / "fdm" / "waveform_outlet.csv"

    assert main([
        "inverse", "--mode", "omega", "--config", str(micro_config),
        "--pressure-target", str(target), "--out", str(out),
    ]) == 0
    traj = (out / "inverse_omega" / "trajectory.csv").read_text().splitlines()
    assert traj[0] == "epoch,omega_c"
    first = float(traj[1].split(",")[1])
    assert first == pytest.approx(1.3149e3)

    assert main([
        "inverse", "--mode", "design", "--config", str(micro_config),
        "--pressure-target", str(target), "--out", str(out), "--shift", "0.5",
    ]) == 0
    traj = (out / "inverse_design" / "trajectory.csv").read_text().splitlines()
    assert traj[0] == "epoch,length,diameter_mm"
    _, l0, d0 = traj[1].split(",")
    assert float(l0) == pytest.approx(0.8)
    assert float(d0) == pytest.approx(8.0)
    summary = json.loads((out / "inverse_design" / "summary.json").read_text())
    assert set(summary["percent_error"]) == {"length", "diameter_mm"}

    with pytest.raises(SystemExit, match="pressure-target"):
        main(["inverse", "--mode", "omega", "--config", str(micro_config), "--out", str(out)])


def test_cli_ablation(micro_config, tmp_path):
    out = tmp_path / "out"
    cfg = Path(micro_config).read_text().replace("epochs = 4", "epochs = 3")
    path = tmp_path / "ablate.cfg"
    path.write_text(cfg)
    assert main(["ablate-activation", "--config", str(path), "--out", str(out)]) == 0
    rows = (out / "ablate_activation" / "ablation.csv").read_text().splitlines()
    assert rows[0] == "epoch,snake,tanh,sin"
    assert len(rows) == 4
