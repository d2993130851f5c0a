"""INI configuration loading and the command-line front end.

CLI tests call main() in-process with tiny systems and loose tolerances;
the scaling subcommand is exercised against a stubbed area search since the
real one is a minutes-long computation covered elsewhere.
"""

import json

import pytest

import rydghz.cli as cli_mod
from rydghz.cli import main
from rydghz.config import (
    PRESETS,
    ConfigError,
    RunConfig,
    load_config,
    load_preset,
    parse_grid,
    require_keys,
)
from rydghz.propagator import read_trajectory_csv
from rydghz.sweeps import MinAreaResult, read_sweep_csv

FAST_SIM = """\
[run]
n_atoms = 2
initial = g_0

[integrator]
rtol = 1e-6
atol = 1e-8
samples = 200
"""


def write_ini(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_presets_all_load():
    for name in PRESETS:
        cfg = load_preset(name)
        assert cfg.n_atoms == 5
    with pytest.raises(ConfigError, match="unknown preset"):
        load_preset("fig5")


def test_preset_fig2_operating_point():
    cfg = load_preset("fig2")
    assert cfg.initial == "prepared"
    assert cfg.transfer.omega_max == 125.0
    assert cfg.transfer.delta == 50.0
    assert cfg.transfer.tau == 0.5
    assert cfg.integrator.rtol == 1e-10
    assert cfg.integrator.samples == 2000


def test_preset_sweep_grids():
    top = load_preset("fig3_top")
    assert top.sweep.parameter == "tau_over_T"
    assert len(top.sweep.grid) == 19
    assert top.sweep.grid[0] == pytest.approx(0.1)
    assert top.sweep.grid[-1] == pytest.approx(1.0)
    assert top.transfer.omega_max == 120.0
    bottom = load_preset("fig3_bottom")
    assert bottom.sweep.parameter == "omega_m_T"
    assert bottom.sweep.grid[0] == 100.0
    assert bottom.sweep.grid[-1] == 400.0


def test_preset_fig4_scaling_block():
    cfg = load_preset("fig4")
    assert cfg.scaling.n_min == 3
    assert cfg.scaling.n_max == 12
    assert cfg.scaling.threshold == 0.95
    assert cfg.scaling.taus == (0.3, 0.4, 0.5, 0.6, 0.7)
    assert cfg.transfer.omega_max == 170.0
    assert cfg.transfer.tau == 0.45


def test_unknown_section_rejected(tmp_path):
    path = write_ini(tmp_path, "[pulse]\nomega_m_t = 100\n")
    with pytest.raises(ConfigError, match=r"unknown config section \[pulse\]"):
        load_config(path)


def test_unknown_key_names_the_key(tmp_path):
    path = write_ini(tmp_path, "[pulses]\nomega_max = 100\n")
    with pytest.raises(ConfigError, match="'omega_max'"):
        load_config(path)


def test_bad_values_become_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="n_atoms"):
        load_config(write_ini(tmp_path, "[run]\nn_atoms = five\n"))
    with pytest.raises(ConfigError, match="rtol"):
        load_config(write_ini(tmp_path, "[integrator]\nrtol = tight\n", "b.ini"))
    # validation failures inside the frozen dataclasses surface the same way
    with pytest.raises(ConfigError):
        load_config(write_ini(tmp_path, "[run]\nn_atoms = 0\n", "c.ini"))
    with pytest.raises(ConfigError):
        load_config(write_ini(tmp_path, "[pulses]\nomega_m_t = -5\n", "d.ini"))
    with pytest.raises(ConfigError):
        load_config(write_ini(tmp_path, "[run]\nn_atoms = 2\nn_atoms = 3\n", "e.ini"))


def test_parse_grid_forms():
    assert parse_grid("1,2,3.5") == (1.0, 2.0, 3.5)
    assert parse_grid("0:1:5") == (0.0, 0.25, 0.5, 0.75, 1.0)
    assert parse_grid("2:9:1") == (2.0,)
    for bad in ("", "1:2", "1:2:0", "a,b", "1:b:3"):
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_run_config_defaults_and_validation():
    cfg = RunConfig()
    assert cfg.n_atoms == 5
    assert cfg.gamma_T == 0.0
    assert cfg.initial == "prepared"
    assert cfg.rap_variant == "resonant_half_pi"
    assert cfg.sweep.grid == ()
    with pytest.raises(ConfigError):
        RunConfig(gamma_T=-1.0)
    with pytest.raises(ConfigError):
        RunConfig(rap_variant="pi_pulse")
    require_keys(cfg, "transfer.omega_max")
    with pytest.raises(ConfigError, match="sweep.grid"):
        require_keys(cfg, "sweep.grid")


def test_cli_rejects_config_plus_preset(tmp_path, capsys):
    path = write_ini(tmp_path, FAST_SIM)
    code = main(["--config", str(path), "--preset", "fig2", "simulate"])
    assert code == 1
    assert "configuration error" in capsys.readouterr().err


def test_cli_unknown_preset_exits_1(capsys):
    assert main(["--preset", "fig9", "ghz"]) == 1
    assert "unknown preset" in capsys.readouterr().err


def test_cli_simulate_outputs(tmp_path):
    path = write_ini(tmp_path, FAST_SIM)
    out = tmp_path / "out"
    assert main(["--config", str(path), "--out", str(out), "simulate"]) == 0
    times, pops, norm2 = read_trajectory_csv(out / "trajectory.csv")
    assert len(times) == 200
    assert abs(norm2[-1] - 1.0) < 1e-5
    summary = json.loads((out / "summary.json").read_text())
    assert summary["n_atoms"] == 2
    assert summary["norm_drift"] < 1e-5
    assert set(pops) == set(summary["final_populations"])
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert manifest["preset"] is None
    assert manifest["config"] == str(path)


def test_cli_rerun_is_bit_identical(tmp_path):
    path = write_ini(tmp_path, FAST_SIM)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["--config", str(path), "--out", str(out1), "simulate"]) == 0
    assert main(["--config", str(path), "--out", str(out2), "simulate"]) == 0
    for name in ("trajectory.csv", "summary.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_cli_bad_initial_label_exits_1(tmp_path, capsys):
    path = write_ini(tmp_path, "[run]\nn_atoms = 2\ninitial = g_9\n")
    out = tmp_path / "out"
    assert main(["--config", str(path), "--out", str(out), "simulate"]) == 1
    assert "initial" in capsys.readouterr().err


def test_cli_sub_regime_area_exits_2(tmp_path, capsys):
    ini = FAST_SIM + "\n[pulses]\nomega_m_t = 90\ndelta_t = 50\n"
    path = write_ini(tmp_path, ini)
    out = tmp_path / "out"
    assert main(["--config", str(path), "--out", str(out), "simulate"]) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_cli_ghz_outputs(tmp_path):
    ini = """\
[run]
n_atoms = 2

[integrator]
rtol = 1e-6
atol = 1e-8
samples = 100
"""
    path = write_ini(tmp_path, ini)
    out = tmp_path / "out"
    assert main(["--config", str(path), "--out", str(out), "ghz"]) == 0
    doc = json.loads((out / "ghz.json").read_text())
    assert 0.0 <= doc["ghz_fidelity"] <= 1.0
    assert doc["adiabaticity_metric"] == 0.0  # gamma_T defaults to 0
    assert doc["steps"] == ["prepare", "transfer", "w_inverse"]
    assert set(doc["trajectories"]) == set(doc["steps"])
    for name in doc["steps"]:
        assert (out / f"{name}.csv").exists()


def test_cli_sweep_outputs(tmp_path):
    ini = """\
[run]
n_atoms = 2

[sweep]
parameter = omega_m_T
grid = 120,130
observable = step2_populations

[integrator]
rtol = 1e-6
atol = 1e-8
"""
    path = write_ini(tmp_path, ini)
    out = tmp_path / "out"
    assert main(["--config", str(path), "--out", str(out), "sweep"]) == 0
    rows = read_sweep_csv(out / "sweep.csv")
    assert [r.value for r in rows] == [120.0, 130.0]
    assert all(r.status == "ok" for r in rows)
    for col in ("p_g0", "p_r_last"):
        lines = (out / f"sweep_{col}.dat").read_text().splitlines()
        assert len(lines) == 2
        assert float(lines[0].split()[0]) == 120.0


def test_cli_sweep_without_grid_exits_1(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["--out", str(out), "sweep"]) == 1
    assert "grid" in capsys.readouterr().err


def test_cli_oracle_check(tmp_path, capsys):
    path = write_ini(tmp_path, "[run]\nn_atoms = 3\n\n[oracle]\ndraws = 5\n")
    out = tmp_path / "out"
    assert main(["--config", str(path), "--out", str(out), "oracle-check"]) == 0
    assert "pass" in capsys.readouterr().out
    doc = json.loads((out / "oracle_check.json").read_text())
    assert [rep["n_atoms"] for rep in doc["reports"]] == [2, 3]
    assert all(rep["passed"] for rep in doc["reports"])
    assert all(rep["max_block_deviation"] < 1e-12 for rep in doc["reports"])


def test_cli_oracle_size_guard_exits_1(tmp_path, capsys):
    path = write_ini(tmp_path, "[run]\nn_atoms = 7\n")
    out = tmp_path / "out"
    assert main(["--config", str(path), "--out", str(out), "oracle-check"]) == 1
    assert "3^N" in capsys.readouterr().err


def test_cli_scaling_with_stubbed_search(tmp_path, monkeypatch, capsys):
    searches = []

    def fake_search(n, threshold, search_range, rel_tol, taus, base, isolation):
        searches.append((n, search_range))
        area = 40.0 * n**0.66
        return MinAreaResult(
            n_atoms=n, omega_min=area, tau_opt=0.5, fidelity=0.97,
            threshold=threshold, per_tau={0.5: area},
        )

    monkeypatch.setattr(cli_mod, "find_min_area", fake_search)
    ini = "[scaling]\nn_min = 3\nn_max = 6\n"
    path = write_ini(tmp_path, ini)
    out = tmp_path / "out"
    assert main(["--config", str(path), "--out", str(out), "scaling"]) == 0
    assert "alpha = 0.66" in capsys.readouterr().out
    fit = json.loads((out / "scaling.json").read_text())
    assert fit["alpha"] == pytest.approx(0.66, abs=1e-9)
    csv_lines = (out / "min_area.csv").read_text().splitlines()
    assert csv_lines[0] == "n_atoms,omega_m_T_min,tau_opt,fidelity"
    assert len(csv_lines) == 5
    # each found minimum floors the next search range
    assert [n for n, _ in searches] == [3, 4, 5, 6]
    for (n, rng), (_, prev_rng) in zip(searches[1:], searches):
        prev_min = 40.0 * (n - 1) ** 0.66
        assert rng[0] == pytest.approx(max(40.0, prev_min * 0.85))
