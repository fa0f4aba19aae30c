import json

import numpy as np
import pytest
import yaml

from uowc_rte.cli import main
from uowc_rte.scenario import ConfigError, ScenarioConfig, build_model, load_config, run

FAST_MC = {"mc": {"n_photons": 20_000}}


def test_defaults_are_section_iv():
    cfg = ScenarioConfig.from_dict({})
    m = build_model(cfg)
    assert (m.water.b, m.water.c) == (0.91, pytest.approx(1.1))
    assert (m.grid.dx, m.grid.dy, m.grid.dt, m.grid.t_max) == (0.05, 0.01, 25e-12, 20e-9)
    assert m.angles.K == 22
    assert m.source.x0 == 1e-3
    assert m.source.omega == m.angles.angles[0]
    assert m.distances[0] == pytest.approx(1.0)
    assert m.grid.J <= 60


@pytest.mark.parametrize("name, bc", [("harbor-I", (0.91, 1.1)), ("Harbor-II", (1.8177, 2.2)),
                                      ("harbor_ii", (1.8177, 2.2))])
def test_presets(name, bc):
    w = ScenarioConfig.from_dict({"water": {"preset": name}}).water()
    assert (w.b, w.c) == (pytest.approx(bc[0]), pytest.approx(bc[1]))


def test_unknown_preset_lists_valid():
    with pytest.raises(ConfigError, match="harbor-I, harbor-II"):
        ScenarioConfig.from_dict({"water": {"preset": "baltic"}})


@pytest.mark.parametrize(
    "bad, field",
    [({"grid": {"dx": -1}}, "grid"), ({"K": 21}, "K"), ({"mode": "x"}, "mode"),
     ({"quadrature": {"scheme": 7, "M": 5}}, "quadrature.M"), ({"phase": {"variant": "mie"}}, "phase.variant"),
     ({"phase": {"variant": "sthg", "params": [2.0]}}, "phase.params"), ({"gird": {}}, "gird"),
     ({"receiver": {"R": 0.5}}, "receiver.R"), ({"water": {"b": 2.0, "c": 1.0}}, "water"),
     ({"solver": {"method": "sor"}}, "solver.method"), ({"electronics": {"F": 0.1}}, "electronics")],
)
def test_field_level_errors(bad, field):
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        ScenarioConfig.from_dict(bad)


def test_explicit_water():
    w = ScenarioConfig.from_dict({"water": {"a": 0.2, "b": 0.5}}).water()
    assert w.c == pytest.approx(0.7)


def test_ti_run_outputs(tmp_path):
    cfg = load_config(None, **{"water": {"preset": "harbor-II"}})
    res = run(cfg, tmp_path)
    lines = (tmp_path / "ti.csv").read_text().splitlines()
    assert lines[0] == "distance_m,power_norm,ber"
    data = np.loadtxt(tmp_path / "ti.csv", delimiter=",", skiprows=1)
    assert np.all(np.diff(data[:, 1]) < 0)
    assert np.all(np.diff(data[:, 2]) >= 0)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["config"]["water"] == {"preset": "harbor-II"}
    assert set(man["versions"]) >= {"numpy", "scipy", "python", "artifact"}
    assert "ti_7_7_solve_s" in man["timings"]
    assert res.files[-1] == "manifest.json"


def test_m_sweep(tmp_path):
    cfg = ScenarioConfig.from_dict({"quadrature": {"sweep": [[7, 7], [7, 14]]},
                                    "water": {"preset": "harbor-II"}})
    res = run(cfg, tmp_path)
    a = np.loadtxt(tmp_path / "ti_s7_M7.csv", delimiter=",", skiprows=1)[:, 1]
    b = np.loadtxt(tmp_path / "ti_s7_M14.csv", delimiter=",", skiprows=1)[:, 1]
    assert np.max(np.abs(b / a - 1)) < 0.01
    assert res.manifest["info"]["sweep_max_rel_diff"]["7/14"] < 0.01


def test_manifest_reproduces_bytes(tmp_path):
    cfg = ScenarioConfig.from_dict({"mode": "compare", **FAST_MC})
    run(cfg, tmp_path / "a")
    again = load_config(tmp_path / "a" / "manifest.json")
    run(again, tmp_path / "b")
    assert (tmp_path / "a" / "compare.csv").read_bytes() == (tmp_path / "b" / "compare.csv").read_bytes()


def test_compare_columns(tmp_path):
    run(ScenarioConfig.from_dict({"mode": "compare", **FAST_MC}), tmp_path)
    head = (tmp_path / "compare.csv").read_text().splitlines()[0]
    assert head == "distance_m,power_rte,power_mc,mc_stderr,abs_log10_ratio"


def test_td_run(tmp_path):
    cfg = ScenarioConfig.from_dict({"mode": "td", "grid": {"t_max": 2e-9, "x_max": 0.5},
                                    "receiver": {"start": 0.1}})
    run(cfg, tmp_path)
    lines = (tmp_path / "td.csv").read_text().splitlines()
    assert lines[0] == "distance_m,time_s,power_norm,ber"
    m = build_model(cfg)
    assert len(lines) == 1 + m.grid.N * m.distances.size
    assert (tmp_path / "td_average.csv").exists()


def test_cli_modes_and_exit_codes(tmp_path, capsys):
    assert main(["--mode", "ti", "--preset", "harbor-II", "--out", str(tmp_path / "ti"), "--plot"]) == 0
    assert (tmp_path / "ti" / "power_vs_distance.png").exists()
    assert (tmp_path / "ti" / "ber_vs_distance.png").exists()
    assert main(["--preset", "nowhere", "--out", str(tmp_path / "x")]) == 2
    assert "valid presets" in capsys.readouterr().err
    bad = tmp_path / "unstable.yaml"
    bad.write_text(yaml.safe_dump({"mode": "td", "grid": {"dt": 2e-10}}))
    assert main(["--config", str(bad), "--out", str(tmp_path / "y")]) == 3
    cfg = tmp_path / "mc.yaml"
    cfg.write_text(yaml.safe_dump({"mc": {"n_photons": 1}, "receiver": {"start": 2.0}}))
    assert main(["--config", str(cfg), "--mode", "mc", "--out", str(tmp_path / "z")]) == 4
    with pytest.raises(SystemExit) as exc:
        main(["--mode", "nope"])
    assert exc.value.code == 2
    assert main(["--config", str(tmp_path / "missing.yaml")]) == 2


def test_cli_overrides(tmp_path):
    out = tmp_path / "o"
    assert main(["--psf", "ff", "--scheme", "5", "--M", "40", "--K", "22", "--seed", "3",
                 "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["phase"]["variant"] == "ff"
    assert man["config"]["quadrature"]["scheme"] == 5
    assert man["config"]["seed"] == 3
