import json
import math

import numpy as np
import pytest

from doublonlab.cli import main
from doublonlab.errors import ConfigError
from doublonlab.scenario import (PRESETS, config_to_dict, list_presets,
                                 load_config, override_config, parse_config,
                                 preset_config, run, run_sweep,
                                 serialize_config)


def tiny_raw(**over):
    raw = {
        "scenario": {"name": "tiny", "mode": "dynamics"},
        "lattice": {"n_cells": 24, "hopping": 1.0,
                    "gauge_phase": math.pi, "nonlinearity": 4.0,
                    "boundary": "open"},
        "emitter": {"frequency": 4.02, "coupling": 0.02, "cells": [12],
                    "sublattice": "A", "phases": [0.0]},
        "initial": {"excited": [0], "photon_kind": "cls",
                    "photon_cells": [12], "photon_labels": ["+2"],
                    "photon_weights": [1.0]},
        "time": {"t_max": 8.0, "stride": 2.0, "tolerance": 1e-9},
    }
    raw.update(over)
    return raw


def test_presets_exist_and_round_trip():
    names = [n for n, _ in list_presets()]
    assert len(names) >= 8
    assert "fig2-trigger" in names
    for name in names:
        cfg = preset_config(name)
        assert cfg == parse_config(json.loads(serialize_config(cfg)))
        # serialization is already normalized: dumping twice is stable
        assert serialize_config(cfg) == serialize_config(
            parse_config(config_to_dict(cfg)))


def test_unknown_preset_and_keys():
    with pytest.raises(ConfigError):
        preset_config("fig9-wormhole")
    with pytest.raises(ConfigError) as err:
        parse_config(tiny_raw(extra={"a": 1}))
    assert "unknown key extra" in str(err.value)
    raw = tiny_raw()
    raw["time"]["t_mox"] = 5.0
    with pytest.raises(ConfigError) as err:
        parse_config(raw)
    assert "time.t_mox" in str(err.value)
    raw = tiny_raw()
    del raw["emitter"]["frequency"]
    with pytest.raises(ConfigError) as err:
        parse_config(raw)
    assert "emitter.frequency" in str(err.value)
    raw = tiny_raw()
    raw["initial"]["photon_labels"] = ["+3"]
    with pytest.raises(ConfigError):
        parse_config(raw)
    raw = tiny_raw()
    raw["lattice"]["n_cells"] = 24.5
    with pytest.raises(ConfigError) as err:
        parse_config(raw)
    assert "lattice.n_cells" in str(err.value)


def test_mode_section_requirements():
    raw = tiny_raw()
    del raw["time"]
    with pytest.raises(ConfigError):
        parse_config(raw)
    raw = tiny_raw(scenario={"name": "b", "mode": "bands"})
    with pytest.raises(ConfigError):
        parse_config(raw)  # dynamics sections present in bands mode


def test_time_grid_includes_endpoint():
    cfg = parse_config(tiny_raw())
    grid = cfg.time.grid()
    assert grid[0] == 0.0 and grid[-1] == 8.0 and grid.size == 5


def test_override_recenters():
    cfg = override_config(preset_config("fig5-partial"), n_cells=40)
    assert cfg.lattice.n_cells == 40
    assert cfg.emitter.cells == (20, 21)
    assert cfg.auxiliary.cells == (20, 21)
    assert cfg.initial.photon_cells == (20, 21)
    assert cfg.observables.chirality_origin == 20.5
    assert cfg.observables.localized_cells == (20, 21)
    assert cfg.observables.cls_track == ("20:+2", "21:+2")


def test_run_bundle_and_reproducibility(tmp_path):
    cfg = parse_config(tiny_raw())
    res = run(cfg, tmp_path / "a")
    assert res.columns[:2] == ["P_e", "P_D"]
    assert np.all(np.abs(res.series("norm") - 1.0) < 1e-8)
    assert res.certificates["norm_drift"] < 1e-8
    for name in ("observables.csv", "field_final.csv", "manifest.json"):
        assert (tmp_path / "a" / name).exists()
    mani = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert mani["schema_version"] == 1
    assert mani["config"] == config_to_dict(cfg)
    assert "resonance" in mani["derived"]
    run(cfg, tmp_path / "b")
    for name in ("observables.csv", "field_final.csv"):
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes()


def test_run_giant_columns(tmp_path):
    raw = tiny_raw()
    raw["emitter"]["cells"] = [12, 13]
    raw["emitter"]["phases"] = [0.0, -math.pi / 2]
    raw["initial"]["photon_cells"] = [12, 13]
    raw["initial"]["photon_labels"] = ["+2", "+2"]
    raw["initial"]["photon_weights"] = [1.0, 1.0]
    raw["observables"] = {"chirality_origin": 12.5,
                          "cls_track": ["12:+2"], "lightcone_stride": 4.0}
    res = run(parse_config(raw), tmp_path)
    for col in ("P_R", "P_L", "C_R", "C_L", "cls:12:+2"):
        assert col in res.columns
    assert (tmp_path / "lightcone.csv").exists()
    giant = res.derived["giant"]
    assert giant["leg_distance"] == 1
    assert giant["gamma_plus"] > giant["gamma_minus"]


def test_sweep_runs_points(tmp_path):
    base = tmp_path / "base.json"
    base.write_text(json.dumps(tiny_raw()))
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({
        "config": str(base),
        "overrides": [{"time.t_max": 4.0}, {"lattice.nonlinearity": 10.0}],
    }))
    done = run_sweep(grid, tmp_path / "out", max_workers=2)
    assert done == [0, 1]
    for i in range(2):
        mani = json.loads(
            (tmp_path / "out" / f"point-{i}" / "manifest.json").read_text())
        assert mani["config"]["time"]["t_max"] == (4.0 if i == 0 else 8.0)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"config": str(base),
                               "overrides": [{"time.t_mox": 4.0}]}))
    with pytest.raises(ConfigError):
        run_sweep(bad, tmp_path / "out2")


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["list-presets"]) == 0
    out = capsys.readouterr().out
    assert "fig2-trigger" in out
    assert main(["dump-config", "fig1-bands"]) == 0
    dumped = json.loads(capsys.readouterr().out)
    assert parse_config(dumped) == preset_config("fig1-bands")
    assert main(["dump-config", "nope"]) == 1
    capsys.readouterr()
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 3
    capsys.readouterr()
    assert main(["run", "--preset", "fig2-trigger", "--config", "x"]) == 1
    capsys.readouterr()
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad)]) == 1
    capsys.readouterr()


def test_cli_bands_and_run(tmp_path, capsys):
    out_dir = tmp_path / "bands"
    assert main(["bands", "--preset", "fig1-bands", "--out", str(out_dir)]) == 0
    capsys.readouterr()
    header = (out_dir / "bands.csv").read_text().splitlines()[0]
    assert header.startswith("K,E_1")
    cfg_path = tmp_path / "tiny.json"
    cfg_path.write_text(json.dumps(tiny_raw()))
    run_dir = tmp_path / "run"
    assert main(["run", "--config", str(cfg_path), "--out", str(run_dir),
                 "--tmax", "4.0"]) == 0
    capsys.readouterr()
    mani = json.loads((run_dir / "manifest.json").read_text())
    assert mani["config"]["time"]["t_max"] == 4.0
