import shutil

import pytest

from doublonfig.bundle import BundleError, RunBundle
from doublonfig.cli import main
from doublonfig.plots import plot_bands, plot_field, plot_lightcone, plot_populations


def _snapshot(directory):
    return sorted((p.name, p.stat().st_mtime_ns, p.stat().st_size)
                  for p in directory.iterdir())


def test_all_kinds_render(trigger_bundle, bands_bundle, tmp_path):
    before_t = _snapshot(trigger_bundle)
    before_b = _snapshot(bands_bundle)
    dyn = RunBundle.load(trigger_bundle)
    for fn, name in ((plot_populations, "pop"), (plot_field, "field"),
                     (plot_lightcone, "cone")):
        out = fn(dyn, tmp_path / f"{name}.png")
        assert out.is_file() and out.stat().st_size > 0
    out = plot_bands(RunBundle.load(bands_bundle), tmp_path / "bands.png")
    assert out.is_file() and out.stat().st_size > 0
    # plotting is read-only over bundles
    assert _snapshot(trigger_bundle) == before_t
    assert _snapshot(bands_bundle) == before_b


def test_bands_plot_needs_bands_csv(trigger_bundle, tmp_path):
    with pytest.raises(BundleError, match="bands.csv"):
        plot_bands(RunBundle.load(trigger_bundle), tmp_path / "x.png")


def test_single_momentum_file_still_plots(tmp_path, bands_bundle):
    shutil.copytree(bands_bundle, tmp_path / "b")
    bc = tmp_path / "b" / "bands.csv"
    lines = bc.read_text().splitlines()
    bc.write_text("\n".join(lines[:2]) + "\n")
    out = plot_bands(RunBundle.load(tmp_path / "b"), tmp_path / "one.png")
    assert out.is_file() and out.stat().st_size > 0


def test_cli_round_trip(trigger_bundle, tmp_path, capsys):
    out = tmp_path / "fig.png"
    code = main(["plot", "populations", "--bundle", str(trigger_bundle),
                 "--out", str(out)])
    assert code == 0
    assert out.is_file()
    assert str(out) in capsys.readouterr().out


def test_cli_reports_truncation_with_columns(trigger_bundle, tmp_path, capsys):
    shutil.copytree(trigger_bundle, tmp_path / "b")
    obs = tmp_path / "b" / "observables.csv"
    lines = obs.read_text().splitlines()
    lines[3] = ",".join(lines[3].split(",")[:-1])
    obs.write_text("\n".join(lines) + "\n")
    code = main(["plot", "populations", "--bundle", str(tmp_path / "b"),
                 "--out", str(tmp_path / "fig.png")])
    assert code == 1
    err = capsys.readouterr().err
    assert "observables.csv" in err and "missing" in err
    assert lines[0].split(",")[-1] in err  # the lost column by name


def test_cli_unknown_bundle_dir(tmp_path, capsys):
    code = main(["plot", "field", "--bundle", str(tmp_path / "nope"),
                 "--out", str(tmp_path / "x.png")])
    assert code == 1
    assert "manifest.json" in capsys.readouterr().err
