import json
import shutil

import pytest

from doublonfig.bundle import BundleError, RunBundle


def test_load_and_table_access(trigger_bundle):
    b = RunBundle.load(trigger_bundle)
    assert b.manifest["schema_version"] == 1
    tab = b.table("observables.csv")
    tab.require("t", "P_e", "norm", "energy")
    t = tab.column("t")
    assert t[0] == 0.0 and t[-1] == 30.0
    assert abs(tab.column("norm")[-1] - 1.0) < 1e-8


def test_empty_directory_rejected(tmp_path):
    with pytest.raises(BundleError, match="manifest.json"):
        RunBundle.load(tmp_path)


def test_wrong_schema_version_rejected(tmp_path, trigger_bundle):
    shutil.copytree(trigger_bundle, tmp_path / "b")
    mf = tmp_path / "b" / "manifest.json"
    data = json.loads(mf.read_text())
    data["schema_version"] = 99
    mf.write_text(json.dumps(data))
    with pytest.raises(BundleError, match="schema_version"):
        RunBundle.load(tmp_path / "b")


def test_truncated_row_names_lost_columns(tmp_path, trigger_bundle):
    shutil.copytree(trigger_bundle, tmp_path / "b")
    obs = tmp_path / "b" / "observables.csv"
    lines = obs.read_text().splitlines()
    header = lines[0].split(",")
    # drop the last two fields of one data row
    lines[5] = ",".join(lines[5].split(",")[:-2])
    obs.write_text("\n".join(lines) + "\n")
    b = RunBundle.load(tmp_path / "b")
    with pytest.raises(BundleError) as err:
        b.table("observables.csv")
    msg = str(err.value)
    assert "row 6" in msg
    assert header[-2] in msg and header[-1] in msg


def test_missing_column_listed(tmp_path, trigger_bundle):
    shutil.copytree(trigger_bundle, tmp_path / "b")
    obs = tmp_path / "b" / "observables.csv"
    lines = obs.read_text().splitlines()
    cols = lines[0].split(",")
    drop = cols.index("P_e")
    keep = [",".join(v for i, v in enumerate(ln.split(",")) if i != drop)
            for ln in lines]
    obs.write_text("\n".join(keep) + "\n")
    tab = RunBundle.load(tmp_path / "b").table("observables.csv")
    with pytest.raises(BundleError, match="P_e"):
        tab.require("t", "P_e")
