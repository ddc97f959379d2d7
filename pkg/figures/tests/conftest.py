import subprocess

import pytest


def _cli(*args):
    proc = subprocess.run(["doublonlab", *args], capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"doublonlab {' '.join(args)} failed:\n{proc.stderr}")


@pytest.fixture(scope="session")
def trigger_bundle(tmp_path_factory):
    """Small dynamics bundle made through the public CLI."""
    out = tmp_path_factory.mktemp("bundles") / "trigger"
    _cli("run", "--preset", "fig2-trigger-ci", "--n-cells", "24",
         "--tmax", "30", "--out", str(out))
    return out


@pytest.fixture(scope="session")
def bands_bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("bundles") / "bands"
    _cli("bands", "--preset", "fig1-bands", "--out", str(out))
    return out
