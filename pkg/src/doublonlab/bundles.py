"""Writers for the files of a run bundle.

A bundle is one output directory per run: observables.csv (time series),
field_final.csv (marginals of the final two-photon state), optionally
lightcone.csv (per-cell photon number over time), bands.csv, and
manifest.json.  Floats are written with repr so that re-running a config
reproduces byte-identical CSV bodies; the manifest carries the wall-clock
runtime and is exempt from that guarantee.
"""

from __future__ import annotations

import json

import numpy as np

from . import __version__
from .observables import FieldMaps

SCHEMA_VERSION = 1

SUBLATTICE_NAMES = ("A", "B", "C")


def _fmt(x) -> str:
    return repr(float(x))


def write_table(path, header, rows) -> None:
    """Plain comma-joined table; all cells must already be strings."""
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def write_observables_csv(path, columns: list[str], times: np.ndarray,
                          data: np.ndarray) -> None:
    """Header t plus named columns; one row per output time."""
    header = ["t"] + list(columns)
    rows = ([_fmt(t)] + [_fmt(v) for v in row] for t, row in zip(times, data))
    write_table(path, header, rows)


def write_field_csv(path, maps: FieldMaps) -> None:
    """Two stacked tables keyed by the leading column.

    mu rows: (mu, tau_left, tau_right, weight) over the 3x3 sublattice
    pairs.  xcr rows: (xcr, x_c, r, weight) over center coordinate and
    cell separation, nonzero entries only.
    """
    rows = []
    for i, ti in enumerate(SUBLATTICE_NAMES):
        for j, tj in enumerate(SUBLATTICE_NAMES):
            rows.append(["mu", ti, tj, _fmt(maps.mu[i, j])])
    for x, r, w in zip(maps.xc, maps.r, maps.xcr_weight):
        rows.append(["xcr", _fmt(x), str(int(r)), _fmt(w)])
    write_table(path, ["table", "a", "b", "value"], rows)


def write_lightcone_csv(path, times: np.ndarray, profiles: np.ndarray) -> None:
    """Rows t, then <N(n)> for every cell n."""
    n = profiles.shape[1]
    header = ["t"] + [f"n{c}" for c in range(n)]
    rows = ([_fmt(t)] + [_fmt(v) for v in row] for t, row in zip(times, profiles))
    write_table(path, header, rows)


def write_manifest(path, config_dict: dict, derived: dict, certificates: dict,
                   files: list[str], runtime_seconds: float) -> None:
    body = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "config": config_dict,
        "derived": derived,
        "certificates": certificates,
        "files": sorted(files),
        "runtime_seconds": runtime_seconds,
    }
    with open(path, "w") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")


__all__ = ["SCHEMA_VERSION", "SUBLATTICE_NAMES", "write_table",
           "write_observables_csv", "write_field_csv", "write_lightcone_csv",
           "write_manifest"]
