"""Read-only access to doublonlab output bundles.

A bundle is a directory holding manifest.json plus the CSV files listed
in it.  Loading validates the manifest schema version and, per table,
that every row carries the full set of header columns; a short row is
reported with the names of the columns it is missing.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


class BundleError(Exception):
    """Bundle missing, malformed, or lacking a required table/column."""


@dataclass
class Table:
    """One CSV file: named columns over float rows (strings kept as-is)."""

    name: str
    header: list[str]
    rows: list[list[str]]

    def require(self, *columns: str) -> None:
        missing = [c for c in columns if c not in self.header]
        if missing:
            raise BundleError(
                f"{self.name}: missing column(s) {', '.join(missing)};"
                f" header has {', '.join(self.header)}")

    def column(self, name: str) -> np.ndarray:
        self.require(name)
        k = self.header.index(name)
        return np.array([float(r[k]) for r in self.rows])

    def matrix(self, names: list[str]) -> np.ndarray:
        self.require(*names)
        idx = [self.header.index(n) for n in names]
        return np.array([[float(r[k]) for k in idx] for r in self.rows])


def _read_table(path: Path) -> Table:
    if not path.is_file():
        raise BundleError(f"{path.name}: not found in bundle")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise BundleError(f"{path.name}: empty file") from None
        rows = list(reader)
    for i, row in enumerate(rows):
        if len(row) < len(header):
            lost = header[len(row):]
            raise BundleError(
                f"{path.name} row {i + 2}: {len(row)} fields for"
                f" {len(header)} columns, missing {', '.join(lost)}")
        if len(row) > len(header):
            raise BundleError(
                f"{path.name} row {i + 2}: {len(row)} fields exceed the"
                f" {len(header)}-column header")
    return Table(path.name, header, rows)


@dataclass
class RunBundle:
    directory: Path
    manifest: dict

    @classmethod
    def load(cls, directory) -> "RunBundle":
        d = Path(directory)
        mf = d / "manifest.json"
        if not mf.is_file():
            raise BundleError(f"no manifest.json in {d}")
        try:
            manifest = json.loads(mf.read_text())
        except json.JSONDecodeError as exc:
            raise BundleError(f"manifest.json: {exc}") from None
        version = manifest.get("schema_version")
        if version != SCHEMA_VERSION:
            raise BundleError(
                f"manifest schema_version {version!r}, expected {SCHEMA_VERSION}")
        return cls(d, manifest)

    def table(self, name: str) -> Table:
        return _read_table(self.directory / name)

    @property
    def derived(self) -> dict:
        return self.manifest.get("derived", {})

    @property
    def config(self) -> dict:
        return self.manifest.get("config", {})
