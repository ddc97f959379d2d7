"""Render figures from doublonlab bundles.

Every function takes a loaded RunBundle and an output path, writes one
image, and returns the path.  Bundles are never written to.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .bundle import BundleError, RunBundle

_FLAT_TOL = 1e-8


def plot_bands(bundle: RunBundle, out) -> Path:
    """Band energies over the momentum grid, flat bands highlighted."""
    tab = bundle.table("bands.csv")
    tab.require("K", "E_1")
    k = tab.column("K")
    names = [c for c in tab.header if c.startswith("E_")]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    seen = {"flat": False, "disp": False}
    for name in names:
        e = tab.column(name)
        flat = (e.max() - e.min()) < _FLAT_TOL
        kind = "flat" if flat else "disp"
        label = None
        if not seen[kind]:
            label = "flat" if flat else "dispersive"
            seen[kind] = True
        style = dict(color="crimson", lw=1.0) if flat else dict(color="C0", lw=1.6)
        if k.size > 1:
            ax.plot(k, e, label=label, **style)
        else:
            ax.scatter(k, e, color=style["color"], label=label)
    ax.set_xlabel("K")
    ax.set_ylabel("E / J")
    ax.set_title("two-photon bands")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, out)


def plot_populations(bundle: RunBundle, out) -> Path:
    """Population curves over time with the analytic decay overlay."""
    tab = bundle.table("observables.csv")
    tab.require("t", "P_e")
    t = tab.column("t")
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    ax.plot(t, tab.column("P_e"), label="P_e", lw=1.8)
    for name in tab.header:
        if name in ("P_a", "P_D", "C_R", "C_L") or name.startswith("cls:"):
            ax.plot(t, tab.column(name), label=name, lw=1.2)
    gamma = bundle.derived.get("resonance", {}).get("gamma_analytic")
    if gamma is not None:
        ax.plot(t, np.exp(-float(gamma) * t), "k--", lw=1.0,
                label=f"exp(-{float(gamma):.2e} t)")
    ax.set_xlabel("t J")
    ax.set_ylabel("population")
    ax.set_ylim(-0.02, 1.05)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, out)


def plot_field(bundle: RunBundle, out) -> Path:
    """Final field: sublattice-pair bubbles and the center/separation map."""
    tab = bundle.table("field_final.csv")
    tab.require("table", "a", "b", "value")
    mu_rows = [r for r in tab.rows if r[tab.header.index("table")] == "mu"]
    xcr_rows = [r for r in tab.rows if r[tab.header.index("table")] == "xcr"]
    if not mu_rows:
        raise BundleError("field_final.csv: no 'mu' rows")
    ia, ib, iv = (tab.header.index(c) for c in ("a", "b", "value"))
    subs = ("A", "B", "C")
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    for r in mu_rows:
        x, y = subs.index(r[ia]), subs.index(r[ib])
        w = float(r[iv])
        ax1.scatter([x], [y], s=4000 * w + 1, color="C0", alpha=0.7)
        ax1.annotate(f"{w:.2f}", (x, y), ha="center", va="center", fontsize=7)
    ax1.set_xticks(range(3), subs)
    ax1.set_yticks(range(3), subs)
    ax1.set_xlim(-0.5, 2.5)
    ax1.set_ylim(-0.5, 2.5)
    ax1.set_title("sublattice pair weight")
    if xcr_rows:
        xc = np.array([float(r[ia]) for r in xcr_rows])
        rr = np.array([float(r[ib]) for r in xcr_rows])
        w = np.array([float(r[iv]) for r in xcr_rows])
        sc = ax2.scatter(xc, rr, c=w, s=14, cmap="viridis", marker="s")
        fig.colorbar(sc, ax=ax2, label="weight")
    ax2.set_xlabel("center x_c")
    ax2.set_ylabel("separation r")
    ax2.set_title("center/separation weight")
    fig.tight_layout()
    return _save(fig, out)


def plot_lightcone(bundle: RunBundle, out) -> Path:
    """Photon number over cell and time."""
    tab = bundle.table("lightcone.csv")
    tab.require("t")
    cells = [c for c in tab.header if c != "t"]
    if not cells:
        raise BundleError("lightcone.csv: no cell columns besides t")
    t = tab.column("t")
    z = tab.matrix(cells)
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    mesh = ax.pcolormesh(np.arange(len(cells)), t, z, cmap="magma",
                         shading="nearest")
    fig.colorbar(mesh, ax=ax, label="photon number")
    ax.set_xlabel("cell n")
    ax.set_ylabel("t J")
    fig.tight_layout()
    return _save(fig, out)


def _save(fig, out) -> Path:
    path = Path(out)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


KINDS = {
    "bands": plot_bands,
    "populations": plot_populations,
    "field": plot_field,
    "lightcone": plot_lightcone,
}
