"""Populations and field maps over two-excitation sector vectors.

Everything here is a pure function of (basis, psi) built on the cached
index arrays of SectorBasis, so repeated evaluation while streaming a
trajectory stays O(dimension) with small constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import SectorBasis
from .dynamics import cls_projector_vector
from .errors import ConfigError


def _tp_weights(basis: SectorBasis, psi: np.ndarray) -> np.ndarray:
    return np.abs(psi[basis.two_photon_slice]) ** 2


def emitter_population(basis: SectorBasis, psi: np.ndarray, emitter: int = 0) -> float:
    """Probability that the given emitter is excited (photon-sharing and pair terms)."""
    n_emit = len(basis.model.emitters)
    if not (0 <= emitter < n_emit):
        raise ConfigError(f"emitter id {emitter} outside 0..{n_emit - 1}")
    total = float(np.sum(np.abs(psi[basis.emitter_photon_slice(emitter)]) ** 2))
    off = basis.pair_slice.start
    for k, (e1, e2) in enumerate(basis.emitter_pairs()):
        if emitter in (e1, e2):
            total += float(abs(psi[off + k]) ** 2)
    return total


def doublon_population(basis: SectorBasis, psi: np.ndarray) -> float:
    """Total weight of the purely photonic (two-photon) part."""
    return float(np.sum(_tp_weights(basis, psi)))


def cls_population(basis: SectorBasis, psi: np.ndarray, cell: int, level: float,
                   emitter: int = 0) -> float:
    """|<emitter excited; CLS(cell, level)|psi>|^2."""
    bra = cls_projector_vector(basis, emitter, cell, level)
    return float(abs(np.vdot(bra, psi)) ** 2)


def localized_population(basis: SectorBasis, psi: np.ndarray,
                         components, emitter: int = 0) -> float:
    """Overlap probability with a normalized CLS combination.

    components: iterable of (cell, level, weight); the reference vector is
    normalized before projecting, so weights carry relative amplitude only.
    """
    ref = np.zeros(basis.dimension, dtype=complex)
    for cell, level, weight in components:
        ref += weight * cls_projector_vector(basis, emitter, cell, level)
    norm = np.linalg.norm(ref)
    if norm < 1e-12:
        raise ConfigError("localized reference has zero norm")
    return float(abs(np.vdot(ref / norm, psi)) ** 2)


def photon_number_profile(basis: SectorBasis, psi: np.ndarray) -> np.ndarray:
    """<N(n)> per cell, summed over the three sublattices."""
    n = basis.model.lattice.n_cells
    w = _tp_weights(basis, psi)
    prof = np.bincount(basis.tp_cell_i, weights=w, minlength=n)
    prof += np.bincount(basis.tp_cell_j, weights=w, minlength=n)
    for e in range(len(basis.model.emitters)):
        we = np.abs(psi[basis.emitter_photon_slice(e)]) ** 2
        prof += np.bincount(np.arange(basis.n_sites) // 3, weights=we, minlength=n)
    return prof


@dataclass
class FieldMaps:
    """Marginals of the two-photon amplitude.

    mu: 3x3 weight over canonical (tau_left, tau_right) sublattice pairs.
    xc: center coordinates (n_i + n_j)/2; r: cell separations; xcr_weight
    aligned with both.  diag: same-site double occupancy per cell.
    """

    mu: np.ndarray
    xc: np.ndarray
    r: np.ndarray
    xcr_weight: np.ndarray
    diag: np.ndarray

    @property
    def total(self) -> float:
        return float(self.xcr_weight.sum())


def field_maps(basis: SectorBasis, psi: np.ndarray) -> FieldMaps:
    n = basis.model.lattice.n_cells
    w = _tp_weights(basis, psi)

    mu = np.bincount(basis.tp_sub_i * 3 + basis.tp_sub_j, weights=w,
                     minlength=9).reshape(3, 3)

    r = basis.tp_cell_j - basis.tp_cell_i
    x2 = basis.tp_cell_i + basis.tp_cell_j  # 2*x_c, integer
    key = x2 * n + r
    flat = np.bincount(key, weights=w, minlength=(2 * n - 1) * n)
    nz = np.nonzero(flat)[0]
    xc = (nz // n) / 2.0
    rr = nz % n

    same = basis.tp_i == basis.tp_j
    diag = np.bincount(basis.tp_cell_i[same], weights=w[same], minlength=n)
    return FieldMaps(mu=mu, xc=xc, r=rr, xcr_weight=flat[nz], diag=diag)


@dataclass
class Chirality:
    """Two-photon weight split by side; factors are NaN when nothing propagates."""

    p_right: float
    p_left: float
    c_right: float
    c_left: float


def chirality(basis: SectorBasis, psi: np.ndarray, origin: float) -> Chirality:
    """Strict split: both photon cells beyond `origin` count as that side.

    origin may be half-integer (midpoint between the legs of a two-leg
    emitter); cells equal to the origin belong to neither side.
    """
    w = _tp_weights(basis, psi)
    right = (basis.tp_cell_i > origin) & (basis.tp_cell_j > origin)
    left = (basis.tp_cell_i < origin) & (basis.tp_cell_j < origin)
    p_r = float(w[right].sum())
    p_l = float(w[left].sum())
    tot = p_r + p_l
    if tot <= 0.0:
        return Chirality(p_r, p_l, math.nan, math.nan)
    return Chirality(p_r, p_l, p_r / tot, p_l / tot)
