"""Canonical basis of the two-excitation sector.

Three families of basis states, concatenated in this order:

* ``TwoPhoton(i, j)`` with flat(i) <= flat(j), all emitters in the ground
  state.  For i == j this is the normalized doubly occupied Fock state
  (a_i^dag)^2 / sqrt(2) |vac>, so hopping matrix elements into and out of
  it carry an explicit sqrt(2).
* ``EmitterPhoton(e, site)``: emitter e excited plus one photon.
* ``EmitterPair(e1, e2)`` with e1 < e2: two emitters excited, no photons.

Two-photon states run lexicographically in (flat(i), flat(j)), then the
emitter-photon block ordered by (emitter, flat site), then emitter pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np

from .lattice import Model, SiteIndex


@dataclass(frozen=True)
class TwoPhoton:
    """Photon pair on sites i, j; canonical order flat(i) <= flat(j) is enforced."""

    i: SiteIndex
    j: SiteIndex

    def __post_init__(self) -> None:
        if self.i.flat > self.j.flat:
            raise ValueError(f"non-canonical ordering: TwoPhoton({self.i}, {self.j})")


@dataclass(frozen=True)
class EmitterPhoton:
    emitter: int
    site: SiteIndex


@dataclass(frozen=True)
class EmitterPair:
    e1: int
    e2: int

    def __post_init__(self) -> None:
        if self.e1 >= self.e2:
            raise ValueError(f"non-canonical ordering: EmitterPair({self.e1}, {self.e2})")


BasisState = Union[TwoPhoton, EmitterPhoton, EmitterPair]


def two_photon(i: SiteIndex, j: SiteIndex) -> TwoPhoton:
    """Canonicalizing constructor: accepts the pair in either order."""
    if i.flat > j.flat:
        i, j = j, i
    return TwoPhoton(i, j)


class SectorBasis:
    """Index bookkeeping for the two-excitation sector of a model.

    index_of and state_at are O(1); cell/sublattice lookup tables for the
    two-photon block are cached as numpy arrays for vectorized observables.
    """

    def __init__(self, model: Model):
        self.model = model
        self.n_sites = model.lattice.n_sites
        self.n_emitters = len(model.emitters)
        s, e = self.n_sites, self.n_emitters
        self.n_two_photon = s * (s + 1) // 2
        self.n_emitter_photon = e * s
        self.n_pairs = e * (e - 1) // 2
        self.dimension = self.n_two_photon + self.n_emitter_photon + self.n_pairs
        # flat site indices (i, j) of every two-photon basis state, in order
        i_idx = np.repeat(np.arange(s), np.arange(s, 0, -1))
        j_idx = np.concatenate([np.arange(i, s) for i in range(s)]) if s else np.array([], int)
        self.tp_i = i_idx
        self.tp_j = j_idx
        self.tp_cell_i = i_idx // 3
        self.tp_cell_j = j_idx // 3
        self.tp_sub_i = i_idx % 3
        self.tp_sub_j = j_idx % 3

    def pair_index(self, fi: int, fj: int) -> int:
        """Index of TwoPhoton with flat sites fi <= fj."""
        s = self.n_sites
        return fi * (2 * s - fi + 1) // 2 + (fj - fi)

    def index_of(self, state: BasisState) -> int:
        if isinstance(state, TwoPhoton):
            fi, fj = state.i.flat, state.j.flat
            if fj >= self.n_sites:
                raise ValueError(f"site {state.j} outside lattice of {self.n_sites} sites")
            return self.pair_index(fi, fj)
        if isinstance(state, EmitterPhoton):
            if not (0 <= state.emitter < self.n_emitters):
                raise ValueError(f"unknown emitter {state.emitter}")
            f = state.site.flat
            if f >= self.n_sites:
                raise ValueError(f"site {state.site} outside lattice of {self.n_sites} sites")
            return self.n_two_photon + state.emitter * self.n_sites + f
        if isinstance(state, EmitterPair):
            if state.e2 >= self.n_emitters:
                raise ValueError(f"unknown emitter {state.e2}")
            e1, e2 = state.e1, state.e2
            # pairs (0,1), (0,2), ..., (1,2), ... lexicographic
            e = self.n_emitters
            off = e1 * (2 * e - e1 - 1) // 2 + (e2 - e1 - 1)
            return self.n_two_photon + self.n_emitter_photon + off
        raise TypeError(f"not a basis state: {state!r}")

    def index_of_pair(self, e1: int, e2: int) -> int:
        return self.index_of(EmitterPair(e1, e2))

    def state_at(self, k: int) -> BasisState:
        if not (0 <= k < self.dimension):
            raise IndexError(f"basis index {k} outside dimension {self.dimension}")
        if k < self.n_two_photon:
            fi, fj = int(self.tp_i[k]), int(self.tp_j[k])
            return TwoPhoton(SiteIndex.from_flat(fi), SiteIndex.from_flat(fj))
        k -= self.n_two_photon
        if k < self.n_emitter_photon:
            return EmitterPhoton(k // self.n_sites, SiteIndex.from_flat(k % self.n_sites))
        k -= self.n_emitter_photon
        for e1 in range(self.n_emitters):
            block = self.n_emitters - e1 - 1
            if k < block:
                return EmitterPair(e1, e1 + 1 + k)
            k -= block
        raise AssertionError("unreachable")

    def __len__(self) -> int:
        return self.dimension

    def __iter__(self) -> Iterator[BasisState]:
        return (self.state_at(k) for k in range(self.dimension))

    # --- sector slices -------------------------------------------------

    @property
    def two_photon_slice(self) -> slice:
        return slice(0, self.n_two_photon)

    def emitter_photon_slice(self, emitter: int) -> slice:
        if not (0 <= emitter < self.n_emitters):
            raise ValueError(f"unknown emitter {emitter}")
        start = self.n_two_photon + emitter * self.n_sites
        return slice(start, start + self.n_sites)

    @property
    def pair_slice(self) -> slice:
        return slice(self.n_two_photon + self.n_emitter_photon, self.dimension)

    def emitter_pairs(self) -> Iterator[tuple[int, int]]:
        """(e1, e2) with e1 < e2 in the order of the pair block."""
        for e1 in range(self.n_emitters):
            for e2 in range(e1 + 1, self.n_emitters):
                yield e1, e2


def two_photon_amplitude(basis: SectorBasis, v: np.ndarray, i: SiteIndex, j: SiteIndex) -> complex:
    """Amplitude of the canonical pair state for sites (i, j) in either order."""
    if v.shape[0] != basis.dimension:
        raise ValueError(f"vector length {v.shape[0]} != basis dimension {basis.dimension}")
    fi, fj = i.flat, j.flat
    if fi > fj:
        fi, fj = fj, fi
    return complex(v[basis.pair_index(fi, fj)])
