"""Sparse Hamiltonian of the two-excitation sector.

Matrix elements, with t_ab = <a|H0|b> from the single-photon problem:

* photon hopping with a spectator photon carries t_ab unchanged;
* hopping into or out of a doubly occupied site carries sqrt(2) * t_ab
  (bosonic enhancement of the normalized |2> state);
* the onsite nonlinearity contributes the diagonal U on every |2_i>,
  i.e. (U/2) n (n - 1) evaluated at n = 2;
* each excited emitter contributes its bare frequency on the diagonal;
* an emitter leg with coupling g e^{i phi} at site L connects
  EmitterPhoton(e, j) to TwoPhoton(L, j), again with sqrt(2) when j = L,
  and EmitterPair states to the partner emitter's photon states.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .basis import SectorBasis
from .lattice import Model, hopping_links

_MAGIC = b"DLH1"


@dataclass
class SparseHermitian:
    """CSR Hamiltonian plus its basis; entries are stored conjugate-symmetrically."""

    basis: SectorBasis
    matrix: sp.csr_matrix

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    @property
    def nnz(self) -> int:
        return self.matrix.nnz


def _pair_index_vec(basis: SectorBasis, fi: np.ndarray, fj: np.ndarray) -> np.ndarray:
    lo = np.minimum(fi, fj)
    hi = np.maximum(fi, fj)
    s = basis.n_sites
    return lo * (2 * s - lo + 1) // 2 + (hi - lo)


def assemble(model: Model) -> SparseHermitian:
    """Build the sector Hamiltonian of a validated model."""
    basis = SectorBasis(model)
    s = basis.n_sites
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []

    def add(r, c, v) -> None:
        r = np.atleast_1d(np.asarray(r, dtype=np.int64))
        c = np.atleast_1d(np.asarray(c, dtype=np.int64))
        v = np.broadcast_to(np.asarray(v, dtype=complex), r.shape)
        rows.extend((r, c))
        cols.extend((c, r))
        vals.extend((v, np.conj(v)))

    all_sites = np.arange(s)
    for a, b, t in hopping_links(model.lattice):
        fa, fb = a.flat, b.flat
        spect = all_sites[(all_sites != fa) & (all_sites != fb)]
        add(_pair_index_vec(basis, np.full_like(spect, fa), spect),
            _pair_index_vec(basis, np.full_like(spect, fb), spect), t)
        root2t = np.sqrt(2.0) * t
        pair_ab = basis.pair_index(min(fa, fb), max(fa, fb))
        add(pair_ab, basis.pair_index(fb, fb), root2t)
        add(basis.pair_index(fa, fa), pair_ab, root2t)
        # the lone photon keeps hopping while an emitter holds the other excitation
        for e in range(basis.n_emitters):
            ep0 = basis.emitter_photon_slice(e).start
            add(ep0 + fa, ep0 + fb, t)

    diag = np.zeros(basis.dimension)
    u = model.lattice.nonlinearity
    if u != 0.0:
        dbl = _pair_index_vec(basis, all_sites, all_sites)
        diag[dbl] += u
    for e, em in enumerate(model.emitters):
        diag[basis.emitter_photon_slice(e)] += em.frequency
    k = basis.n_two_photon + basis.n_emitter_photon
    for e1 in range(basis.n_emitters):
        for e2 in range(e1 + 1, basis.n_emitters):
            diag[k] = model.emitters[e1].frequency + model.emitters[e2].frequency
            k += 1

    for e, em in enumerate(model.emitters):
        ep0 = basis.emitter_photon_slice(e).start
        for leg in em.legs:
            fl = leg.site.flat
            g = leg.coupling
            # <TwoPhoton(L, j)| H |EmitterPhoton(e, j)> = g * (sqrt(2) if j == L)
            tp = _pair_index_vec(basis, np.full_like(all_sites, fl), all_sites)
            kappa = np.where(all_sites == fl, np.sqrt(2.0), 1.0)
            add(tp, ep0 + all_sites, g * kappa)
            # de-exciting one member of an emitter pair leaves the partner excited
            for other in range(basis.n_emitters):
                if other == e:
                    continue
                pair = basis.index_of_pair(min(e, other), max(e, other))
                add(basis.emitter_photon_slice(other).start + fl, pair, g)

    rows.append(np.arange(basis.dimension)[diag != 0.0])
    cols.append(np.arange(basis.dimension)[diag != 0.0])
    vals.append(diag[diag != 0.0].astype(complex))

    h = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(basis.dimension, basis.dimension),
    ).tocsr()
    h.sum_duplicates()
    return SparseHermitian(basis, h)


def apply(h: SparseHermitian, v: np.ndarray) -> np.ndarray:
    """H @ v with a dimension check."""
    if v.shape[0] != h.dimension:
        raise ValueError(f"vector length {v.shape[0]} != Hamiltonian dimension {h.dimension}")
    return h.matrix @ v


def dense(h: SparseHermitian) -> np.ndarray:
    return h.matrix.toarray()


def max_row_degree(h: SparseHermitian) -> int:
    return int(np.max(np.diff(h.matrix.indptr)))


def save_binary(h: SparseHermitian, path) -> None:
    """Dump the upper triangle plus diagonal as little-endian triplets.

    Layout: magic "DLH1", dimension (int64), triplet count (int64), then
    per entry row (int64), col (int64), Re (float64), Im (float64).
    """
    coo = sp.triu(h.matrix, k=0).tocoo()
    rec = np.empty(coo.nnz, dtype=[("r", "<i8"), ("c", "<i8"), ("re", "<f8"), ("im", "<f8")])
    rec["r"], rec["c"] = coo.row, coo.col
    rec["re"], rec["im"] = coo.data.real, coo.data.imag
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<qq", h.dimension, coo.nnz))
        rec.tofile(fh)


def load_binary(path, basis: SectorBasis) -> SparseHermitian:
    """Inverse of save_binary; restores the full conjugate-symmetric matrix."""
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"{path}: not a Hamiltonian dump")
        dim, nnz = struct.unpack("<qq", fh.read(16))
        if dim != basis.dimension:
            raise ValueError(f"{path}: dimension {dim} != basis dimension {basis.dimension}")
        rec = np.fromfile(fh, dtype=[("r", "<i8"), ("c", "<i8"), ("re", "<f8"), ("im", "<f8")],
                          count=nnz)
    upper = sp.coo_matrix((rec["re"] + 1j * rec["im"], (rec["r"], rec["c"])), shape=(dim, dim))
    strict = sp.triu(upper, k=1)
    full = (upper + strict.conj().T).tocsr()
    return SparseHermitian(basis, full)
