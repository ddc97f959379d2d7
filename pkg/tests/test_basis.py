import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from doublonlab.basis import (EmitterPair, EmitterPhoton, SectorBasis,
                              TwoPhoton, two_photon, two_photon_amplitude)
from doublonlab.errors import ConfigError
from doublonlab.lattice import (EmitterLeg, EmitterSpec, LatticeSpec,
                                SiteIndex, site, validate_model)


def make_basis(n_cells=3, n_emitters=2) -> SectorBasis:
    lat = LatticeSpec(n_cells=n_cells)
    ems = [EmitterSpec(4.0 + e, (EmitterLeg(site(e, "A"), 0.1, 0.0),))
           for e in range(n_emitters)]
    return SectorBasis(validate_model(lat, ems))


def test_dimension_formula():
    for n, e in ((3, 0), (3, 1), (4, 2), (5, 3)):
        basis = make_basis(n, e)
        m = 3 * n
        assert basis.dimension == m * (m + 1) // 2 + e * m + e * (e - 1) // 2


def test_state_index_round_trip():
    basis = make_basis(3, 2)
    for k in range(basis.dimension):
        assert basis.index_of(basis.state_at(k)) == k


def test_slices_partition_dimension():
    basis = make_basis(3, 2)
    tp = basis.two_photon_slice
    assert tp.start == 0
    cursor = tp.stop
    for e in range(2):
        s = basis.emitter_photon_slice(e)
        assert s.start == cursor
        cursor = s.stop
    assert basis.pair_slice.start == cursor
    assert basis.pair_slice.stop == basis.dimension


@given(st.integers(0, 8), st.integers(0, 8))
@settings(max_examples=60, deadline=None)
def test_two_photon_canonical_order(fi, fj):
    a, b = SiteIndex.from_flat(fi), SiteIndex.from_flat(fj)
    assert two_photon(a, b) == two_photon(b, a)
    st_ = two_photon(a, b)
    assert st_.i.flat <= st_.j.flat


def test_two_photon_amplitude_order_insensitive():
    basis = make_basis(3, 0)
    v = np.zeros(basis.dimension, dtype=complex)
    a, b = site(1, "B"), site(0, "A")
    v[basis.index_of(two_photon(a, b))] = 0.5 + 0.25j
    assert abs(two_photon_amplitude(basis, v, a, b) - (0.5 + 0.25j)) < 1e-14
    assert abs(two_photon_amplitude(basis, v, b, a) - (0.5 + 0.25j)) < 1e-14
    v[basis.index_of(two_photon(a, a))] = 1.0
    assert abs(two_photon_amplitude(basis, v, a, a) - 1.0) < 1e-14


def test_pair_ordering_and_lookup():
    basis = make_basis(3, 3)
    ks = [basis.index_of_pair(e1, e2) for e1, e2 in basis.emitter_pairs()]
    assert ks == sorted(ks)
    assert basis.index_of(EmitterPair(0, 2)) == basis.index_of_pair(0, 2)
    with pytest.raises(ValueError):
        basis.index_of(EmitterPhoton(5, site(0, "A")))
