import math

import numpy as np
import pytest

from doublonlab.assembly import assemble
from doublonlab.basis import two_photon
from doublonlab.dynamics import CLSExcitation, InitialStateSpec, prepare_state
from doublonlab.errors import ConfigError
from doublonlab.lattice import (EmitterLeg, EmitterSpec, LatticeSpec, site,
                                validate_model)
from doublonlab.observables import (chirality, cls_population,
                                    doublon_population, emitter_population,
                                    field_maps, localized_population,
                                    photon_number_profile)


@pytest.fixture(scope="module")
def setup():
    lat = LatticeSpec(n_cells=8, nonlinearity=4.0, boundary="open")
    ems = [EmitterSpec(4.02, (EmitterLeg(site(3, "A"), 0.02, 0.0),)),
           EmitterSpec(3.0, (EmitterLeg(site(4, "A"), 0.07, 0.0),))]
    h = assemble(validate_model(lat, ems))
    return h.basis


def test_population_partition(setup):
    basis = setup
    rng = np.random.default_rng(11)
    psi = rng.normal(size=basis.dimension) + 1j * rng.normal(size=basis.dimension)
    psi /= np.linalg.norm(psi)
    p_e = emitter_population(basis, psi, 0)
    p_a = emitter_population(basis, psi, 1)
    p_d = doublon_population(basis, psi)
    pair = float(np.sum(np.abs(psi[basis.pair_slice]) ** 2))
    # the pair block is counted once per excited emitter
    assert abs(p_e + p_a + p_d - 1.0 - pair) < 1e-12


def test_cls_population_of_prepared_state(setup):
    basis = setup
    psi = prepare_state(InitialStateSpec((0,), (CLSExcitation(3, 2.0),)), basis)
    assert abs(cls_population(basis, psi, 3, 2.0) - 1.0) < 1e-12
    assert cls_population(basis, psi, 3, -2.0) < 1e-24
    assert cls_population(basis, psi, 4, 2.0) < 1e-24  # neighbour cage orthogonal


def test_localized_population_normalizes(setup):
    basis = setup
    psi = prepare_state(InitialStateSpec((0,), (CLSExcitation(3, -2.0, 1.0),
                                                CLSExcitation(4, -2.0, 1.0))),
                        basis)
    p = localized_population(basis, psi, [(3, -2.0, 1.0), (4, -2.0, 1.0)])
    assert abs(p - 1.0) < 1e-12
    with pytest.raises(ConfigError):
        localized_population(basis, psi, [(3, -2.0, 0.0)])


def test_photon_profile_counts_two_quanta(setup):
    basis = setup
    psi = np.zeros(basis.dimension, dtype=complex)
    psi[basis.index_of(two_photon(site(2, "B"), site(5, "C")))] = 1.0
    prof = photon_number_profile(basis, psi)
    assert abs(prof.sum() - 2.0) < 1e-12
    assert abs(prof[2] - 1.0) < 1e-12 and abs(prof[5] - 1.0) < 1e-12
    psi[:] = 0
    psi[basis.index_of(two_photon(site(2, "B"), site(2, "B")))] = 1.0
    prof = photon_number_profile(basis, psi)
    assert abs(prof[2] - 2.0) < 1e-12


def test_field_maps_hand_built(setup):
    basis = setup
    psi = np.zeros(basis.dimension, dtype=complex)
    psi[basis.index_of(two_photon(site(2, "A"), site(2, "A")))] = math.sqrt(0.5)
    psi[basis.index_of(two_photon(site(2, "A"), site(3, "B")))] = math.sqrt(0.5)
    maps = field_maps(basis, psi)
    assert abs(maps.mu[0, 0] - 0.5) < 1e-12  # (A,A)
    assert abs(maps.mu[0, 1] - 0.5) < 1e-12  # (A,B)
    got = {(x, r): w for x, r, w in zip(maps.xc, maps.r, maps.xcr_weight)}
    assert abs(got[(2.0, 0)] - 0.5) < 1e-12
    assert abs(got[(2.5, 1)] - 0.5) < 1e-12
    assert abs(maps.total - 1.0) < 1e-12


def test_chirality_strict_origin(setup):
    basis = setup
    psi = np.zeros(basis.dimension, dtype=complex)
    straddle = basis.index_of(two_photon(site(3, "A"), site(4, "A")))
    right = basis.index_of(two_photon(site(4, "B"), site(5, "B")))
    left = basis.index_of(two_photon(site(1, "C"), site(2, "C")))
    psi[straddle] = math.sqrt(0.2)
    psi[right] = math.sqrt(0.6)
    psi[left] = math.sqrt(0.2)
    ch = chirality(basis, psi, 3.5)
    # the straddling pair counts for neither side
    assert abs(ch.p_right - 0.6) < 1e-12
    assert abs(ch.p_left - 0.2) < 1e-12
    assert abs(ch.c_right - 0.75) < 1e-12
    assert abs(ch.c_left - 0.25) < 1e-12
    psi[:] = 0
    psi[basis.emitter_photon_slice(0).start] = 1.0
    ch = chirality(basis, psi, 3.5)
    assert ch.p_right == 0.0 and ch.p_left == 0.0
    assert math.isnan(ch.c_right) and math.isnan(ch.c_left)
