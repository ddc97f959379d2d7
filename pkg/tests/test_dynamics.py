import cmath
import math

import numpy as np
import pytest
import scipy.linalg as sla

from doublonlab.assembly import assemble, dense
from doublonlab.dynamics import (CLSExcitation, InitialStateSpec,
                                 PointExcitation, evolve, prepare_state,
                                 spectral_bounds)
from doublonlab.errors import ConfigError
from doublonlab.lattice import (EmitterLeg, EmitterSpec, LatticeSpec, site,
                                validate_model)


def small_h(g=0.02, n_cells=4, omega=4.02):
    lat = LatticeSpec(n_cells=n_cells, nonlinearity=4.0, boundary="open")
    em = EmitterSpec(omega, (EmitterLeg(site(1, "A"), g, 0.0),))
    return assemble(validate_model(lat, [em]))


def test_evolve_matches_dense_expm():
    h = small_h()
    d = dense(h)
    rng = np.random.default_rng(3)
    psi0 = rng.normal(size=d.shape[0]) + 1j * rng.normal(size=d.shape[0])
    psi0 /= np.linalg.norm(psi0)
    times = np.array([0.0, 0.7, 1.9, 5.0])
    traj = evolve(h, psi0, times, tol=1e-11, store_states=True)
    for t, psi in zip(times, traj.states):
        exact = sla.expm(-1j * t * d) @ psi0
        assert np.linalg.norm(psi - exact) < 1e-9


def test_eigenstate_accumulates_only_phase():
    h = small_h()
    d = dense(h)
    evals, vecs = np.linalg.eigh(d)
    k = len(evals) // 2
    psi0 = vecs[:, k].astype(complex)
    times = np.array([0.0, 3.0, 11.0])
    traj = evolve(h, psi0, times, tol=1e-11, store_states=True)
    for t, psi in zip(times, traj.states):
        assert np.linalg.norm(psi - cmath.exp(-1j * evals[k] * t) * psi0) < 1e-9


def test_decoupled_emitter_stays_excited():
    h = small_h(g=0.0)
    psi0 = prepare_state(InitialStateSpec((0,), (CLSExcitation(1, 2.0),)), h.basis)
    times = np.linspace(0.0, 40.0, 9)
    seen = []
    evolve(h, psi0, times, observer=lambda i, t, psi: seen.append(
        float(np.sum(np.abs(psi[h.basis.emitter_photon_slice(0)]) ** 2))))
    assert min(seen) > 1.0 - 1e-10


def test_evolve_certificates_and_validation():
    h = small_h()
    psi0 = prepare_state(InitialStateSpec((0,), (CLSExcitation(1, 2.0),)), h.basis)
    traj = evolve(h, psi0, np.array([0.0, 2.0, 4.0]))
    assert traj.norm_drift < 1e-10
    assert traj.energy_drift < 1e-10
    with pytest.raises(ConfigError):
        evolve(h, psi0, np.array([0.0, 2.0, 1.0]))
    with pytest.raises(ConfigError):
        evolve(h, psi0, np.array([0.0, 1.0]), tol=1e-3)
    with pytest.raises(ConfigError):
        evolve(h, 2.0 * psi0, np.array([0.0, 1.0]))


def test_spectral_bounds_contain_spectrum():
    h = small_h()
    evals = np.linalg.eigvalsh(dense(h))
    lo, hi = spectral_bounds(h)
    assert lo < evals[0] and hi > evals[-1]
    assert hi - lo < (evals[-1] - evals[0]) * 1.1 + 1.0


def test_prepare_state_point_equals_cls_sum():
    # a single A-site photon decomposes onto the +-2 cages with equal weight
    h = small_h()
    basis = h.basis
    point = prepare_state(InitialStateSpec((0,), (PointExcitation(site(1, "A")),)),
                          basis)
    combo = prepare_state(InitialStateSpec((0,), (CLSExcitation(1, 2.0, 1.0),
                                                  CLSExcitation(1, -2.0, 1.0))),
                          basis)
    assert np.linalg.norm(point - combo) < 1e-12
    assert abs(np.linalg.norm(point) - 1.0) < 1e-12


def test_prepare_state_weights_and_errors():
    h = small_h(n_cells=5)
    spec = InitialStateSpec((0,), (CLSExcitation(1, 2.0, math.sqrt(2.0)),
                                   CLSExcitation(2, 2.0, 1.0)))
    psi = prepare_state(spec, h.basis)
    assert abs(np.linalg.norm(psi) - 1.0) < 1e-12
    with pytest.raises(ConfigError):
        InitialStateSpec((0, 0))
    with pytest.raises(ConfigError):
        InitialStateSpec((0,))  # one excitation short
    with pytest.raises(ConfigError):
        prepare_state(InitialStateSpec((0,), (CLSExcitation(1, 1.5),)), h.basis)
    with pytest.raises(ConfigError):
        prepare_state(InitialStateSpec((4,), (CLSExcitation(1, 2.0),)), h.basis)


def test_two_excited_emitters_pair_state():
    lat = LatticeSpec(n_cells=3, nonlinearity=4.0)
    ems = [EmitterSpec(4.0, (EmitterLeg(site(0, "A"), 0.01, 0.0),)),
           EmitterSpec(3.0, (EmitterLeg(site(1, "A"), 0.01, 0.0),))]
    h = assemble(validate_model(lat, ems))
    psi = prepare_state(InitialStateSpec((0, 1)), h.basis)
    assert abs(psi[h.basis.index_of_pair(0, 1)] - 1.0) < 1e-14
