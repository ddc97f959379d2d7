"""Spectra of the two-photon sector: Bloch reduction, bands, compact modes.

The two-photon Hamiltonian of the translation-invariant chain commutes with
the joint shift of both photons by one cell, so it block-diagonalizes over
the center-of-mass momentum K.  The reduced block at K acts on amplitudes
psi(r, mu) labeled by the cell separation r >= 0 and the sublattice pair
mu; the center-of-mass coordinate x_c = (n + n')/2 carries the phase
e^{i K x_c}.  The block is built here by numerical symmetry projection:
apply the full Hamiltonian to one representative of each (r, mu) class on
a wide buffer chain and accumulate the images with Bloch phases.  No
analytic reduction is hard-coded.

At alpha = pi every single-photon state is caged, so doublon eigenvectors
are strictly compact in r and a small cutoff r_max is exact for them;
away from pi flux the cutoff acts as a hard wall in r.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .assembly import assemble
from .basis import SectorBasis, TwoPhoton
from .errors import ConfigError, NumericalError
from .lattice import LatticeSpec, SiteIndex, Sublattice, single_particle_hamiltonian, site, validate_model

_CAGE_OFFSETS = (("A", 0), ("B", 0), ("C", 0), ("B", 1), ("C", 1))

PairLabel = tuple[int, tuple[Sublattice, Sublattice]]


def sector_labels(r_max: int) -> tuple[PairLabel, ...]:
    """(r, (tau_left, tau_right)) labels: 6 unordered pairs at r=0, 9 ordered per r>=1."""
    labels: list[PairLabel] = []
    subs = list(Sublattice)
    for a in range(3):
        for b in range(a, 3):
            labels.append((0, (subs[a], subs[b])))
    for r in range(1, r_max + 1):
        for a in subs:
            for b in subs:
                labels.append((r, (a, b)))
    return tuple(labels)


@lru_cache(maxsize=32)
def _reduced_structure(hopping: float, gauge_phase: float, nonlinearity: float, r_max: int):
    """K-independent projection data: entries (row, col, value, x_shift).

    The reduced matrix element is sum over images of value * e^{i K x_shift}
    with x_shift the center-of-mass displacement between image and
    representative.  Built once per (J, alpha, U, r_max) on a buffer chain
    wide enough that no image touches a boundary.
    """
    labels = sector_labels(r_max)
    lab_pos = {lab: k for k, lab in enumerate(labels)}
    n_buf = r_max + 8
    anchor = 3
    buf = LatticeSpec(n_cells=n_buf, hopping=hopping, gauge_phase=gauge_phase,
                      nonlinearity=nonlinearity, boundary="open")
    ham = assemble(validate_model(buf, []))
    basis = ham.basis
    csc = ham.matrix.tocsc()
    rows, cols, vals, shifts = [], [], [], []
    for k_src, (r, (tl, tr)) in enumerate(labels):
        rep = TwoPhoton(site(anchor, tl), site(anchor + r, tr))
        x_src = anchor + r / 2.0
        col = csc[:, basis.index_of(rep)].tocoo()
        for b, v in zip(col.row, col.data):
            st = basis.state_at(int(b))
            n1, n2 = st.i.cell, st.j.cell
            rb = n2 - n1
            if rb > r_max:
                continue
            rows.append(lab_pos[(rb, (st.i.sub, st.j.sub))])
            cols.append(k_src)
            vals.append(v)
            shifts.append(n1 + rb / 2.0 - x_src)
    return labels, (np.array(rows), np.array(cols), np.array(vals, dtype=complex),
                    np.array(shifts))


@dataclass
class BlochSector:
    """Reduced two-photon Hamiltonian at fixed center-of-mass momentum K.

    energies are sorted descending so that band l (1-based, top to bottom)
    is energies[l-1]; vectors[:, l-1] is the matching eigenvector over
    labels.
    """

    momentum: float
    r_max: int
    labels: tuple[PairLabel, ...]
    hamiltonian: np.ndarray
    energies: np.ndarray
    vectors: np.ndarray

    @property
    def n_bands(self) -> int:
        return self.energies.shape[0]

    def label_index(self, r: int, mu: tuple[Sublattice, Sublattice]) -> int:
        try:
            return self.labels.index((r, mu))
        except ValueError:
            raise KeyError(f"no sector label (r={r}, mu={mu})") from None


def bloch_sector(lattice: LatticeSpec, momentum: float, r_max: int = 6) -> BlochSector:
    """Eigenproblem of the K block; boundary of `lattice` is irrelevant here."""
    if r_max < 2:
        raise ConfigError(f"r_max must be >= 2, got {r_max}")
    labels, (rows, cols, vals, shifts) = _reduced_structure(
        lattice.hopping, lattice.gauge_phase, lattice.nonlinearity, r_max)
    dim = len(labels)
    h = np.zeros((dim, dim), dtype=complex)
    # shift = x_row - x_col, so the plane-wave convention psi ~ e^{+iKx}
    # puts e^{-iK shift} on each image
    np.add.at(h, (rows, cols), vals * np.exp(-1j * momentum * shifts))
    res = np.max(np.abs(h - h.conj().T))
    if res > 1e-10:
        raise NumericalError(f"projected sector not Hermitian, residual {res:.2e}")
    h = 0.5 * (h + h.conj().T)
    evals, evecs = np.linalg.eigh(h)
    order = np.argsort(evals)[::-1]
    return BlochSector(momentum, r_max, labels, h, evals[order], evecs[:, order])


@dataclass
class BandStructure:
    momenta: np.ndarray
    energies: np.ndarray  # shape (n_bands, n_k), descending along axis 0
    flat: np.ndarray  # bool per band: max-min over the grid < 1e-8

    @property
    def n_bands(self) -> int:
        return self.energies.shape[0]

    def band(self, l: int) -> np.ndarray:
        if not (1 <= l <= self.n_bands):
            raise ConfigError(f"band index l={l} outside 1..{self.n_bands}")
        return self.energies[l - 1]


def band_structure(lattice: LatticeSpec, n_k: int = 256, r_max: int = 6,
                   k_min: float = -math.pi, k_max: float = math.pi) -> BandStructure:
    if n_k < 64:
        raise ConfigError(f"K grid must have >= 64 points, got {n_k}")
    ks = np.linspace(k_min, k_max, n_k)
    bands = np.column_stack([bloch_sector(lattice, k, r_max).energies for k in ks])
    flat = (bands.max(axis=1) - bands.min(axis=1)) < 1e-8
    return BandStructure(ks, bands, flat)


@dataclass
class DoublonWavefunction:
    """Phase-fixed eigenvector psi(r, mu) of one band at one K."""

    momentum: float
    band: int
    energy: float
    labels: tuple[PairLabel, ...]
    psi: np.ndarray
    degenerate: bool

    def value(self, r: int, mu) -> complex:
        pair = tuple(Sublattice[m] if isinstance(m, str) else m for m in mu)
        return complex(self.psi[self.labels.index((r, pair))])

    def weight_from(self, r_min: int) -> float:
        """Total probability at separations r >= r_min."""
        w = 0.0
        for k, (r, _) in enumerate(self.labels):
            if r >= r_min:
                w += abs(self.psi[k]) ** 2
        return float(w)


def _phase_reference(vec: np.ndarray) -> complex:
    """First entry whose magnitude ties the maximum within 1e-9 relative.

    Plain argmax is unstable when several entries tie up to rounding, which
    happens for every compact mode here; the tolerant first-match keeps the
    convention deterministic across BLAS builds.
    """
    mags = np.abs(vec)
    return complex(vec[int(np.argmax(mags >= mags.max() * (1.0 - 1e-9)))])


def doublon_wavefunction(sector: BlochSector, l: int) -> DoublonWavefunction:
    """Eigenvector of band l with the global phase pinned.

    The phase rule: rotate the doubly-occupied hub amplitude psi(0, AA)
    to the positive real axis; if it vanishes, use the entry of largest
    magnitude (first such entry on ties).  Levels degenerate within 1e-10
    at this K are flagged, since any rotation inside the degenerate plane
    is then equally valid.
    """
    if not (1 <= l <= sector.n_bands):
        raise ConfigError(f"band index l={l} outside 1..{sector.n_bands}")
    e = sector.energies[l - 1]
    gaps = np.abs(np.delete(sector.energies, l - 1) - e)
    psi = sector.vectors[:, l - 1].copy()
    aa = sector.label_index(0, (Sublattice.A, Sublattice.A))
    ref = psi[aa]
    if abs(ref) <= 1e-12 * np.max(np.abs(psi)):
        ref = _phase_reference(psi)
    psi *= cmath.exp(-1j * cmath.phase(ref))
    return DoublonWavefunction(sector.momentum, l, float(e), sector.labels, psi,
                               degenerate=bool(np.min(gaps) < 1e-10))


def _band_energy(lattice: LatticeSpec, l: int, k: float, r_max: int) -> float:
    sec = bloch_sector(lattice, k, r_max)
    if not (1 <= l <= sec.n_bands):
        raise ConfigError(f"band index l={l} outside 1..{sec.n_bands}")
    return float(sec.energies[l - 1])


def group_velocity(lattice: LatticeSpec, l: int, momentum: float, r_max: int = 6,
                   dk: float = 1e-4) -> float:
    """dE_l/dK by central differences, Richardson-checked by halving dk."""
    probe = [_band_energy(lattice, l, k, r_max)
             for k in np.linspace(0.1, math.pi - 0.1, 5)]
    if max(probe) - min(probe) < 1e-8:
        raise ConfigError(f"zero-velocity band: band {l} is flat")
    v1 = (_band_energy(lattice, l, momentum + dk, r_max)
          - _band_energy(lattice, l, momentum - dk, r_max)) / (2 * dk)
    h = dk / 2
    v2 = (_band_energy(lattice, l, momentum + h, r_max)
          - _band_energy(lattice, l, momentum - h, r_max)) / (2 * h)
    if abs(v1 - v2) > 1e-6:
        raise NumericalError(
            f"group velocity not converged: dk={dk} gives {v1}, dk/2 gives {v2}")
    return (4.0 * v2 - v1) / 3.0


def resonance_momentum(lattice: LatticeSpec, l: int, e_target: float, r_max: int = 6,
                       n_scan: int = 128) -> float:
    """K in (0, pi) with E_l(K) = e_target, located by scan plus bisection."""
    ks = np.linspace(1e-6, math.pi - 1e-6, n_scan)
    es = np.array([_band_energy(lattice, l, k, r_max) for k in ks])
    sign = np.sign(es - e_target)
    crossings = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    exact = np.nonzero(sign == 0)[0]
    if exact.size:
        return float(ks[exact[0]])
    if crossings.size == 0:
        raise ConfigError(
            f"off-resonant: E={e_target} outside band {l} range "
            f"[{es.min():.6f}, {es.max():.6f}]")
    lo, hi = ks[crossings[0]], ks[crossings[0] + 1]
    flo = _band_energy(lattice, l, lo, r_max) - e_target
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = _band_energy(lattice, l, mid, r_max) - e_target
        if abs(fm) < 1e-9:
            return float(mid)
        if flo * fm < 0:
            hi = mid
        else:
            lo, flo = mid, fm
    raise NumericalError(f"resonance bisection failed to reach 1e-9 on band {l}")


# --- compact localized single-photon modes ----------------------------------


@dataclass(frozen=True)
class CLSMode:
    """A strictly 5-site single-photon eigenstate at pi flux."""

    cell: int
    energy: float
    sites: tuple[SiteIndex, ...]
    amplitudes: tuple[complex, ...]

    def as_dict(self) -> dict[SiteIndex, complex]:
        return dict(zip(self.sites, self.amplitudes))


def _cage_sites(lattice: LatticeSpec, cell: int) -> tuple[SiteIndex, ...]:
    n = lattice.n_cells
    out = []
    for sub, off in _CAGE_OFFSETS:
        c = cell + off
        if c >= n:
            if lattice.boundary == "open":
                raise ConfigError(f"CLS cell {cell} needs cell {c}, chain has {n}")
            c -= n
        out.append(site(c, sub))
    return tuple(out)


def cls_modes(lattice: LatticeSpec, cell: int) -> dict[float, CLSMode]:
    """The three compact modes anchored at `cell`, keyed by energy {+2J, 0, -2J}.

    Restricting H0 to the five cage sites gives eigenvalues {+-2J, 0, 0, 0};
    only one combination per flat level is annihilated by the hop out of the
    cage, so the caged modes are selected as the null space of the leak map
    inside each restricted eigenspace.  Phases follow the module rule:
    largest-magnitude entry rotated to the positive real axis.
    """
    if abs(lattice.gauge_phase - math.pi) > 1e-12:
        raise ConfigError(f"caging requires pi flux, got alpha={lattice.gauge_phase}")
    if not (0 <= cell < lattice.n_cells):
        raise ConfigError(f"CLS cell {cell} outside [0, {lattice.n_cells})")
    cage = _cage_sites(lattice, cell)
    h = single_particle_hamiltonian(lattice)
    idx = [s.flat for s in cage]
    outside = np.setdiff1d(np.arange(lattice.n_sites), idx)
    h_cage = h[np.ix_(idx, idx)]
    leak = h[np.ix_(outside, idx)]
    evals, evecs = np.linalg.eigh(h_cage)
    j = lattice.hopping
    out: dict[float, CLSMode] = {}
    for target in (2.0 * j, 0.0, -2.0 * j):
        sub = evecs[:, np.abs(evals - target) < 1e-9 * max(1.0, j)]
        if sub.shape[1] == 0:
            raise NumericalError(f"no cage eigenvalue near {target}")
        _, s, vh = np.linalg.svd(leak @ sub)
        caged = np.count_nonzero(
            np.concatenate([s, np.zeros(sub.shape[1] - s.size)]) < 1e-10)
        if caged != 1:
            raise NumericalError(
                f"expected one caged mode at energy {target}, found {caged}")
        vec = sub @ vh.conj()[-1]
        vec = vec / np.linalg.norm(vec)
        vec = vec * cmath.exp(-1j * cmath.phase(_phase_reference(vec)))
        resid = np.max(np.abs(h[:, idx] @ vec - target * _embed(vec, idx, lattice.n_sites)))
        if resid > 1e-10:
            raise NumericalError(f"cage mode at {target} leaks, residual {resid:.2e}")
        out[target] = CLSMode(cell, target, cage, tuple(vec))
    return out


def _embed(vec: np.ndarray, idx: list[int], n: int) -> np.ndarray:
    full = np.zeros(n, dtype=complex)
    full[idx] = vec
    return full


# --- exact finite-ring reduction (oracle path) ------------------------------


def translation_orbits(basis: SectorBasis) -> list[tuple[int, list[int]]]:
    """Orbits of the one-cell shift on the two-photon block of a periodic ring.

    Returns (orbit length, [basis indices in shift order]).  Orbits are
    shorter than N only for antipodal same-sublattice pairs on even rings.
    """
    n = basis.model.lattice.n_cells
    s = basis.n_sites

    def shifted(k: int) -> int:
        fi, fj = int(basis.tp_i[k]), int(basis.tp_j[k])
        gi = ((fi // 3 + 1) % n) * 3 + fi % 3
        gj = ((fj // 3 + 1) % n) * 3 + fj % 3
        return basis.pair_index(min(gi, gj), max(gi, gj))

    seen = np.zeros(basis.n_two_photon, dtype=bool)
    orbits = []
    for k0 in range(basis.n_two_photon):
        if seen[k0]:
            continue
        orbit = [k0]
        seen[k0] = True
        k = shifted(k0)
        while k != k0:
            orbit.append(k)
            seen[k] = True
            k = shifted(k)
        orbits.append((len(orbit), orbit))
    return orbits


def ring_momentum_states(lattice: LatticeSpec, m: int):
    """Exact K = 2*pi*m/N block of the two-photon ring, by orbit projection.

    Returns (K, eigenvalues ascending, eigenvectors as columns in the full
    canonical two-photon basis).  The union of eigenvalues over all m is
    unitarily equivalent to the full spectrum, which is the oracle-equivalence
    check for the buffer-chain projection.
    """
    if lattice.boundary != "periodic":
        raise ConfigError("ring reduction needs a periodic lattice")
    n = lattice.n_cells
    k_val = 2.0 * math.pi * m / n
    ham = assemble(validate_model(lattice, []))
    basis = ham.basis
    cols = []
    for length, orbit in translation_orbits(basis):
        # the orbit survives in sector K iff e^{i K length} = 1
        if (m * length) % n != 0:
            continue
        vec = np.zeros(basis.dimension, dtype=complex)
        # e^{+iKt} coefficients make the column a e^{+iKx} plane wave,
        # matching the bloch_sector convention
        for t, kk in enumerate(orbit):
            vec[kk] = cmath.exp(1j * k_val * t) / math.sqrt(length)
        cols.append(vec)
    b = np.column_stack(cols)
    h_k = b.conj().T @ (ham.matrix @ b)
    h_k = 0.5 * (h_k + h_k.conj().T)
    evals, evecs = np.linalg.eigh(h_k)
    return k_val, evals, b @ evecs


def ring_spectra(lattice: LatticeSpec) -> list[tuple[float, np.ndarray]]:
    """Eigenvalues of every commensurate momentum block of the ring."""
    return [(k, e) for k, e, _ in
            (ring_momentum_states(lattice, m) for m in range(lattice.n_cells))]


# --- text export ------------------------------------------------------------


def write_bands_csv(path, bands: BandStructure) -> None:
    """Columnar dump: K then E_1..E_L (top band first)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["K"] + [f"E_{l}" for l in range(1, bands.n_bands + 1)])
        for a, k in enumerate(bands.momenta):
            w.writerow([repr(float(k))] + [repr(float(e)) for e in bands.energies[:, a]])


def write_wavefunction_csv(path, wf: DoublonWavefunction) -> None:
    """Rows (K, l, r, tau_left, tau_right, Re psi, Im psi)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["K", "l", "r", "tau_left", "tau_right", "re_psi", "im_psi"])
        for (r, (tl, tr)), amp in zip(wf.labels, wf.psi):
            w.writerow([repr(float(wf.momentum)), wf.band, r, str(tl), str(tr),
                        repr(float(amp.real)), repr(float(amp.imag))])
