"""Rhombic chain with a gauge flux, plus two-level emitters side-coupled to it.

The chain has three sites per unit cell (sublattices A, B, C).  Every A site
is linked to the B and C sites of its own cell and of the next cell with
amplitude -J; the single A_n <-> C_n link inside a cell carries the extra
gauge factor exp(-i*alpha), so each rhombic plaquette encloses flux alpha.
At alpha = pi the single-photon spectrum collapses onto the three flat
levels {0, +2J, -2J} and every eigenstate can be chosen compactly localized.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import ConfigError

SUBLATTICES = ("A", "B", "C")


class Sublattice(enum.IntEnum):
    """Sublattice label inside one unit cell; the value is the intra-cell offset."""

    A = 0
    B = 1
    C = 2

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class SiteIndex:
    """A lattice site identified by unit cell and sublattice.

    Ordering and the flat index follow 3*cell + sublattice, so sites sort
    left to right along the chain with A < B < C inside a cell.
    """

    cell: int
    sub: Sublattice

    @property
    def flat(self) -> int:
        return 3 * self.cell + int(self.sub)

    @staticmethod
    def from_flat(flat: int) -> "SiteIndex":
        if flat < 0:
            raise ValueError(f"negative flat site index {flat}")
        return SiteIndex(flat // 3, Sublattice(flat % 3))

    def __repr__(self) -> str:
        return f"{self.sub}{self.cell}"


def site(cell: int, sub: str | Sublattice) -> SiteIndex:
    """Shorthand constructor, e.g. site(4, "B")."""
    if isinstance(sub, str):
        sub = Sublattice[sub]
    return SiteIndex(cell, sub)


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry and couplings of the photonic chain.

    Energies are measured in units of the hopping J and time in 1/J, so
    ``hopping`` is normally left at 1.  ``gauge_phase`` is reduced into
    [0, 2*pi) on construction, which keeps matrices for alpha and
    alpha + 2*pi bitwise identical.
    """

    n_cells: int
    hopping: float = 1.0
    gauge_phase: float = math.pi
    nonlinearity: float = 0.0
    boundary: str = "open"

    def __post_init__(self) -> None:
        if self.n_cells < 3:
            raise ConfigError(f"n_cells must be >= 3, got {self.n_cells}")
        if not (self.hopping > 0.0):
            raise ConfigError(f"hopping must be positive, got {self.hopping}")
        if self.nonlinearity < 0.0:
            raise ConfigError(f"nonlinearity must be >= 0, got {self.nonlinearity}")
        if self.boundary not in ("open", "periodic"):
            raise ConfigError(f"boundary must be 'open' or 'periodic', got {self.boundary!r}")
        alpha = math.fmod(self.gauge_phase, 2.0 * math.pi)
        if alpha < 0.0:
            alpha += 2.0 * math.pi
        object.__setattr__(self, "gauge_phase", alpha)

    @property
    def n_sites(self) -> int:
        return 3 * self.n_cells

    @property
    def gauge_factor(self) -> complex:
        """exp(-i*alpha) on the phased intra-cell link; exact -1 at alpha = pi."""
        if self.gauge_phase == math.pi:
            return -1.0 + 0.0j
        return complex(math.cos(self.gauge_phase), -math.sin(self.gauge_phase))


@dataclass(frozen=True)
class EmitterLeg:
    """One coupling point of an emitter: lattice site, strength and phase."""

    site: SiteIndex
    amplitude: float
    phase: float = 0.0

    @property
    def coupling(self) -> complex:
        return self.amplitude * complex(math.cos(self.phase), math.sin(self.phase))


@dataclass(frozen=True)
class EmitterSpec:
    """A two-level emitter attached to one (small) or several (giant) sites."""

    frequency: float
    legs: tuple[EmitterLeg, ...]

    def __post_init__(self) -> None:
        if len(self.legs) == 0:
            raise ConfigError("emitter needs at least one leg")
        sites = [leg.site for leg in self.legs]
        if len(set(sites)) != len(sites):
            raise ConfigError(f"emitter leg sites must be distinct, got {sites}")
        for leg in self.legs:
            if leg.amplitude < 0.0:
                raise ConfigError(f"leg amplitude must be >= 0, got {leg.amplitude}")


@dataclass(frozen=True)
class Model:
    """Validated lattice-plus-emitters descriptor used by every later stage."""

    lattice: LatticeSpec
    emitters: tuple[EmitterSpec, ...] = field(default_factory=tuple)


def validate_model(lattice: LatticeSpec, emitters=()) -> Model:
    """Check cross-references between the lattice and the emitters.

    Raises ConfigError naming the offending field; returns the bundled
    descriptor on success.
    """
    emitters = tuple(emitters)
    for k, em in enumerate(emitters):
        for leg in em.legs:
            if not (0 <= leg.site.cell < lattice.n_cells):
                raise ConfigError(
                    f"emitter {k}: leg site out of range, cell {leg.site.cell} "
                    f"not in [0, {lattice.n_cells})"
                )
    return Model(lattice, emitters)


def hopping_links(spec: LatticeSpec) -> Iterator[tuple[SiteIndex, SiteIndex, complex]]:
    """Yield each hopping link once as (a, b, t) with t = <a|H0|b>.

    All amplitudes are -J except the intra-cell A-C link, which carries
    -J * exp(-i*alpha) in the row-A column-C position.  An open chain drops
    the whole hub row of the final cell: its A site is left uncoupled and
    B/C of that cell attach to the previous hub only.  This is the unique
    3N-site truncation that keeps every remaining hub fully caged, so the
    flat single-photon spectrum {0, +-2J} survives the open boundary
    exactly instead of acquiring sqrt(2)-split edge modes.
    """
    j = spec.hopping
    g = spec.gauge_factor
    n = spec.n_cells
    last = n - 1 if spec.boundary == "open" else n
    for c in range(last):
        a = site(c, "A")
        yield a, site(c, "B"), -j
        yield a, site(c, "C"), -j * g
        nxt = (c + 1) % n
        yield a, site(nxt, "B"), -j
        yield a, site(nxt, "C"), -j


def single_particle_hamiltonian(spec: LatticeSpec) -> np.ndarray:
    """Dense Hermitian 3N x 3N single-photon Hamiltonian in flat site order."""
    h = np.zeros((spec.n_sites, spec.n_sites), dtype=complex)
    for a, b, t in hopping_links(spec):
        h[a.flat, b.flat] = t
        h[b.flat, a.flat] = np.conj(t)
    return h
