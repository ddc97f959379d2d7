"""Declarative scenario layer: configs, presets, and the run orchestrator.

A scenario config is a small JSON document of flat, typed sections.  Unknown
keys are rejected with their dotted path so a typo in a physics parameter
cannot silently fall back to a default.  Parsing then serializing then
parsing yields the identical config, and dump-config emits the normalized
form with every populated key.

Presets pin the parameter sets of the standard demonstrations: band
structure, the triggered decay and its forbidden and detuning variants,
plateau scenarios for partially matched initial photons, and the two-leg
phased emitter with and without the auxiliary cancellation emitter.  CI
variants shrink the chain and nothing else.
"""

from __future__ import annotations

import math
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import json

import numpy as np

from .analytics import (auxiliary_matching, effective_coupling_doublon,
                        fit_exponential, giant_decay_rates, ideal_chirality,
                        triggered_decay_rate)
from .assembly import apply as h_apply
from .assembly import assemble
from .bundles import (write_field_csv, write_lightcone_csv, write_manifest,
                      write_observables_csv)
from .dynamics import (CLSExcitation, InitialStateSpec, PointExcitation,
                       evolve, prepare_state)
from .errors import ConfigError
from .lattice import LatticeSpec, EmitterLeg, EmitterSpec, site, validate_model
from .observables import (chirality, cls_population, cls_projector_vector,
                          doublon_population, emitter_population, field_maps,
                          photon_number_profile)
from .spectral import band_structure, write_bands_csv

LEVEL_LABELS = {"+2": 2.0, "0": 0.0, "-2": -2.0}
_LEVEL_NAMES = {v: k for k, v in LEVEL_LABELS.items()}
SUBLATTICES = ("A", "B", "C")


# ---------------------------------------------------------------- config types

@dataclass(frozen=True)
class EmitterSection:
    """One emitter with one or more legs on a common sublattice."""

    frequency: float
    coupling: float
    cells: tuple[int, ...]
    sublattice: str = "A"
    phases: tuple[float, ...] = ()

    def __post_init__(self):
        if self.sublattice not in SUBLATTICES:
            raise ConfigError(f"sublattice must be one of {SUBLATTICES}, "
                              f"got {self.sublattice!r}")
        if not self.cells:
            raise ConfigError("emitter needs at least one coupling cell")
        phases = self.phases or (0.0,) * len(self.cells)
        if len(phases) != len(self.cells):
            raise ConfigError(f"{len(self.cells)} cells but {len(phases)} phases")
        object.__setattr__(self, "phases", tuple(float(p) for p in phases))

    def to_spec(self) -> EmitterSpec:
        legs = tuple(EmitterLeg(site(c, self.sublattice), self.coupling, p)
                     for c, p in zip(self.cells, self.phases))
        return EmitterSpec(self.frequency, legs)


@dataclass(frozen=True)
class InitialSection:
    """Initial product state: excited emitters plus an optional photon."""

    excited: tuple[int, ...]
    photon_kind: str = "none"  # cls | point | none
    photon_cells: tuple[int, ...] = ()
    photon_labels: tuple[str, ...] = ()
    photon_weights: tuple[float, ...] = ()

    def __post_init__(self):
        if self.photon_kind not in ("cls", "point", "none"):
            raise ConfigError(f"photon_kind must be cls, point, or none, "
                              f"got {self.photon_kind!r}")
        n = len(self.photon_cells)
        if self.photon_kind == "none":
            if n:
                raise ConfigError("photon_cells given but photon_kind is none")
        else:
            if not n:
                raise ConfigError("photon_kind set but no photon_cells")
            if len(self.photon_labels) != n:
                raise ConfigError(f"{n} photon cells but "
                                  f"{len(self.photon_labels)} labels")
            weights = self.photon_weights or (1.0,) * n
            if len(weights) != n:
                raise ConfigError(f"{n} photon cells but {len(weights)} weights")
            object.__setattr__(self, "photon_weights",
                               tuple(float(w) for w in weights))
            pool = LEVEL_LABELS if self.photon_kind == "cls" else SUBLATTICES
            for lab in self.photon_labels:
                if lab not in pool:
                    raise ConfigError(f"photon label {lab!r} not in "
                                      f"{sorted(pool)}")

    def to_spec(self) -> InitialStateSpec:
        if self.photon_kind == "cls":
            photon = tuple(CLSExcitation(c, LEVEL_LABELS[lab], w)
                           for c, lab, w in zip(self.photon_cells,
                                                self.photon_labels,
                                                self.photon_weights))
        elif self.photon_kind == "point":
            photon = tuple(PointExcitation(site(c, lab), w)
                           for c, lab, w in zip(self.photon_cells,
                                                self.photon_labels,
                                                self.photon_weights))
        else:
            photon = ()
        return InitialStateSpec(self.excited, photon)


@dataclass(frozen=True)
class TimeSection:
    t_max: float
    stride: float
    tolerance: float = 1e-9

    def __post_init__(self):
        if self.t_max <= 0 or self.stride <= 0:
            raise ConfigError(f"t_max and stride must be positive, got "
                              f"{self.t_max}, {self.stride}")

    def grid(self) -> np.ndarray:
        return np.arange(0.0, self.t_max + 0.5 * self.stride, self.stride)


@dataclass(frozen=True)
class ObservablesSection:
    chirality_origin: float | None = None
    cls_track: tuple[str, ...] = ()       # entries "cell:level"
    localized_cells: tuple[int, ...] = ()
    localized_labels: tuple[str, ...] = ()
    localized_weights: tuple[float, ...] = ()
    lightcone_stride: float = 0.0

    def __post_init__(self):
        for entry in self.cls_track:
            cell, _, lab = entry.partition(":")
            if lab not in LEVEL_LABELS or not _is_int(cell):
                raise ConfigError(f"cls_track entry {entry!r} is not "
                                  f"'<cell>:<+2|0|-2>'")
        n = len(self.localized_cells)
        if len(self.localized_labels) != n or len(self.localized_weights) != n:
            raise ConfigError("localized_cells, _labels, _weights lengths differ")
        for lab in self.localized_labels:
            if lab not in LEVEL_LABELS:
                raise ConfigError(f"localized label {lab!r} not in "
                                  f"{sorted(LEVEL_LABELS)}")

    def localized_components(self) -> list[tuple[int, float, float]]:
        return [(c, LEVEL_LABELS[lab], w)
                for c, lab, w in zip(self.localized_cells,
                                     self.localized_labels,
                                     self.localized_weights)]


@dataclass(frozen=True)
class BandsSection:
    n_k: int = 256
    r_max: int = 6


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    mode: str  # dynamics | bands
    lattice: LatticeSpec
    emitter: EmitterSection | None = None
    auxiliary: EmitterSection | None = None
    initial: InitialSection | None = None
    time: TimeSection | None = None
    observables: ObservablesSection = field(default_factory=ObservablesSection)
    bands: BandsSection | None = None

    def __post_init__(self):
        if self.mode == "dynamics":
            for name, sect in (("emitter", self.emitter),
                               ("initial", self.initial), ("time", self.time)):
                if sect is None:
                    raise ConfigError(f"dynamics config needs a {name} section")
        elif self.mode == "bands":
            if self.emitter or self.initial or self.time:
                raise ConfigError("bands config carries only lattice and "
                                  "bands sections")
        else:
            raise ConfigError(f"mode must be dynamics or bands, got {self.mode!r}")


def _is_int(text: str) -> bool:
    try:
        int(text)
    except ValueError:
        return False
    return True


# -------------------------------------------------------------------- parsing

def _as_float(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return value


def _as_str(value, path: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string, got {value!r}")
    return value


def _as_list(conv):
    def run(value, path: str) -> tuple:
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        return tuple(conv(v, f"{path}[{i}]") for i, v in enumerate(value))
    return run


def _take_section(raw, name: str, converters: dict, required: tuple = ()) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected an object, got {raw!r}")
    for key in raw:
        if key not in converters:
            raise ConfigError(f"unknown key {name}.{key}")
    for key in required:
        if key not in raw:
            raise ConfigError(f"missing key {name}.{key}")
    return {k: conv(raw[k], f"{name}.{k}")
            for k, conv in converters.items() if k in raw}


_EMITTER_FIELDS = {
    "frequency": _as_float, "coupling": _as_float,
    "cells": _as_list(_as_int), "sublattice": _as_str,
    "phases": _as_list(_as_float),
}

_SECTION_NAMES = ("scenario", "lattice", "emitter", "auxiliary", "initial",
                  "time", "observables", "bands")


def parse_config(raw: dict) -> ScenarioConfig:
    """Raw JSON dict to ScenarioConfig; any unknown key is an error."""
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be an object, got {raw!r}")
    for key in raw:
        if key not in _SECTION_NAMES:
            raise ConfigError(f"unknown key {key}")

    meta = _take_section(raw.get("scenario", {}), "scenario",
                         {"name": _as_str, "mode": _as_str})
    name = meta.get("name", "custom")
    mode = meta.get("mode", "dynamics")

    lat = _take_section(raw.get("lattice", {}), "lattice",
                        {"n_cells": _as_int, "hopping": _as_float,
                         "gauge_phase": _as_float, "nonlinearity": _as_float,
                         "boundary": _as_str},
                        required=("n_cells",))
    lattice = LatticeSpec(**lat)

    emitter = auxiliary = None
    if "emitter" in raw:
        emitter = EmitterSection(**_take_section(
            raw["emitter"], "emitter", _EMITTER_FIELDS,
            required=("frequency", "coupling", "cells")))
    if "auxiliary" in raw:
        auxiliary = EmitterSection(**_take_section(
            raw["auxiliary"], "auxiliary", _EMITTER_FIELDS,
            required=("frequency", "coupling", "cells")))

    initial = None
    if "initial" in raw:
        initial = InitialSection(**_take_section(
            raw["initial"], "initial",
            {"excited": _as_list(_as_int), "photon_kind": _as_str,
             "photon_cells": _as_list(_as_int),
             "photon_labels": _as_list(_as_str),
             "photon_weights": _as_list(_as_float)},
            required=("excited",)))

    tgrid = None
    if "time" in raw:
        tgrid = TimeSection(**_take_section(
            raw["time"], "time",
            {"t_max": _as_float, "stride": _as_float, "tolerance": _as_float},
            required=("t_max", "stride")))

    obs = ObservablesSection(**_take_section(
        raw.get("observables", {}), "observables",
        {"chirality_origin": _as_float, "cls_track": _as_list(_as_str),
         "localized_cells": _as_list(_as_int),
         "localized_labels": _as_list(_as_str),
         "localized_weights": _as_list(_as_float),
         "lightcone_stride": _as_float}))

    bands = None
    if "bands" in raw:
        bands = BandsSection(**_take_section(
            raw["bands"], "bands", {"n_k": _as_int, "r_max": _as_int}))

    return ScenarioConfig(name, mode, lattice, emitter, auxiliary, initial,
                          tgrid, obs, bands)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Normalized raw form: every populated key, no empty optionals."""
    out: dict = {"scenario": {"name": cfg.name, "mode": cfg.mode}}
    lat = cfg.lattice
    out["lattice"] = {"n_cells": lat.n_cells, "hopping": lat.hopping,
                      "gauge_phase": lat.gauge_phase,
                      "nonlinearity": lat.nonlinearity, "boundary": lat.boundary}
    for key, sect in (("emitter", cfg.emitter), ("auxiliary", cfg.auxiliary)):
        if sect is not None:
            out[key] = {"frequency": sect.frequency, "coupling": sect.coupling,
                        "cells": list(sect.cells), "sublattice": sect.sublattice,
                        "phases": list(sect.phases)}
    if cfg.initial is not None:
        ini: dict = {"excited": list(cfg.initial.excited),
                     "photon_kind": cfg.initial.photon_kind}
        if cfg.initial.photon_kind != "none":
            ini["photon_cells"] = list(cfg.initial.photon_cells)
            ini["photon_labels"] = list(cfg.initial.photon_labels)
            ini["photon_weights"] = list(cfg.initial.photon_weights)
        out["initial"] = ini
    if cfg.time is not None:
        out["time"] = {"t_max": cfg.time.t_max, "stride": cfg.time.stride,
                       "tolerance": cfg.time.tolerance}
    ob = cfg.observables
    obd: dict = {}
    if ob.chirality_origin is not None:
        obd["chirality_origin"] = ob.chirality_origin
    if ob.cls_track:
        obd["cls_track"] = list(ob.cls_track)
    if ob.localized_cells:
        obd["localized_cells"] = list(ob.localized_cells)
        obd["localized_labels"] = list(ob.localized_labels)
        obd["localized_weights"] = list(ob.localized_weights)
    if ob.lightcone_stride > 0:
        obd["lightcone_stride"] = ob.lightcone_stride
    if obd:
        out["observables"] = obd
    if cfg.bands is not None:
        out["bands"] = {"n_k": cfg.bands.n_k, "r_max": cfg.bands.r_max}
    return out


def serialize_config(cfg: ScenarioConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2) + "\n"


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return parse_config(raw)


# -------------------------------------------------------------------- presets

_PI = math.pi
_HALF_PI = math.pi / 2


def _trigger_raw(name: str, n_cells: int, u: float, omega_e: float, g: float,
                 cls_offset: int = 0, stride: float = 1.0) -> dict:
    n0 = n_cells // 2
    return {
        "scenario": {"name": name, "mode": "dynamics"},
        "lattice": {"n_cells": n_cells, "hopping": 1.0, "gauge_phase": _PI,
                    "nonlinearity": u, "boundary": "open"},
        "emitter": {"frequency": omega_e, "coupling": g, "cells": [n0],
                    "sublattice": "A", "phases": [0.0]},
        "initial": {"excited": [0], "photon_kind": "cls",
                    "photon_cells": [n0 + cls_offset], "photon_labels": ["+2"],
                    "photon_weights": [1.0]},
        "time": {"t_max": 750.0, "stride": stride, "tolerance": 1e-9},
        "observables": {"cls_track": [f"{n0 + cls_offset}:+2"],
                        "lightcone_stride": 10.0},
    }


def _giant_raw(name: str, n_cells: int, with_aux: bool, partial: bool) -> dict:
    n0 = n_cells // 2
    raw = {
        "scenario": {"name": name, "mode": "dynamics"},
        "lattice": {"n_cells": n_cells, "hopping": 1.0, "gauge_phase": _PI,
                    "nonlinearity": 4.0, "boundary": "open"},
        "emitter": {"frequency": 4.02, "coupling": 0.02, "cells": [n0, n0 + 1],
                    "sublattice": "A", "phases": [0.0, -_HALF_PI]},
        "initial": {"excited": [0], "photon_kind": "cls",
                    "photon_cells": [n0, n0 + 1], "photon_labels": ["+2", "+2"],
                    "photon_weights": [1.0, 1.0]},
        "time": {"t_max": 750.0, "stride": 2.5, "tolerance": 1e-9},
        "observables": {"chirality_origin": n0 + 0.5,
                        "cls_track": [f"{n0}:+2", f"{n0 + 1}:+2"],
                        "lightcone_stride": 10.0},
    }
    if with_aux:
        raw["auxiliary"] = {"frequency": 3.0, "coupling": 0.072,
                            "cells": [n0, n0 + 1], "sublattice": "A",
                            "phases": [0.0, -_HALF_PI]}
    if partial:
        raw["initial"] = {"excited": [0], "photon_kind": "point",
                          "photon_cells": [n0, n0 + 1],
                          "photon_labels": ["A", "A"],
                          "photon_weights": [1.0, 1.0]}
        raw["observables"]["localized_cells"] = [n0, n0 + 1]
        raw["observables"]["localized_labels"] = ["-2", "-2"]
        raw["observables"]["localized_weights"] = [1.0, 1.0]
    return raw


def _fig3a_raw() -> dict:
    raw = _trigger_raw("fig3a-superposition", 300, 4.0, 4.02, 0.03)
    raw["initial"]["photon_cells"] = [150, 151]
    raw["initial"]["photon_labels"] = ["+2", "+2"]
    raw["initial"]["photon_weights"] = [math.sqrt(2.0), 1.0]
    raw["observables"]["cls_track"] = ["150:+2", "151:+2"]
    return raw


def _fig3b_raw() -> dict:
    raw = _trigger_raw("fig3b-point", 300, 4.0, 4.02, 0.03)
    raw["initial"] = {"excited": [0], "photon_kind": "point",
                      "photon_cells": [150], "photon_labels": ["A"],
                      "photon_weights": [1.0]}
    raw["observables"]["cls_track"] = ["150:+2", "150:-2"]
    return raw


def _bands_raw() -> dict:
    return {
        "scenario": {"name": "fig1-bands", "mode": "bands"},
        "lattice": {"n_cells": 30, "hopping": 1.0, "gauge_phase": _PI,
                    "nonlinearity": 4.0, "boundary": "periodic"},
        "bands": {"n_k": 256, "r_max": 6},
    }


PRESETS: dict[str, tuple] = {
    "fig1-bands": (_bands_raw,
                   "two-photon band structure over the Brillouin zone"),
    "fig2-trigger": (lambda: _trigger_raw("fig2-trigger", 300, 4.0, 4.02, 0.02),
                     "CLS-triggered exponential decay, U=4J"),
    "fig2-trigger-ci": (lambda: _trigger_raw("fig2-trigger-ci", 150, 4.0,
                                             4.02, 0.02),
                        "CI-sized chain for the triggered decay"),
    "fig2-trigger-u10": (lambda: _trigger_raw("fig2-trigger-u10", 300, 10.0,
                                              8.99, 0.02),
                         "triggered decay at strong nonlinearity U=10J"),
    "fig2-forbidden": (lambda: _trigger_raw("fig2-forbidden", 300, 4.0, 4.02,
                                            0.02, cls_offset=1, stride=2.5),
                       "CLS one cell off the emitter: emission forbidden"),
    "fig3a-superposition": (_fig3a_raw,
                            "partially matched CLS superposition, plateau 1/3"),
    "fig3b-point": (_fig3b_raw,
                    "single-site photon, energy-matched half decays"),
    "fig4-giant": (lambda: _giant_raw("fig4-giant", 300, False, False),
                   "two-leg phased emitter, intrinsic 3:1 directionality"),
    "fig5-optimal": (lambda: _giant_raw("fig5-optimal", 300, True, False),
                     "phased legs plus auxiliary cancellation, near-unit chirality"),
    "fig5-partial": (lambda: _giant_raw("fig5-partial", 300, True, True),
                     "point-pair start: half emits rightward, half stays"),
}


def preset_config(name: str) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; "
                          f"known: {', '.join(sorted(PRESETS))}")
    return parse_config(PRESETS[name][0]())


def list_presets() -> list[tuple[str, str]]:
    return [(name, desc) for name, (_, desc) in sorted(PRESETS.items())]


# ------------------------------------------------------------------- running

@dataclass
class RunResult:
    config: ScenarioConfig
    times: np.ndarray
    columns: list[str]
    data: np.ndarray
    derived: dict
    certificates: dict
    out_dir: Path | None = None

    def series(self, column: str) -> np.ndarray:
        if column not in self.columns:
            raise ConfigError(f"no column {column!r}; have {self.columns}")
        return self.data[:, self.columns.index(column)]


def _derived_block(cfg: ScenarioConfig, times, columns, data) -> dict:
    """Analytic rates for the manifest; every part is best effort."""
    derived: dict = {}
    em = cfg.emitter
    level = 2.0
    if cfg.initial is not None and cfg.initial.photon_kind == "cls":
        level = LEVEL_LABELS[cfg.initial.photon_labels[0]]
    omega_cls = level * cfg.lattice.hopping
    try:
        pred = triggered_decay_rate(cfg.lattice, em.coupling, 1,
                                    em.frequency, omega_cls,
                                    site(em.cells[0], em.sublattice))
    except ConfigError as exc:
        derived["resonance_note"] = str(exc)
        return derived
    derived["resonance"] = {
        "band": pred.band, "k_r": pred.k_resonance,
        "group_speed": pred.group_speed, "m_abs": abs(pred.amplitude),
        "gamma_analytic": pred.gamma_analytic, "cls_level": level,
    }
    if len(em.cells) >= 2:
        d = em.cells[1] - em.cells[0]
        phi = em.phases[1] - em.phases[0]
        rates = giant_decay_rates(pred.gamma_analytic, phi, d, pred.k_resonance)
        j_eff = effective_coupling_doublon(em.coupling, pred.amplitude,
                                           pred.group_speed, phi)
        derived["giant"] = {
            "leg_distance": d, "leg_phase": phi,
            "gamma_plus": rates[0], "gamma_minus": rates[1],
            "ideal_chirality": ideal_chirality(rates),
            "j_eff_abs": abs(j_eff),
        }
        if cfg.auxiliary is not None:
            try:
                g_match = auxiliary_matching(em.coupling, pred.amplitude,
                                             pred.group_speed,
                                             cfg.auxiliary.frequency, omega_cls,
                                             phi)
                derived["giant"]["auxiliary_matched_coupling"] = g_match
                derived["giant"]["auxiliary_coupling"] = cfg.auxiliary.coupling
            except ConfigError as exc:
                derived["giant"]["auxiliary_note"] = str(exc)
    fit_eligible = (len(em.cells) == 1 and cfg.auxiliary is None
                    and cfg.initial.photon_kind == "cls"
                    and len(cfg.initial.photon_cells) == 1)
    if fit_eligible and "P_e" in columns:
        try:
            fit = fit_exponential(times, data[:, columns.index("P_e")])
        except ConfigError as exc:
            derived["fit_note"] = str(exc)
        else:
            dev = (abs(fit.gamma - pred.gamma_analytic) / pred.gamma_analytic)
            derived["fit"] = {
                "gamma_fitted": fit.gamma, "relative_deviation": dev,
                "residual": fit.residual, "window": list(fit.window),
                "n_points": fit.n_points,
            }
    return derived


def run_bands(cfg: ScenarioConfig, out_dir=None) -> dict:
    section = cfg.bands or BandsSection()
    bands = band_structure(cfg.lattice, section.n_k, section.r_max)
    ranges = [[float(row.min()), float(row.max())] for row in bands.energies]
    derived = {"band_ranges": ranges, "flat": [bool(f) for f in bands.flat]}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_bands_csv(out / "bands.csv", bands)
        write_manifest(out / "manifest.json", config_to_dict(cfg), derived,
                       {}, ["bands.csv"], 0.0)
    return derived


def run(cfg: ScenarioConfig, out_dir=None, progress=None) -> RunResult:
    """Execute one dynamics scenario, optionally writing its bundle.

    progress: optional callable taking a status string.
    """
    if cfg.mode == "bands":
        derived = run_bands(cfg, out_dir)
        return RunResult(cfg, np.zeros(0), [], np.zeros((0, 0)), derived, {},
                         None if out_dir is None else Path(out_dir))
    t_start = _time.perf_counter()
    emitters = [cfg.emitter.to_spec()]
    if cfg.auxiliary is not None:
        emitters.append(cfg.auxiliary.to_spec())
    model = validate_model(cfg.lattice, emitters)
    h = assemble(model)
    basis = h.basis
    psi0 = prepare_state(cfg.initial.to_spec(), basis)
    times = cfg.time.grid()
    ob = cfg.observables

    columns = ["P_e"]
    if len(emitters) > 1:
        columns.append("P_a")
    columns.append("P_D")
    if ob.chirality_origin is not None:
        columns += ["P_R", "P_L", "C_R", "C_L"]
    cls_refs = []
    for entry in ob.cls_track:
        cell_text, _, lab = entry.partition(":")
        cls_refs.append((f"cls:{entry}",
                         cls_projector_vector(basis, 0, int(cell_text),
                                              LEVEL_LABELS[lab])))
        columns.append(f"cls:{entry}")
    loc_ref = None
    if ob.localized_cells:
        vec = np.zeros(basis.dimension, dtype=complex)
        for cell, level, w in ob.localized_components():
            vec += w * cls_projector_vector(basis, 0, cell, level)
        loc_ref = vec / np.linalg.norm(vec)
        columns.append("P_loc")
    columns += ["norm", "energy"]

    data = np.zeros((times.size, len(columns)))
    cone_every = 0
    cone_rows: list[np.ndarray] = []
    cone_times: list[float] = []
    if ob.lightcone_stride > 0:
        cone_every = max(1, round(ob.lightcone_stride / cfg.time.stride))

    def observer(i: int, t: float, psi: np.ndarray) -> None:
        row = [emitter_population(basis, psi, 0)]
        if len(emitters) > 1:
            row.append(emitter_population(basis, psi, 1))
        row.append(doublon_population(basis, psi))
        if ob.chirality_origin is not None:
            ch = chirality(basis, psi, ob.chirality_origin)
            row += [ch.p_right, ch.p_left, ch.c_right, ch.c_left]
        for _, ref in cls_refs:
            row.append(float(abs(np.vdot(ref, psi)) ** 2))
        if loc_ref is not None:
            row.append(float(abs(np.vdot(loc_ref, psi)) ** 2))
        norm = float(np.vdot(psi, psi).real)
        energy = float(np.vdot(psi, h_apply(h, psi)).real)
        row += [norm, energy]
        data[i] = row
        if cone_every and i % cone_every == 0:
            cone_times.append(t)
            cone_rows.append(photon_number_profile(basis, psi))
        if progress is not None and i % 100 == 0:
            progress(f"t={t:g} P_e={row[0]:.4f}")

    traj = evolve(h, psi0, times, tol=cfg.time.tolerance, observer=observer,
                  store_states=False)
    final_maps = field_maps(basis, traj.final_state)
    certificates = {
        "norm_drift": traj.norm_drift, "energy_drift": traj.energy_drift,
        "initial_energy": traj.initial_energy,
        "dimension": basis.dimension, "n_outputs": int(times.size),
    }
    derived = _derived_block(cfg, times, columns, data)

    out = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = ["observables.csv", "field_final.csv", "manifest.json"]
        write_observables_csv(out / "observables.csv", columns, times, data)
        write_field_csv(out / "field_final.csv", final_maps)
        if cone_rows:
            write_lightcone_csv(out / "lightcone.csv", np.array(cone_times),
                                np.array(cone_rows))
            files.append("lightcone.csv")
        write_manifest(out / "manifest.json", config_to_dict(cfg), derived,
                       certificates, files,
                       _time.perf_counter() - t_start)
    return RunResult(cfg, times, columns, data, derived, certificates, out)


# --------------------------------------------------------------------- sweeps

def _apply_override(raw: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = raw
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(f"override path {dotted!r}: no section {part!r}")
        node = node[part]
    node[parts[-1]] = value


def override_config(cfg: ScenarioConfig, **simple) -> ScenarioConfig:
    """Common CLI-level overrides, reparsed through the strict path.

    Supported: n_cells (recenters single-emitter scenarios), t_max, tolerance.
    """
    raw = config_to_dict(cfg)
    if simple.get("n_cells") is not None:
        old_mid = cfg.lattice.n_cells // 2
        new = int(simple["n_cells"])
        shift = new // 2 - old_mid
        raw["lattice"]["n_cells"] = new
        for sect in ("emitter", "auxiliary", "initial", "observables"):
            if sect not in raw:
                continue
            node = raw[sect]
            for key in ("cells", "photon_cells", "localized_cells"):
                if key in node:
                    node[key] = [c + shift for c in node[key]]
            if "chirality_origin" in node:
                node["chirality_origin"] += shift
            if "cls_track" in node:
                node["cls_track"] = [
                    f"{int(e.partition(':')[0]) + shift}:{e.partition(':')[2]}"
                    for e in node["cls_track"]]
    if simple.get("t_max") is not None:
        raw["time"]["t_max"] = float(simple["t_max"])
    if simple.get("tolerance") is not None:
        raw["time"]["tolerance"] = float(simple["tolerance"])
    return parse_config(raw)


def _sweep_point(args):
    index, raw, out_dir = args
    cfg = parse_config(raw)
    run(cfg, out_dir)
    return index


def run_sweep(grid_path, out_root, max_workers: int | None = None) -> list[int]:
    """Grid file: {"preset": name | "config": path, "overrides": [{...}, ...]}.

    Each override map assigns dotted config paths; every point writes its
    bundle under out_root/point-<index>/.
    """
    with open(grid_path) as fh:
        try:
            grid = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{grid_path}: not valid JSON ({exc})") from exc
    for key in grid:
        if key not in ("preset", "config", "overrides", "max_workers"):
            raise ConfigError(f"unknown key {key} in sweep grid")
    if ("preset" in grid) == ("config" in grid):
        raise ConfigError("sweep grid needs exactly one of preset, config")
    if "preset" in grid:
        base = config_to_dict(preset_config(_as_str(grid["preset"], "preset")))
    else:
        base = config_to_dict(load_config(grid["config"]))
    overrides = grid.get("overrides", [{}])
    if not isinstance(overrides, list) or not all(
            isinstance(o, dict) for o in overrides):
        raise ConfigError("overrides must be a list of objects")
    workers = max_workers or grid.get("max_workers") or 2
    out_root = Path(out_root)
    jobs = []
    for i, ov in enumerate(overrides):
        raw = json.loads(json.dumps(base))
        for dotted, value in ov.items():
            _apply_override(raw, dotted, value)
        parse_config(raw)  # fail fast in the parent, with the point's path
        jobs.append((i, raw, str(out_root / f"point-{i}")))
    done = []
    with ProcessPoolExecutor(max_workers=int(workers)) as pool:
        for idx in pool.map(_sweep_point, jobs):
            done.append(idx)
    return sorted(done)


__all__ = [
    "EmitterSection", "InitialSection", "TimeSection", "ObservablesSection",
    "BandsSection", "ScenarioConfig", "parse_config", "config_to_dict",
    "serialize_config", "load_config", "PRESETS", "preset_config",
    "list_presets", "RunResult", "run", "run_bands", "override_config",
    "run_sweep", "LEVEL_LABELS",
]
