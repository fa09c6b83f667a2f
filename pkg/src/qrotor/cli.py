"""Command-line front end.

Every command reads a JSON run configuration (optional), applies a preset
and ``--set`` overrides, runs one pipeline stage and writes CSV or JSON.
Physical quantities in configuration files are ``{"value": ..., "unit": ...}``
objects; unknown keys are rejected.

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 inconsistent measurement set.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from . import __version__
from .errors import (CalibrationError, ConfigError, EstimationError,
                     InconsistentMeasurementError, SolverError)
from .sdolp_field import LatticeSpec
from .units import ATOMS, AtomSpec

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_MEASUREMENT = 0, 2, 3, 4
OUTPUT_DIR_ENV = "QROTOR_OUTPUT_DIR"

# dimension -> {unit: factor to canonical}; the first unit is canonical
UNITS: Dict[str, Dict[str, float]] = {
    "1": {"1": 1.0},
    "recoil": {"E0": 1.0},
    "wavelength": {"lambda0": 1.0},
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "nm": 1e-9},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9},
    "rate": {"rad/s": 1.0, "1/s": 1.0, "Hz": 2 * np.pi, "kHz": 2e3 * np.pi, "MHz": 2e6 * np.pi},
    "field": {"T": 1.0, "mT": 1e-3, "uT": 1e-6, "nT": 1e-9, "G": 1e-4},
    "accel": {"m/s^2": 1.0},
    "mass": {"u": 1.0},
    "harmonic_time": {"1/Omega_h": 1.0},
    "harmonic_length": {"b0": 1.0},
    "harmonic_momentum": {"hbar/b0": 1.0},
}


@dataclass(frozen=True)
class Param:
    kind: str  # a dimension in UNITS, or "int", "str", "list"
    default: Any
    doc: str = ""


_GRID = {
    "r_max": Param("wavelength", 0.45, "outer wall"),
    "n_points": Param("int", 1000, "starting grid size"),
    "scheme": Param("str", "flux", "flux or dirichlet"),
    "tol": Param("recoil", 1e-4, "eigenvalue convergence"),
    "max_refinements": Param("int", 3),
}

COMMANDS: Dict[str, Dict[str, Param]] = {
    "field": {
        "r_max": Param("wavelength", 0.45),
        "n_points": Param("int", 451),
        "r_probe": Param("wavelength", 0.068, "radius for anisotropy magnitudes"),
    },
    "spectrum": {"n_max": Param("int", 2), "zeta_max": Param("1", 2.5), **_GRID},
    "density": {"n": Param("int", 0), "zeta": Param("1", 0.5), **_GRID},
    "raman": {
        "omega_g": Param("rate", 1.0), "delta": Param("rate", 0.0), "gamma": Param("rate", 0.0),
        "t_end": Param("time", 20.0), "n_t": Param("int", 401),
    },
    "ramsey": {
        "omega_g": Param("rate", 1.0), "gamma": Param("rate", 0.0),
        "tau_p": Param("time", np.pi / 2), "T_delay": Param("time", 10.0),
        "delta_qr": Param("rate", 0.0, "true splitting"),
        "half_span": Param("rate", 2.0), "n_points": Param("int", 801),
        "half_window": Param("int", 2),
    },
    "sense-forward": {
        "calibration": Param("str", "reference", "'reference', 'computed' or a JSON path"),
        "B": Param("field", [0.0, 0.0, 0.0]), "Omega": Param("rate", [0.0, 0.0, 0.0]),
        "accel": Param("accel", [0.0, 0.0, 0.0]),
    },
    "sense-invert": {
        "calibration": Param("str", "reference"),
        "measurements": Param("str", "", "measurement CSV path"),
    },
    "budget": {
        "calibration": Param("str", "reference"),
        "delta_omega": Param("rate", 2 * np.pi * 0.160, "laser linewidth"),
        "omega_laser": Param("rate", 2.808e15),
        "beta_sensitivity": Param("1", 0.075495 / 2, "(E0/beta)|d beta/dE0|"),
        "rho_sensitivity": Param("1", 0.139986, "(E0/rho)|d rho/dE0|"),
        "N_rotors": Param("1", 4.99e8), "T_meas": Param("time", 1.0),
        "N_p": Param("1", 7.467e24), "N_s": Param("1", 2.987e25),
        "tau": Param("time", 1.644e-3),
    },
    "classical": {
        "kinetic": Param("str", "reduced", "reduced or exact"),
        "force_law": Param("str", "series", "series or bessel"),
        "dt": Param("harmonic_time", 0.005),
        "t_end": Param("harmonic_time", 0.0, "0 integrates until the rings stabilise"),
        "stride": Param("int", 10),
        "r0": Param("harmonic_length", [5.0, 0.0]),
        "p0": Param("harmonic_momentum", [0.0, -3.0]),
        "f0": Param("1", [-0.9975, 0.05, 0.05], "normalized before use"),
    },
    "recoil": {"atoms": Param("list", ["H2", "Li6", "Li7", "Na23", "K39", "K40"])},
}

_LATTICE_KINDS = {
    "V0": "recoil", "B0": "recoil", "nuclear_spin_I": "1", "lambda0": "length",
    "beta_mix": "1", "detuning_Delta": "rate", "gamma_e": "rate",
}
_ATOM_KINDS = {
    "name": "str", "mass_u": "mass", "nuclear_spin_I": "1", "F": "1", "g_factor": "1",
    "resonance_wavelength": "length",
}

PRESETS: Dict[str, dict] = {
    "li6-reference": {
        "lattice": {"V0": 100.0, "B0": 180.0, "nuclear_spin_I": 1.0, "lambda0": 670.8e-9},
        "atom": "Li6",
        "params": {},
    },
    "k40-classical": {
        "lattice": {"V0": 100.0, "B0": 180.0, "nuclear_spin_I": 4.0, "lambda0": 766.5e-9},
        "atom": "K40",
        "params": {},
    },
}


# --- quantities ----------------------------------------------------------------

def _number(x, what):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{what}: expected a number, got {x!r}")
    return float(x)


def parse_quantity(raw, kind: str, what: str):
    """Convert a config value to canonical units according to ``kind``."""
    if kind == "int":
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ConfigError(f"{what}: expected an integer")
        return int(raw)
    if kind == "str":
        if not isinstance(raw, str):
            raise ConfigError(f"{what}: expected a string")
        return raw
    if kind == "list":
        if not isinstance(raw, list) or not all(isinstance(s, str) for s in raw):
            raise ConfigError(f"{what}: expected a list of strings")
        return list(raw)
    table = UNITS[kind]
    if isinstance(raw, dict):
        extra = set(raw) - {"value", "unit"}
        if extra or "value" not in raw or "unit" not in raw:
            raise ConfigError(f"{what}: quantity needs exactly 'value' and 'unit'")
        unit, value = raw["unit"], raw["value"]
    elif kind == "1":
        unit, value = "1", raw
    else:
        raise ConfigError(f"{what}: physical quantity must carry a unit, e.g. "
                          f'{{"value": ..., "unit": "{next(iter(table))}"}}')
    if unit not in table:
        raise ConfigError(f"{what}: unit {unit!r} not one of {sorted(table)}")
    fac = table[unit]
    if isinstance(value, list):
        return [_number(v, what) * fac for v in value]
    return _number(value, what) * fac


def format_quantity(value, kind: str):
    if kind in ("int", "str", "list"):
        return value
    unit = next(iter(UNITS[kind]))
    if kind == "1":
        return value
    return {"value": value, "unit": unit}


# --- run configuration -------------------------------------------------------

@dataclass
class RunConfig:
    """Fully resolved run description in canonical units."""

    command: str
    lattice: LatticeSpec = field(default_factory=LatticeSpec)
    atom: AtomSpec = field(default_factory=lambda: ATOMS["Li6"])
    params: Dict[str, Any] = field(default_factory=dict)
    output_path: Optional[str] = None
    output_format: str = "csv"
    header_timestamp: bool = True

    def to_dict(self) -> dict:
        schema = COMMANDS[self.command]
        return {
            "command": self.command,
            "lattice": {k: format_quantity(getattr(self.lattice, k), kd)
                        for k, kd in _LATTICE_KINDS.items()},
            "atom": {k: format_quantity(getattr(self.atom, k), kd) for k, kd in _ATOM_KINDS.items()},
            "params": {k: format_quantity(v, schema[k].kind) for k, v in self.params.items()},
            "output": {"path": self.output_path, "format": self.output_format,
                       "header_timestamp": self.header_timestamp},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict, command: Optional[str] = None) -> "RunConfig":
        return build_config(command or doc.get("command"), doc)


def _strict_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(extra)}")


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k in ("lattice", "atom", "params", "output"):
            out[k] = {**out[k], **v}
        else:
            out[k] = v
    return out


def _resolve_atom(raw) -> AtomSpec:
    if isinstance(raw, str):
        if raw not in ATOMS:
            raise ConfigError(f"unknown atom {raw!r}; known: {sorted(ATOMS)}")
        return ATOMS[raw]
    _strict_keys(raw, _ATOM_KINDS, "atom")
    base = ATOMS.get(raw.get("name"), None)
    vals = asdict(base) if base else {}
    for k, v in raw.items():
        vals[k] = parse_quantity(v, _ATOM_KINDS[k], f"atom.{k}")
    missing = {"name", "mass_u", "nuclear_spin_I", "F"} - set(vals)
    if missing:
        raise ConfigError(f"atom lacks {sorted(missing)}")
    return AtomSpec(**vals)


def build_config(command: Optional[str], doc: dict, preset: Optional[str] = None) -> RunConfig:
    """Validate a configuration document (canonical or user-written)."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; choose from {sorted(COMMANDS)}")
    _strict_keys(doc, {"command", "lattice", "atom", "params", "output"}, "config")
    if doc.get("command", command) != command:
        raise ConfigError(f"config is for {doc['command']!r}, not {command!r}")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        p = PRESETS[preset]
        lat = {k: format_quantity(v, _LATTICE_KINDS[k]) for k, v in p["lattice"].items()}
        if isinstance(doc.get("atom"), dict) and "name" not in doc["atom"]:
            doc = {**doc, "atom": {"name": p["atom"], **doc["atom"]}}
        doc = _merge({"lattice": lat, "atom": p["atom"], "params": dict(p["params"])}, doc)

    lat_raw = doc.get("lattice", {})
    _strict_keys(lat_raw, _LATTICE_KINDS, "lattice")
    lat = {k: parse_quantity(v, _LATTICE_KINDS[k], f"lattice.{k}") for k, v in lat_raw.items()}
    try:
        lattice = LatticeSpec(**lat)
    except TypeError as exc:  # pragma: no cover - guarded by _strict_keys
        raise ConfigError(str(exc)) from None

    atom = _resolve_atom(doc.get("atom", "Li6"))

    schema = COMMANDS[command]
    p_raw = doc.get("params", {})
    _strict_keys(p_raw, schema, f"params of {command!r}")
    params = {k: prm.default for k, prm in schema.items()}
    for k, v in p_raw.items():
        params[k] = parse_quantity(v, schema[k].kind, f"params.{k}")

    out = doc.get("output", {}) or {}
    _strict_keys(out, {"path", "format", "header_timestamp"}, "output")
    fmt = out.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError("output.format must be 'csv' or 'json'")
    path = out.get("path")
    if path is not None and not isinstance(path, str):
        raise ConfigError("output.path must be a string")
    ts = out.get("header_timestamp", True)
    if not isinstance(ts, bool):
        raise ConfigError("output.header_timestamp must be true or false")
    return RunConfig(command, lattice, atom, params, path, fmt, ts)


def _parse_override(text: str):
    """``section.key=value``; value is JSON, optionally followed by a unit."""
    if "=" not in text:
        raise ConfigError(f"--set expects key=value, got {text!r}")
    key, raw = text.split("=", 1)
    parts = key.split(".")
    if len(parts) != 2 or parts[0] not in ("lattice", "atom", "params", "output"):
        raise ConfigError(f"--set key must be lattice.X, atom.X, params.X or output.X, got {key!r}")
    raw = raw.strip()
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        head, _, unit = raw.rpartition(" ")
        try:
            value = {"value": json.loads(head), "unit": unit} if head else raw
        except json.JSONDecodeError:
            value = raw
    return parts[0], parts[1], value


# --- helpers -------------------------------------------------------------------

def _grid(params):
    from .radial_spectrum import RadialGrid

    return RadialGrid(params["r_max"], params["n_points"], params["scheme"])


def _calibration(cfg: RunConfig):
    from .sensor_inversion import CalibrationTable, reference_calibration

    src = cfg.params["calibration"]
    if src == "reference":
        return reference_calibration()
    if src == "computed":
        return CalibrationTable.from_spectrum(cfg.atom, cfg.lattice.lambda0)
    try:
        return CalibrationTable.from_json(Path(src).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read calibration {src!r}: {exc}") from None


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _floats(obj):
    if isinstance(obj, dict):
        return {str(k): _floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_floats(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


# --- commands: each returns (csv_header, csv_rows, json_payload) -------------

def cmd_field(cfg):
    from .sdolp_field import anisotropy_bounds, field_extrema, isotropic_B, isotropic_V

    p, spec = cfg.params, cfg.lattice
    r = np.linspace(0.0, p["r_max"], p["n_points"])
    V, B = isotropic_V(spec, r), isotropic_B(spec, r)
    rB, Bmax, rc = field_extrema(spec)
    dV, dBr, _ = anisotropy_bounds(spec, p["r_probe"])
    payload = {
        "r_B": rB, "B_max": Bmax, "B_max_over_B0": Bmax / spec.B0, "r_c": rc,
        "r_probe": p["r_probe"], "dV_over_V0": dV / spec.V0, "dB_over_B0": dBr / spec.B0,
        "table": {"r": r, "V": V, "B": B},
    }
    return ["r_lambda0", "V_E0", "B_E0"], zip(r, V, B), payload


def cmd_spectrum(cfg):
    from .radial_spectrum import overlap_integrals, solve_spectrum

    p = cfg.params
    res = solve_spectrum(cfg.lattice, n_max=p["n_max"], zeta_max=p["zeta_max"], grid=_grid(p),
                         tol=p["tol"], max_refinements=p["max_refinements"])
    rows = []
    for n, z, e in res.table():
        o = overlap_integrals(res, n, z)
        rows.append((n, z, e, o.beta_z, o.beta_parallel, o.rho_parallel))
    payload = json.loads(res.to_json(include_wavefunctions=False))
    return ["n", "zeta", "energy_E0", "beta_z", "beta_parallel", "rho_parallel_lambda0"], rows, payload


def cmd_density(cfg):
    from .radial_spectrum import areal_density, density_peak, solve_spectrum

    p = cfg.params
    z = float(p["zeta"])
    res = solve_spectrum(cfg.lattice, n_max=p["n"] + 1, grid=_grid(p), tol=p["tol"],
                         max_refinements=p["max_refinements"], zetas=(z,))
    rho = areal_density(res, p["n"], z)
    up, dn = res.psi(p["n"], z)
    payload = {"peak_radius": density_peak(res, p["n"], z), "n_points": res.grid.n_points,
               "table": {"r": res.r, "density": rho, "psi_up": up, "psi_down": dn}}
    return ["r_lambda0", "density", "psi_up", "psi_down"], zip(res.r, rho, up, dn), payload


def cmd_raman(cfg):
    from .raman_ramsey import RamanConfig, rabi_probabilities

    p = cfg.params
    rc = RamanConfig(omega_g=p["omega_g"], delta=p["delta"], gamma=p["gamma"])
    t = np.linspace(0.0, p["t_end"], p["n_t"])
    up, dn = rabi_probabilities(rc, t)
    return ["t_s", "P_up", "P_down"], zip(t, up, dn), {"table": {"t": t, "P_up": up, "P_down": dn}}


def cmd_ramsey(cfg):
    from .raman_ramsey import RamanConfig, scan_two_photon, splitting_from_fringes

    p = cfg.params
    rc = RamanConfig(omega_g=p["omega_g"], gamma=p["gamma"], tau_p=p["tau_p"], T_delay=p["T_delay"])
    w = np.linspace(p["delta_qr"] - p["half_span"], p["delta_qr"] + p["half_span"], p["n_points"])
    w, prob = scan_two_photon(rc, w, p["delta_qr"])
    est = splitting_from_fringes(w, prob, p["half_window"])
    payload = {"splitting_estimate": est, "table": {"omega": w, "probability": prob}}
    return ["two_photon_rad_s", "probability"], zip(w, prob), payload


def cmd_sense_forward(cfg):
    from .sensor_inversion import FrameState, forward_measurements

    p = cfg.params
    meas = forward_measurements(_calibration(cfg), FrameState(p["B"], p["Omega"], p["accel"]))
    rows = list(csv.reader(io.StringIO(meas.to_csv())))
    payload = {"delta0": meas.delta0, "delta1": {f"{k[0]}/{k[1]}": v for k, v in meas.delta1.items()}}
    return rows[0], rows[1:], payload


def cmd_sense_invert(cfg):
    from .sensor_inversion import MeasurementSet, invert_measurements

    path = cfg.params["measurements"]
    if not path:
        raise ConfigError("sense-invert needs params.measurements (a CSV path)")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read measurements {path!r}: {exc}") from None
    frame = invert_measurements(_calibration(cfg), MeasurementSet.from_csv(text))
    rows = [(q, ax, v) for q, vec in (("B_T", frame.B_ex), ("Omega_rad_s", frame.Omega),
                                       ("accel_m_s2", frame.accel))
            for ax, v in zip("xyz", vec)]
    payload = {"B": frame.B_ex, "Omega": frame.Omega, "accel": frame.accel}
    return ["quantity", "component", "value"], rows, payload


def cmd_budget(cfg):
    from .sensor_inversion import accuracy_budget, shot_noise_budget

    p = cfg.params
    cal = _calibration(cfg)
    rec = accuracy_budget(cal, cfg.atom, p["delta_omega"], p["N_rotors"], p["T_meas"],
                          p["omega_laser"], p["beta_sensitivity"], p["rho_sensitivity"])
    rec.update(shot_noise_budget(cfg.atom, cal, p["N_p"], p["N_s"], p["tau"], p["N_rotors"]))
    return ["quantity", "value"], sorted(rec.items()), {"values": rec}


def cmd_classical(cfg):
    from . import semiclassical as sc

    p = cfg.params
    model = sc.ClassicalModel.build(cfg.lattice, cfg.atom, p["kinetic"], p["force_law"])
    f0 = np.asarray(p["f0"], dtype=float)
    if f0.shape != (3,) or not np.linalg.norm(f0) > 0:
        raise ConfigError("f0 must be a non-zero 3-vector")
    s0 = sc.ClassicalState(p["r0"], p["p0"], f0 / np.linalg.norm(f0))
    if p["t_end"] > 0:
        tr = sc.integrate(s0, model, p["t_end"], p["dt"], p["stride"])
    else:
        tr = sc.integrate_until_stable(s0, model, p["dt"], stride=p["stride"])
    b0, hw = sc.harmonic_units(cfg.lattice)
    payload = {
        "b0_lambda0": b0, "b0_m": b0 * cfg.lattice.lambda0, "hbar_Omega_h_E0": hw,
        "c1": model.c1, "c2": model.c2, "kinetic_factor": model.kin,
        "r_min": tr.r_min, "r_max": tr.r_max, "f_par_min": tr.fpar_min, "f_par_max": tr.fpar_max,
        "f_norm_drift": tr.f_norm_drift, "energy_drift": tr.energy_drift,
        "t_final": float(tr.t[-1]), "backend": tr.backend,
    }
    rows = tr.samples.tolist()
    return ["t", "x", "y", "p_x", "p_y", "f_x", "f_y", "f_z"], rows, payload


def recoil_table(atoms) -> list:
    """Rows ``(name, resonance wavelength [m], T0 [uK])``."""
    return [(a.name, a.resonance_wavelength, a.recoil_temperature() * 1e6) for a in atoms]


def cmd_recoil(cfg):
    atoms = []
    for name in cfg.params["atoms"]:
        if name not in ATOMS:
            raise ConfigError(f"unknown atom {name!r}")
        atoms.append(ATOMS[name])
    rows = recoil_table(atoms)
    payload = {"atoms": [{"name": n, "wavelength_m": w, "T0_uK": t} for n, w, t in rows]}
    return ["atom", "wavelength_m", "T0_uK"], rows, payload


HANDLERS = {
    "field": cmd_field, "spectrum": cmd_spectrum, "density": cmd_density, "raman": cmd_raman,
    "ramsey": cmd_ramsey, "sense-forward": cmd_sense_forward, "sense-invert": cmd_sense_invert,
    "budget": cmd_budget, "classical": cmd_classical, "recoil": cmd_recoil,
}


# --- driver --------------------------------------------------------------------

def render(cfg: RunConfig, now: Optional[_dt.datetime] = None) -> str:
    """Run ``cfg`` and return the output document as text."""
    header, rows, payload = HANDLERS[cfg.command](cfg)
    stamp = None
    if cfg.header_timestamp:
        stamp = (now or _dt.datetime.now(_dt.timezone.utc)).isoformat(timespec="seconds")
    if cfg.output_format == "json":
        doc = {"qrotor": __version__, "command": cfg.command, "config": cfg.to_dict(),
               "result": _floats(payload)}
        if stamp:
            doc["generated"] = stamp
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"
    lines = [f"# qrotor {__version__} {cfg.command}"]
    if stamp:
        lines.append(f"# generated {stamp}")
    return "\n".join(lines) + "\n" + _csv(header, rows)


def _destination(cfg: RunConfig) -> Optional[Path]:
    base = os.environ.get(OUTPUT_DIR_ENV)
    if cfg.output_path in (None, "-"):
        if cfg.output_path is None and base:
            return Path(base) / f"{cfg.command}.{cfg.output_format}"
        return None
    p = Path(cfg.output_path)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def run(cfg: RunConfig, stdout=None) -> int:
    """Execute a resolved configuration; returns the process exit code."""
    text = render(cfg)
    dest = _destination(cfg)
    if dest is None:
        (stdout or sys.stdout).write(text)
    else:
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qrotor", description="Optical-lattice quantum rotor toolkit")
    ap.add_argument("--version", action="version", version=f"qrotor {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, schema in COMMANDS.items():
        sp = sub.add_parser(name, help=f"run the {name} stage")
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--preset", choices=sorted(PRESETS))
        sp.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE",
                        help='override, e.g. lattice.V0=\'{"value":120,"unit":"E0"}\' or "120 E0"')
        sp.add_argument("--output", "-o", help="output file ('-' for stdout)")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--no-header-timestamp", action="store_true")
        sp.add_argument("--dump-config", action="store_true",
                        help="print the resolved configuration and exit")
        if name == "sense-invert":
            sp.add_argument("--input", help="measurement CSV (same as params.measurements)")
        sp.epilog = "parameters: " + ", ".join(
            f"{k} [{v.kind}] = {v.default!r}" for k, v in schema.items())
    return ap


def config_from_args(args) -> RunConfig:
    doc: dict = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load config {args.config!r}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config root must be an object")
    for text in args.overrides:
        sec, key, value = _parse_override(text)
        if sec == "atom" and isinstance(doc.get("atom"), str):
            doc["atom"] = {"name": doc["atom"]}
        doc.setdefault(sec, {})
        if not isinstance(doc[sec], dict):
            doc[sec] = {}
        doc[sec][key] = value
    out = dict(doc.get("output") or {})
    if args.output is not None:
        out["path"] = args.output
    if args.format is not None:
        out["format"] = args.format
    if args.no_header_timestamp:
        out["header_timestamp"] = False
    if out:
        doc["output"] = out
    if getattr(args, "input", None):
        doc.setdefault("params", {})["measurements"] = args.input
    return build_config(args.command, doc, preset=args.preset)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.dump_config:
            sys.stdout.write(cfg.to_json() + "\n")
            return EXIT_OK
        return run(cfg)
    except (ConfigError, CalibrationError) as exc:
        print(f"qrotor: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, EstimationError) as exc:
        print(f"qrotor: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except InconsistentMeasurementError as exc:
        print(f"qrotor: inconsistent measurements: {exc}", file=sys.stderr)
        return EXIT_MEASUREMENT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
