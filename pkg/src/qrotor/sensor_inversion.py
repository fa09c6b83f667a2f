"""Magnetometer, gyroscope and accelerometer built on the rotor ground doublet.

Forward model: first-order shifts of the ``|zeta| = 1/2`` doublet and of the
``3/2, 5/2`` levels under an external field ``B``, a frame rotation ``Omega``
and an acceleration ``a``.  Inverse model: closed-form recovery of all nine
components from nine splittings measured with the lattice in the xy, yz and
zx planes and (for ``Delta_1``) at two lattice intensities.

All quantities are SI: tesla, rad/s, m/s^2.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional

import numpy as np

from .errors import CalibrationError, ConfigError, InconsistentMeasurementError
from .units import ATOMS, C_LIGHT, HBAR, MU_0, MU_B, AtomSpec

PLANES = {"xy": (0, 1, 2), "yz": (1, 2, 0), "zx": (2, 0, 1)}
INTENSITIES = (5, 10)
CAL_SCHEMA = "qrotor.calibration"
BUDGET_SCHEMA = "qrotor.budget"


@dataclass(frozen=True)
class FrameState:
    B_ex: np.ndarray = field(default_factory=lambda: np.zeros(3))
    Omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    accel: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("B_ex", "Omega", "accel"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,):
                raise ConfigError(f"{name} must be a 3-vector")
            object.__setattr__(self, name, v)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.B_ex, self.Omega, self.accel])


@dataclass(frozen=True)
class CalibrationEntry:
    beta_z_half: float
    beta_z_3half: float
    beta_z_5half: float
    beta_parallel: float
    rho_parallel: float  # units of lambda0


@dataclass
class CalibrationTable:
    """Radial integrals at lattice intensities ``N = 5, 10``.

    ``(V0, B0) = (10 N, 18 N)`` recoil energies.  ``lambda0`` converts
    ``rho_parallel`` to metres; ``atom`` supplies mass, spin and g-factor.
    """

    entries: Dict[int, CalibrationEntry]
    atom: AtomSpec
    lambda0: float

    def __post_init__(self):
        missing = [n for n in INTENSITIES if n not in self.entries]
        if missing:
            raise ConfigError(f"calibration lacks intensities {missing}")

    def zeeman_coefficient(self) -> float:
        """``g mu_B / (2I + 1)`` in J/T."""
        return self.atom.g_factor * MU_B / (2 * self.atom.nuclear_spin_I + 1)

    def beta_tilde(self, n: int) -> float:
        e = self.entries[n]
        return 5.0 * e.beta_z_5half - 3.0 * e.beta_z_3half

    def rho_metres(self, n: int = 10) -> float:
        return self.entries[n].rho_parallel * self.lambda0

    def to_json(self) -> str:
        return json.dumps({
            "schema": CAL_SCHEMA, "version": 1,
            "atom": self.atom.to_dict(), "lambda0": self.lambda0,
            "entries": {str(k): asdict(v) for k, v in sorted(self.entries.items())},
        }, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "CalibrationTable":
        doc = json.loads(text)
        if doc.get("schema") != CAL_SCHEMA:
            raise ConfigError("not a calibration document")
        entries = {int(k): CalibrationEntry(**v) for k, v in doc["entries"].items()}
        return cls(entries, AtomSpec.from_dict(doc["atom"]), float(doc["lambda0"]))

    @classmethod
    def from_spectrum(cls, atom: AtomSpec, lambda0: float, grid=None, **solve_kw) -> "CalibrationTable":
        """Populate the table from radial solves at ``N = 5`` and ``10``."""
        from .radial_spectrum import overlap_integrals, solve_spectrum
        from .sdolp_field import LatticeSpec

        entries = {}
        for n in INTENSITIES:
            spec = LatticeSpec(V0=10.0 * n, B0=18.0 * n, nuclear_spin_I=1.0, lambda0=lambda0)
            res = solve_spectrum(spec, n_max=1, grid=grid, zetas=(0.5, 1.5, 2.5), **solve_kw)
            o1 = overlap_integrals(res, 0, 0.5)
            entries[n] = CalibrationEntry(
                beta_z_half=o1.beta_z,
                beta_z_3half=overlap_integrals(res, 0, 1.5).beta_z,
                beta_z_5half=overlap_integrals(res, 0, 2.5).beta_z,
                beta_parallel=o1.beta_parallel,
                rho_parallel=o1.rho_parallel,
            )
        return cls(entries, atom, lambda0)


def reference_calibration() -> CalibrationTable:
    """Reference Li-6 calibration constants (lambda0 = 670.8 nm).

    ``N = 5`` has no reference ``beta_z_half``/``beta_parallel``/``rho``;
    those slots repeat the ``N = 10`` values and do not enter the inversion.
    """
    e10 = CalibrationEntry(0.107807, 0.117236, 0.111702, 0.478494, 0.0986575)
    e5 = CalibrationEntry(0.107807, 0.161531, 0.154678, 0.478494, 0.0986575)
    return CalibrationTable({5: e5, 10: e10}, ATOMS["Li6"], 670.8e-9)


@dataclass
class MeasurementSet:
    """Nine splittings (rad/s): ``delta0[plane]`` at ``N = 10`` and
    ``delta1[(plane, N)]`` for ``N = 5, 10``."""

    delta0: Dict[str, float]
    delta1: Dict[tuple, float]

    def __post_init__(self):
        if set(self.delta0) != set(PLANES):
            raise ConfigError("delta0 needs exactly the planes xy, yz, zx")
        want = {(p, n) for p in PLANES for n in INTENSITIES}
        if set(self.delta1) != want:
            raise ConfigError("delta1 needs every (plane, N) with N in {5, 10}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantity", "plane", "N", "value"])
        for p in PLANES:
            w.writerow(["delta0", p, 10, repr(float(self.delta0[p]))])
        for p in PLANES:
            for n in INTENSITIES:
                w.writerow(["delta1", p, n, repr(float(self.delta1[(p, n)]))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "MeasurementSet":
        rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
        if not rows or [c.strip() for c in rows[0]] != ["quantity", "plane", "N", "value"]:
            raise ConfigError("measurement CSV must have header quantity,plane,N,value")
        d0, d1 = {}, {}
        for row in rows[1:]:
            if len(row) != 4:
                raise ConfigError(f"malformed row {row}")
            q, p, n, v = (c.strip() for c in row)
            if p not in PLANES:
                raise ConfigError(f"unknown plane {p!r}")
            key_n = int(n)
            if q == "delta0":
                if key_n != 10 or p in d0:
                    raise ConfigError(f"bad or duplicate delta0 row {row}")
                d0[p] = float(v)
            elif q == "delta1":
                if (p, key_n) in d1:
                    raise ConfigError(f"duplicate delta1 row {row}")
                d1[(p, key_n)] = float(v)
            else:
                raise ConfigError(f"unknown quantity {q!r}")
        return cls(d0, d1)


# --- single-sensor splittings ------------------------------------------------

def zeeman_splitting(cal: CalibrationTable, B_z, atom: Optional[AtomSpec] = None, n: int = 10):
    """``g mu_B beta_z B_z / ((2I + 1) hbar)`` in rad/s."""
    a = atom or cal.atom
    c = a.g_factor * MU_B / (2 * a.nuclear_spin_I + 1)
    return c * cal.entries[n].beta_z_half * np.asarray(B_z) / HBAR


def field_from_splitting(cal: CalibrationTable, delta_qr, n: int = 10):
    return HBAR * np.asarray(delta_qr) / (cal.zeeman_coefficient() * cal.entries[n].beta_z_half)


def rotation_splitting(Omega_z):
    """Doublet splitting equals the rotation rate."""
    return np.asarray(Omega_z, dtype=float) * 1.0


def acceleration_splitting(cal: CalibrationTable, a_par, atom: Optional[AtomSpec] = None, n: int = 10):
    """``M a rho / hbar`` in rad/s."""
    a = atom or cal.atom
    return a.mass * np.asarray(a_par) * cal.rho_metres(n) / HBAR


def acceleration_from_splitting(cal: CalibrationTable, delta_qr, n: int = 10):
    return HBAR * np.asarray(delta_qr) / (cal.atom.mass * cal.rho_metres(n))


# --- first-order shifts -----------------------------------------------------

def _frame_terms(cal: CalibrationTable, frame: FrameState, axes=(0, 1, 2), n: int = 10):
    """Energies (J) ``Z = c beta_z B_n + hbar Omega_n`` and
    ``X_i = c beta_par B_i + M rho a_i`` for in-plane axes ``i``."""
    i, j, k = axes
    c = cal.zeeman_coefficient()
    e = cal.entries[n]
    Z = c * e.beta_z_half * frame.B_ex[k] + HBAR * frame.Omega[k]
    Mr = cal.atom.mass * cal.rho_metres(n)
    X = c * e.beta_parallel * frame.B_ex[i] + Mr * frame.accel[i]
    Y = c * e.beta_parallel * frame.B_ex[j] + Mr * frame.accel[j]
    return Z, X, Y


def first_order_shifts(cal: CalibrationTable, frame: FrameState, n: int = 10,
                       zeta: float = 0.5, plane: str = "xy"):
    """First-order energy corrections (J) of the pair ``(+zeta, -zeta)``.

    ``|zeta| = 1/2``: ``+/- 1/2 sqrt(Z^2 + |X + iY|^2)`` (degenerate
    perturbation theory within the doublet).  ``|zeta| >= 3/2``:
    ``+/- zeta (c beta_z(zeta) B_n + hbar Omega_n)``.
    """
    axes = PLANES[plane]
    z = abs(zeta)
    if z == 0.5:
        Z, X, Y = _frame_terms(cal, frame, axes, n)
        s = 0.5 * np.sqrt(Z**2 + X**2 + Y**2)
        return s, -s
    e = cal.entries[n]
    bz = {1.5: e.beta_z_3half, 2.5: e.beta_z_5half}.get(z)
    if bz is None:
        raise ConfigError("calibration holds beta_z only for |zeta| <= 5/2")
    k = axes[2]
    lin = z * (cal.zeeman_coefficient() * bz * frame.B_ex[k] + HBAR * frame.Omega[k])
    return lin, -lin


def doublet_matrix(cal: CalibrationTable, frame: FrameState, n: int = 10, plane: str = "xy"):
    """2x2 perturbation matrix (J) of the ``zeta = +/-1/2`` doublet."""
    Z, X, Y = _frame_terms(cal, frame, PLANES[plane], n)
    off = 0.5 * (X - 1j * Y)
    return np.array([[0.5 * Z, off], [np.conj(off), -0.5 * Z]])


def forward_measurements(cal: CalibrationTable, frame: FrameState) -> MeasurementSet:
    """Nine splittings for the three lattice orientations."""
    d0, d1 = {}, {}
    c = cal.zeeman_coefficient()
    for p, axes in PLANES.items():
        up, dn = first_order_shifts(cal, frame, 10, 0.5, p)
        d0[p] = float((up - dn) / HBAR)
        k = axes[2]
        for n in INTENSITIES:
            d1[(p, n)] = float(2 * frame.Omega[k] + c * cal.beta_tilde(n) * frame.B_ex[k] / HBAR)
    return MeasurementSet(d0, d1)


def invert_measurements(cal: CalibrationTable, meas: MeasurementSet, rtol: float = 1e-12) -> FrameState:
    """Recover ``(B, Omega, a)`` from nine splittings.

    ``Delta_1`` at two intensities fixes the normal components ``B_n`` and
    ``Omega_n`` of each plane.  Subtracting ``Z^2`` from ``(hbar Delta_0)^2``
    leaves ``A_p = X_i^2 + X_j^2`` per plane; the three such sums give every
    ``X_i^2`` and, on the branch ``X_i >= 0``, the accelerations.

    Raises
    ------
    CalibrationError
        If ``beta_tilde(10) == beta_tilde(5)``.
    InconsistentMeasurementError
        If some ``X_i^2`` is negative beyond round-off.
    """
    b5, b10 = cal.beta_tilde(5), cal.beta_tilde(10)
    den = b10 - b5
    if abs(den) < 1e-12 * max(abs(b5), abs(b10), 1.0):
        raise CalibrationError("beta_tilde is identical at both intensities")
    c = cal.zeeman_coefficient()
    B = np.zeros(3)
    Om = np.zeros(3)
    for p, (_, _, k) in PLANES.items():
        d5, d10 = meas.delta1[(p, 5)], meas.delta1[(p, 10)]
        B[k] = HBAR * (d10 - d5) / (c * den)
        Om[k] = (b10 * d5 - b5 * d10) / (2.0 * den)
    e = cal.entries[10]
    A = {}
    for p, (_, _, k) in PLANES.items():
        Z = c * e.beta_z_half * B[k] + HBAR * Om[k]
        A[p] = (HBAR * meas.delta0[p]) ** 2 - Z**2
    # X_x^2 = (A_xy + A_zx - A_yz)/2, cyclic
    Xsq = np.array([
        0.5 * (A["xy"] + A["zx"] - A["yz"]),
        0.5 * (A["yz"] + A["xy"] - A["zx"]),
        0.5 * (A["zx"] + A["yz"] - A["xy"]),
    ])
    scale = max((HBAR * abs(v)) ** 2 for v in meas.delta0.values())
    if np.any(Xsq < -rtol * max(scale, 1e-300)):
        raise InconsistentMeasurementError(
            f"negative radicand in the in-plane combination: {Xsq.min():.3e} J^2"
        )
    X = np.sqrt(np.clip(Xsq, 0.0, None))
    Mr = cal.atom.mass * cal.rho_metres(10)
    acc = (X - c * e.beta_parallel * B) / Mr
    return FrameState(B, Om, acc)


# --- budgets -----------------------------------------------------------------

def magnetic_dipole_coefficient(g: float = 2.0) -> float:
    """``delta Omega_z / Omega_z^3 = (mu0/4pi) 4 g^2 mu_B^2 / (3 hbar c^3)`` in s^2."""
    return MU_0 / (4 * np.pi) * 4 * g**2 * MU_B**2 / (3 * HBAR * C_LIGHT**3)


def energy_log_sensitivity(spec, quantity: str = "beta_z", h: float = 1e-3, grid=None):
    """``(E0 / q) |dq/dE0|`` by central differences of two extra solves.

    A change of recoil energy at fixed laser intensity rescales ``V0`` and
    ``B0`` (both in recoil units) by ``1/(1 +/- h)``.  A second estimate at
    step ``2h`` gives the Richardson-extrapolated value.

    Returns
    -------
    s, s_richardson : float
    """
    from .radial_spectrum import overlap_integrals, solve_spectrum

    def q(scale):
        s = spec.replace(V0=spec.V0 / scale, B0=spec.B0 / scale)
        res = solve_spectrum(s, n_max=1, grid=grid, zetas=(0.5,))
        o = overlap_integrals(res, 0, 0.5)
        return {"beta_z": o.beta_z, "rho_parallel": o.rho_parallel,
                "beta_parallel": o.beta_parallel}[quantity]

    q0 = q(1.0)
    d1 = (q(1 + h) - q(1 - h)) / (2 * h)
    d2 = (q(1 + 2 * h) - q(1 - 2 * h)) / (4 * h)
    rich = (4 * d1 - d2) / 3
    return abs(d1 / q0), abs(rich / q0)


def accuracy_budget(cal: CalibrationTable, atom: Optional[AtomSpec], delta_omega: float,
                    N_rotors: float, T_meas: float, omega_laser: float,
                    beta_sensitivity: float, rho_sensitivity: float) -> dict:
    """Fractional accuracies from laser-frequency noise and dipole decay.

    Parameters
    ----------
    beta_sensitivity, rho_sensitivity : float
        Logarithmic derivatives ``(E0/q)|dq/dE0|`` of ``beta_z`` and
        ``rho_parallel``; see :func:`energy_log_sensitivity`.
    delta_omega, omega_laser : float
        Laser linewidth and frequency (rad/s).  ``dE0/E0 = 2 d omega/omega``.
    """
    a = atom or cal.atom
    dE = 2.0 * delta_omega / omega_laser
    k_omega = magnetic_dipole_coefficient(a.g_factor)
    root = np.sqrt(delta_omega / (N_rotors * T_meas))
    return {
        "dB_over_B": beta_sensitivity * dE,
        "dOmega_over_Omega3_s2": k_omega,
        "da_over_a": rho_sensitivity * dE,
        # finite-measurement-time forms; d/d omega = (2 E0/omega) d/dE0
        "dBu_over_B": 2.0 * beta_sensitivity / omega_laser * root,
        "dOmegau_over_Omega32_s12": np.sqrt(k_omega / (N_rotors * T_meas)),
        "dau_over_a": 2.0 * rho_sensitivity / omega_laser * root,
    }


def photon_number(intensity: float, beam_radius: float, tau: float, omega: float) -> float:
    """``pi r_b^2 tau I / (hbar omega)``."""
    if omega <= 0:
        raise ConfigError("photon frequency must be positive")
    return np.pi * beam_radius**2 * tau * intensity / (HBAR * omega)


def shot_noise_budget(atom: Optional[AtomSpec], cal: CalibrationTable, N_p: float, N_s: float,
                      tau: float, N_rotors: float) -> dict:
    """Shot-noise limits of the three sensors.

    ``d phi_R = (pi/2)(N_p^-1/2 + N_s^-1/2)``,
    ``d Delta_QR = (1.92 / tau)(N_p^-1/2 + N_s^-1/2)`` and the propagated
    uncertainties with the ``1/sqrt(N_rotors)`` factor.
    """
    if N_p <= 0 or N_s <= 0:
        raise ConfigError("photon numbers must be positive")
    a = atom or cal.atom
    s = N_p**-0.5 + N_s**-0.5
    d_delta = 1.92 / tau * s
    root_n = np.sqrt(N_rotors)
    c = a.g_factor * MU_B / (2 * a.nuclear_spin_I + 1)
    return {
        "dphi_R": np.pi / 2 * s,
        "dDelta_QR_per_s": d_delta,
        "dB_T": HBAR * d_delta / (c * cal.entries[10].beta_z_half) / root_n,
        "dOmega_per_s": d_delta / root_n,
        "da_m_per_s2": HBAR * d_delta / (a.mass * cal.rho_metres(10)) / root_n,
    }


def budget_json(record: dict, meta: Optional[dict] = None) -> str:
    return json.dumps({"schema": BUDGET_SCHEMA, "version": 1, "meta": meta or {},
                       "values": {k: float(v) for k, v in record.items()}}, indent=1, sort_keys=True)
