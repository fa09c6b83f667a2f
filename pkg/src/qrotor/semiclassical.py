"""Classical orbit and spin precession of a large-F atom near a well minimum.

Lengths are measured in the harmonic length ``b0``, momenta in
``hbar / b0``, time in ``1 / Omega_h`` and energy in ``hbar Omega_h``.  With
the power-series potential the reduced equations are::

    r' = kin * p
    p' = -r - c1 f_par
    f' = c2 (r x f)

where ``c1 = kappa F b0 / (hbar Omega_h)``, ``c2 = kappa b0 / (hbar Omega_h)``
and ``kappa = 2 pi B0 / ((2I + 1) lambda0)`` is the slope of the radial
fictitious field at the origin.  They conserve ``|f|`` and
``H = kin p^2/2 + r^2/2 + c1 r . f_par``.

The kinetic factor ``kin`` is 1 in the standard harmonic-unit reduction
(default, ``kinetic="reduced"``).  Converting the equations literally with
the given ``b0`` and ``Omega_h`` gives ``kin = hbar / (M b0^2 Omega_h) = 2``
(``kinetic="exact"``).

The hot loop runs in a compiled extension when available.  Set
``QROTOR_PURE_PYTHON=1`` to force the pure-Python kernel.
"""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .sdolp_field import LatticeSpec, isotropic_B, isotropic_B_derivative, isotropic_V_derivative
from .units import AtomSpec

from . import _rk4_py

_kernel_pure = _rk4_py.rk4_run
if os.environ.get("QROTOR_PURE_PYTHON", "") not in ("", "0"):
    _kernel_compiled = None
else:
    try:
        from ._rk4 import rk4_run as _kernel_compiled
    except ImportError:  # extension not built
        _kernel_compiled = None

BACKEND = "compiled" if _kernel_compiled is not None else "python"
MAX_DT = 0.01


@dataclass
class ClassicalState:
    """Position ``r`` (b0), momentum ``p`` (hbar/b0) and unit spin ``f``."""

    r: np.ndarray
    p: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float).reshape(2)
        self.p = np.asarray(self.p, dtype=float).reshape(2)
        self.f = np.asarray(self.f, dtype=float).reshape(3)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.r, self.p, self.f])

    @classmethod
    def from_vector(cls, y) -> "ClassicalState":
        y = np.asarray(y, dtype=float)
        return cls(y[0:2], y[2:4], y[4:7])


def harmonic_units(spec: LatticeSpec, atom: AtomSpec | None = None):
    """Harmonic length (units of lambda0) and energy (recoil units).

    ``b0 = (1/2pi)(2/V0)^(1/4)`` and ``hbar Omega_h = sqrt(V0/2)``.  Multiply
    ``b0`` by ``spec.lambda0`` for metres.
    """
    if not spec.V0 > 0:
        raise ConfigError("V0 must be positive")
    return (2.0 / spec.V0) ** 0.25 / (2 * np.pi), np.sqrt(spec.V0 / 2.0)


@dataclass(frozen=True)
class ClassicalModel:
    c1: float
    c2: float
    kin: float
    spin_F: float
    force_law: str = "series"
    spec: LatticeSpec = field(default_factory=LatticeSpec)

    @classmethod
    def build(cls, spec: LatticeSpec, atom: AtomSpec, kinetic="reduced", force_law="series"):
        if force_law not in ("series", "bessel"):
            raise ConfigError("force_law must be 'series' or 'bessel'")
        b0, hw = harmonic_units(spec, atom)
        kappa = 2 * np.pi * spec.B0 / (2 * atom.nuclear_spin_I + 1)
        if kinetic == "reduced":
            kin = 1.0
        elif kinetic == "exact":
            kin = 1.0 / (2 * np.pi**2 * b0**2 * hw)
        else:
            kin = float(kinetic)
        return cls(kappa * atom.F * b0 / hw, kappa * b0 / hw, kin, atom.F, force_law, spec)


def _bessel_terms(model: ClassicalModel, r_vec):
    """Potential gradient and field quantities for the full isotropic forms."""
    spec = model.spec
    b0, hw = harmonic_units(spec)
    x, y = r_vec
    rad = np.hypot(x, y)
    R = rad * b0
    rhat = np.array([x, y]) / rad if rad > 0 else np.zeros(2)
    dV = float(isotropic_V_derivative(spec, R))  # d V/dR, recoil/lambda0
    Bt = float(isotropic_B(spec, R))
    dB = float(isotropic_B_derivative(spec, R))
    return rad, rhat, dV * b0 / hw, Bt / hw, dB * b0 / hw


def hamilton_rhs(state: ClassicalState, model: ClassicalModel) -> ClassicalState:
    """Time derivatives of ``(r, p, f)`` in reduced units."""
    r, p, f = state.r, state.p, state.f
    rdot = model.kin * p
    if model.force_law == "series":
        pdot = -r - model.c1 * f[:2]
        r3 = np.array([r[0], r[1], 0.0])
        fdot = model.c2 * np.cross(r3, f)
        return ClassicalState(rdot, pdot, fdot)
    rad, rhat, dV, Bt, dB = _bessel_terms(model, r)
    F = model.spin_F
    fpar = f[:2]
    if rad > 0:
        s = rhat @ fpar
        grad = dV * rhat + F * (dB * s * rhat + Bt / rad * (fpar - s * rhat))
    else:
        grad = F * dB * fpar
    pdot = -grad
    fdot = Bt * np.cross(np.array([rhat[0], rhat[1], 0.0]), f)
    return ClassicalState(rdot, pdot, fdot)


def energy(state: ClassicalState, model: ClassicalModel) -> float:
    """Conserved energy in units of ``hbar Omega_h`` (well bottom at zero)."""
    r, p, f = state.r, state.p, state.f
    kin = 0.5 * model.kin * (p @ p)
    if model.force_law == "series":
        return float(kin + 0.5 * (r @ r) + model.c1 * (r @ f[:2]))
    spec = model.spec
    b0, hw = harmonic_units(spec)
    from .sdolp_field import isotropic_V

    rad = np.hypot(*r)
    V = (float(isotropic_V(spec, rad * b0)) + spec.V0) / hw
    s = (r @ f[:2]) / rad if rad > 0 else 0.0
    return float(kin + V + model.spin_F * float(isotropic_B(spec, rad * b0)) / hw * s)


@dataclass
class Trajectory:
    """Sampled trajectory plus running statistics over every step."""

    samples: np.ndarray  # rows (t, x, y, px, py, fx, fy, fz)
    r_min: float
    r_max: float
    fpar_min: float
    fpar_max: float
    f_norm_drift: float
    energy_drift: float
    backend: str

    @property
    def t(self):
        return self.samples[:, 0]

    @property
    def final_state(self) -> ClassicalState:
        return ClassicalState.from_vector(self.samples[-1, 1:])

    def to_csv(self, header_lines=()) -> str:
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x", "y", "p_x", "p_y", "f_x", "f_y", "f_z"])
        for row in self.samples:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def _rk4_python_general(y0, n_steps, dt, model, stride):
    """RK4 with the Bessel force law (always pure Python)."""

    def rhs(y):
        d = hamilton_rhs(ClassicalState.from_vector(y), model)
        return d.as_vector()

    y = np.array(y0, dtype=float)
    rows = [np.concatenate([[0.0], y])]
    st = [np.hypot(*y[:2])] * 2 + [np.hypot(*y[4:6])] * 2 + [abs(np.linalg.norm(y[4:]) - 1)]
    for i in range(1, n_steps + 1):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * dt * k1)
        k3 = rhs(y + 0.5 * dt * k2)
        k4 = rhs(y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        r, fp = np.hypot(*y[:2]), np.hypot(*y[4:6])
        st = [min(st[0], r), max(st[1], r), min(st[2], fp), max(st[3], fp),
              max(st[4], abs(np.linalg.norm(y[4:]) - 1))]
        if i % stride == 0 or i == n_steps:
            rows.append(np.concatenate([[i * dt], y]))
    return np.array(rows), np.array(st)


def integrate(state0: ClassicalState, model: ClassicalModel, t_end: float, dt: float = 0.005,
              stride: int = 10, backend: str | None = None) -> Trajectory:
    """Fixed-step fourth-order Runge-Kutta integration.

    ``t_end`` and ``dt`` are in units of ``1/Omega_h``; negative values
    integrate backwards.  ``|dt|`` must not exceed 0.01.  The spin norm is
    never renormalized; its drift is reported.
    """
    if dt == 0 or abs(dt) > MAX_DT:
        raise ConfigError(f"|dt| must be in (0, {MAX_DT}] harmonic times")
    if np.sign(t_end) != np.sign(dt) and t_end != 0:
        raise ConfigError("t_end and dt must have the same sign")
    n_steps = int(round(t_end / dt))
    stride = max(1, int(stride))
    y0 = np.ascontiguousarray(state0.as_vector(), dtype=float)
    if model.force_law != "series":
        samples, st = _rk4_python_general(y0, n_steps, dt, model, stride)
        used = "python"
    else:
        kind = backend or BACKEND
        if kind == "compiled":
            if _kernel_compiled is None:
                raise ConfigError("compiled kernel is not available")
            kern = _kernel_compiled
        elif kind == "python":
            kern = _kernel_pure
        else:
            raise ConfigError(f"unknown backend {kind!r}")
        samples, st = kern(y0, n_steps, float(dt), model.c1, model.c2, model.kin, stride)
        used = kind
    e0 = energy(state0, model)
    es = [energy(ClassicalState.from_vector(row[1:]), model) for row in samples]
    drift = max(abs(e - e0) for e in es) / max(abs(e0), 1e-300)
    return Trajectory(samples, *map(float, st), energy_drift=float(drift), backend=used)


def integrate_until_stable(state0: ClassicalState, model: ClassicalModel, dt: float = 0.005,
                           chunk: float = 50.0, tol: float = 1e-3, max_time: float = 2000.0,
                           stride: int = 10, backend: str | None = None):
    """Integrate in chunks until all four ring radii change by less than ``tol``.

    Returns the concatenated :class:`Trajectory` (statistics over the full run).
    """
    state = state0
    stats = None
    parts = []
    t = 0.0
    drift_f = drift_e = 0.0
    e0 = energy(state0, model)
    while t < max_time:
        tr = integrate(state, model, chunk, dt, stride, backend)
        seg = tr.samples.copy()
        seg[:, 0] += t
        parts.append(seg if not parts else seg[1:])
        new = np.array([tr.r_min, tr.r_max, tr.fpar_min, tr.fpar_max])
        if stats is None:
            merged = new
        else:
            merged = np.array([min(stats[0], new[0]), max(stats[1], new[1]),
                               min(stats[2], new[2]), max(stats[3], new[3])])
        drift_f = max(drift_f, tr.f_norm_drift)
        e_end = [energy(ClassicalState.from_vector(row[1:]), model) for row in seg]
        drift_e = max(drift_e, max(abs(e - e0) for e in e_end) / abs(e0))
        t += chunk
        state = tr.final_state
        if stats is not None and np.max(np.abs(merged - stats)) < tol:
            stats = merged
            break
        stats = merged
    return Trajectory(np.vstack(parts), *map(float, stats), f_norm_drift=drift_f,
                      energy_drift=drift_e, backend=tr.backend)


def ring_initial_state(normalize: bool = True) -> ClassicalState:
    """Initial data of the K-40 ring trajectory: ``x = 5 b0``,
    ``p_y = -3 hbar/b0`` and a spin tilted slightly out of ``-x``.

    The listed spin ``(-0.9975, 0.05, 0.05)`` has norm ``1.0000031``; by
    default it is normalized so the unit-norm invariant holds from ``t = 0``.
    """
    f = np.array([-0.9975, 0.05, 0.05])
    if normalize:
        f = f / np.linalg.norm(f)
    return ClassicalState([5.0, 0.0], [0.0, -3.0], f)
