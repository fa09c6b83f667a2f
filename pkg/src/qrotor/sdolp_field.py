"""Six-beam hexagonal lattice: scalar potential and fictitious magnetic field.

All lengths are in units of the lattice wavelength and energies in recoil
units.  The 2D forms are the polar-coordinate expansions of the exact
interference pattern of six in-plane beams at 60 degree spacing with mixing
parameter 1/sqrt(2); the isotropic forms are their m = 0 angular projections.

The fictitious field is reported in units where its overall scale is
``B0 / (2I + 1)``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import j0, j1

from .errors import ConfigError, SingularityError

THETA0 = 2.0 * np.pi / 3.0
SQRT3 = np.sqrt(3.0)
_M = np.arange(3)


@dataclass(frozen=True)
class LatticeSpec:
    """Lattice parameters.

    Parameters
    ----------
    V0 : float
        Scalar potential depth (recoil units).
    B0 : float
        Fictitious-field strength (recoil units).
    nuclear_spin_I : float
        Nuclear spin of the trapped species.
    lambda0 : float
        Laser wavelength in metres. Only used when converting to SI.
    beta_mix : float
        Polarization mixing parameter in (0, 1/sqrt(2)].
    detuning_Delta : float
        Laser detuning from resonance (rad/s); sign follows red < 0.
    gamma_e : float
        Excited-state decay rate (1/s).
    """

    V0: float = 100.0
    B0: float = 180.0
    nuclear_spin_I: float = 1.0
    lambda0: float = 670.8e-9
    beta_mix: float = 1.0 / np.sqrt(2.0)
    detuning_Delta: float = -1.0
    gamma_e: float = 0.0

    def __post_init__(self):
        if not self.lambda0 > 0:
            raise ConfigError("lambda0 must be positive")
        if not self.V0 > 0:
            raise ConfigError("V0 must be positive")
        if not 0 < self.beta_mix <= 1.0 / np.sqrt(2.0) + 1e-15:
            raise ConfigError("beta_mix must lie in (0, 1/sqrt(2)]")
        if self.nuclear_spin_I < 0 or (2 * self.nuclear_spin_I) % 1:
            raise ConfigError("nuclear spin must be a non-negative multiple of 1/2")

    @property
    def spin_multiplicity(self) -> float:
        return 2.0 * self.nuclear_spin_I + 1.0

    @property
    def field_scale(self) -> float:
        """``B0 / (2I + 1)``, the natural unit of the fictitious field."""
        return self.B0 / self.spin_multiplicity

    def replace(self, **kw) -> "LatticeSpec":
        d = asdict(self)
        d.update(kw)
        return LatticeSpec(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PolarizabilityInputs:
    """Two-line model of the ground-state polarizability.

    ``dipole_moment_d0`` is the reduced dipole matrix element; the result is
    in units of ``d0^2 / hbar`` divided by the frequency unit.
    """

    dipole_moment_d0: float
    omega_half: float
    omega_threehalf: float
    omega: float


@dataclass(frozen=True)
class FieldSample:
    r: float
    phi: float
    V: float
    B_r: float
    B_phi: float


def polarizabilities(inputs: PolarizabilityInputs, hbar: float = 1.0):
    """Scalar and vector polarizabilities from the two fine-structure lines.

    Returns
    -------
    alpha0, alpha1 : float
    """
    w, w1, w3 = inputs.omega, inputs.omega_half, inputs.omega_threehalf
    if w == w1 or w == w3:
        raise SingularityError("laser frequency equals a resonance")
    if not w < w1 < w3:
        raise ConfigError("expected omega < omega_half < omega_threehalf")
    d2 = inputs.dipole_moment_d0**2 / hbar
    a0 = d2 / 6.0 * (1.0 / (w1 - w) + 1.0 / (w3 - w))
    a1 = d2 / 3.0 / (w1 - w) - d2 / 6.0 / (w3 - w)
    return a0, a1


def _check_r(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ConfigError("r must be non-negative")
    return r


def scalar_potential_2d(spec: LatticeSpec, r, phi):
    """Scalar lattice potential ``V(r, phi)``.

    Parameters
    ----------
    spec : LatticeSpec
    r, phi : array_like
        Polar coordinates (broadcast together).
    """
    r = _check_r(r)
    r, phi = np.broadcast_arrays(r, np.asarray(phi, dtype=float))
    a = phi[..., None] - _M * THETA0
    rr = r[..., None]
    s = (
        1.0 / 3.0
        + np.sum(np.cos(2 * np.pi * rr * np.cos(a)), axis=-1) / 6.0
        + np.sum(np.cos(2 * SQRT3 * np.pi * rr * np.sin(a)), axis=-1) / 18.0
    )
    return -spec.V0 * s


def fictitious_field_2d(spec: LatticeSpec, r, phi):
    """Polar components ``(B_r, B_phi)`` of the in-plane fictitious field.

    The out-of-plane component vanishes identically for this geometry.
    """
    r = _check_r(r)
    r, phi = np.broadcast_arrays(r, np.asarray(phi, dtype=float))
    a = phi[..., None] - _M * THETA0
    rr = r[..., None]
    c, s = np.cos(a), np.sin(a)
    s1 = np.sin(2 * np.pi * rr * c)
    s2 = np.sin(2 * SQRT3 * np.pi * rr * s)
    s3 = np.sin(4 * np.pi * rr * c)
    Br = np.sum(c * s1 / 9.0 + s * s2 / (3 * SQRT3) + c * s3 / 9.0, axis=-1)
    Bphi = np.sum(-s * s1 / 9.0 + c * s2 / (3 * SQRT3) - s * s3 / 9.0, axis=-1)
    return spec.field_scale * Br, spec.field_scale * Bphi


def exact_fields_cartesian(spec: LatticeSpec, x, y):
    """Fields from the explicit sum over six plane waves.

    Independent of the polar expansions; used as a reference.  Returns
    ``(V, Bx, By, Bz)`` with the same sign conventions as the polar forms.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = 1.0 / np.sqrt(2.0)
    E = np.zeros(x.shape + (3,), dtype=complex)
    for n in range(6):
        ang = n * np.pi / 3
        qh = np.array([np.cos(ang), np.sin(ang)])
        pol = np.array([qh[1] * beta, -qh[0] * beta, np.sqrt(1 - beta**2)])
        phase = np.exp(2j * np.pi * (qh[0] * x + qh[1] * y))
        E += phase[..., None] * pol
    V = -spec.V0 * np.sum(np.abs(E) ** 2, axis=-1) / 18.0
    # vector light shift ~ i E* x E; sign chosen to match the polar forms
    B = -np.real(1j * np.cross(np.conj(E), E)) / 18.0 * spec.field_scale
    return V, B[..., 0], B[..., 1], B[..., 2]


def lattice_vectors():
    """Primitive vectors of the potential's Bravais lattice (units of lambda0)."""
    return np.array([1.0, 1.0 / SQRT3]), np.array([0.0, 2.0 / SQRT3])


def isotropic_V(spec: LatticeSpec, r):
    """Angular average of the scalar potential."""
    r = _check_r(r)
    return -(spec.V0 / 6.0) * (2.0 + 3.0 * j0(2 * np.pi * r) + j0(2 * SQRT3 * np.pi * r))


def isotropic_B(spec: LatticeSpec, r):
    """Angular average of the radial fictitious field."""
    r = _check_r(r)
    return (spec.field_scale / 3.0) * (
        j1(2 * np.pi * r) + j1(4 * np.pi * r) + SQRT3 * j1(2 * SQRT3 * np.pi * r)
    )


def isotropic_V_derivative(spec: LatticeSpec, r):
    r = _check_r(r)
    return (spec.V0 / 6.0) * (
        3.0 * 2 * np.pi * j1(2 * np.pi * r) + 2 * SQRT3 * np.pi * j1(2 * SQRT3 * np.pi * r)
    )


def isotropic_B_derivative(spec: LatticeSpec, r):
    # J1'(x) = J0(x) - J1(x)/x, finite at 0 with limit 1/2
    r = _check_r(r)

    def d(k):
        x = k * r
        with np.errstate(invalid="ignore", divide="ignore"):
            val = j0(x) - np.where(x > 0, j1(x) / np.where(x > 0, x, 1.0), 0.5)
        return k * val

    return (spec.field_scale / 3.0) * (
        d(2 * np.pi) + d(4 * np.pi) + SQRT3 * d(2 * SQRT3 * np.pi)
    )


def field_extrema(spec: LatticeSpec):
    """Location/value of the isotropic field maximum and its first zero.

    Returns
    -------
    r_B, B_max, r_c : float
    """
    res = minimize_scalar(
        lambda r: -isotropic_B(spec, r), bounds=(0.05, 0.3), method="bounded",
        options={"xatol": 1e-12},
    )
    r_c = brentq(lambda r: isotropic_B(spec, r), 0.3, 0.45, xtol=1e-14)
    return float(res.x), float(isotropic_B(spec, res.x)), float(r_c)


def anisotropy_bounds(spec: LatticeSpec, r):
    """Magnitudes of the lowest anisotropic corrections at radius ``r``.

    Returns
    -------
    dV1, dBr1, dBphi1 : float
        ``V0/180 (pi r)^6`` and ``B0/(120(2I+1)) (pi r)^5`` for both field
        components.
    """
    r = _check_r(r)
    if np.any(r > 0.3):
        raise ConfigError("small-r expansion used beyond r = 0.3")
    x = np.pi * r
    dV = spec.V0 / 180.0 * x**6
    dB = spec.field_scale / 120.0 * x**5
    return dV, dB, dB


def _field_component(spec, selector):
    if selector == "V":
        return lambda r, phi: scalar_potential_2d(spec, r, phi)
    if selector == "B_r":
        return lambda r, phi: fictitious_field_2d(spec, r, phi)[0]
    if selector == "B_phi":
        return lambda r, phi: fictitious_field_2d(spec, r, phi)[1]
    raise ConfigError(f"unknown field selector {selector!r}")


def fourier_coefficient(spec: LatticeSpec, field_selector: str, m: int, r: float,
                        tol: float = 1e-10, max_doublings: int = 12) -> complex:
    """Angular Fourier coefficient ``(1/2pi) \\oint F(r, phi) exp(-6 i m phi) dphi``.

    Uses the trapezoid rule over one pi/3 period with ``3 * 2**k`` nodes,
    doubling until successive estimates differ by less than ``tol``.  For a
    smooth periodic integrand the rule converges geometrically.
    """
    f = _field_component(spec, field_selector)
    prev = None
    for k in range(1, max_doublings + 1):
        n = 3 * 2**k
        phi = np.arange(n) * (np.pi / 3.0) / n
        val = complex(np.mean(f(r, phi) * np.exp(-6j * m * phi)))
        if prev is not None and abs(val - prev) < tol:
            return val
        prev = val
    return prev
