"""Physical constants, atomic species and recoil-unit conversions.

Inside the solvers lengths are measured in the lattice wavelength
``lambda0`` and energies in the recoil energy ``E0 = 2 pi^2 hbar^2 / (M lambda0^2)``,
with ``hbar = 1``.  In these units the mass is ``M = 2 pi^2`` and the
kinetic prefactor ``hbar^2 / 2M`` is ``1 / (4 pi^2)``.  SI values appear only
at the sensing boundary.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import constants as _sc

HBAR = _sc.hbar
K_B = _sc.k
MU_B = _sc.physical_constants["Bohr magneton"][0]
C_LIGHT = _sc.c
MU_0 = _sc.mu_0
AMU = _sc.physical_constants["atomic mass constant"][0]

MASS_NATURAL = 2.0 * np.pi**2
KINETIC = 1.0 / (4.0 * np.pi**2)


@dataclass(frozen=True)
class AtomSpec:
    """Atomic species data.

    Parameters
    ----------
    name : str
    mass_u : float
        Atomic mass in unified atomic mass units.
    nuclear_spin_I : float
    F : float
        Total angular momentum of the trapped ground hyperfine level.
    g_factor : float
        Electron g-factor of the ground state, default 2.
    resonance_wavelength : float
        Vacuum wavelength (m) of the line used for the recoil temperature.
    """

    name: str
    mass_u: float
    nuclear_spin_I: float
    F: float
    g_factor: float = 2.0
    resonance_wavelength: float = 670.98e-9

    @property
    def mass(self) -> float:
        """Mass in kg."""
        return self.mass_u * AMU

    def recoil_energy(self, wavelength=None) -> float:
        """Recoil energy in J, ``hbar^2 q0^2 / 2M`` with ``q0 = 2 pi / wavelength``."""
        lam = self.resonance_wavelength if wavelength is None else wavelength
        q0 = 2.0 * np.pi / lam
        return HBAR**2 * q0**2 / (2.0 * self.mass)

    def recoil_temperature(self, wavelength=None) -> float:
        """Recoil temperature in K."""
        return self.recoil_energy(wavelength) / K_B

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AtomSpec":
        return cls(**d)


# Masses from AME2020; wavelengths are vacuum values of the D lines
# (Lyman-alpha for deuterium).
ATOMS = {
    "H2": AtomSpec("H2", 2.01410177812, 1.0, 0.5, resonance_wavelength=121.567e-9),
    "Li6": AtomSpec("Li6", 6.0151228874, 1.0, 0.5, resonance_wavelength=670.98e-9),
    "K40": AtomSpec("K40", 39.963998166, 4.0, 4.5, resonance_wavelength=770.108e-9),
    "Li7": AtomSpec("Li7", 7.0160034366, 1.5, 1.0, resonance_wavelength=670.98e-9),
    "Na23": AtomSpec("Na23", 22.9897692820, 1.5, 1.0, resonance_wavelength=589.158e-9),
    "K39": AtomSpec("K39", 38.9637064864, 1.5, 1.0, resonance_wavelength=770.108e-9),
}


def get_atom(name: str) -> AtomSpec:
    try:
        return ATOMS[name]
    except KeyError:
        raise KeyError(f"unknown atom {name!r}; known: {sorted(ATOMS)}") from None


def recoil_frequency(atom: AtomSpec, lambda0: float) -> float:
    """Recoil energy over hbar (rad/s) for a lattice of wavelength ``lambda0``."""
    return atom.recoil_energy(lambda0) / HBAR
