"""Quantum rotors of cold atoms in a spin-dependent hexagonal optical lattice.

Submodules
----------
sdolp_field
    Scalar potential and fictitious magnetic field of the lattice.
radial_spectrum
    Two-channel radial eigenproblem, rotor levels and overlap integrals.
raman_ramsey
    Raman Rabi and Ramsey dynamics of the split ground doublet.
sensor_inversion
    Forward and inverse sensing models and uncertainty budgets.
semiclassical
    Classical orbit/spin precession for large-F atoms.
cli
    Batch command-line front end (``qrotor``).
"""
__version__ = "0.1.0"

from .errors import (CalibrationError, ConfigError, EstimationError,  # noqa: E402
                     InconsistentMeasurementError, QRotorError, SingularityError,
                     SolverError)
from .sdolp_field import LatticeSpec  # noqa: E402
from .units import ATOMS, AtomSpec  # noqa: E402

__all__ = [
    "__version__", "LatticeSpec", "AtomSpec", "ATOMS", "QRotorError", "ConfigError",
    "SingularityError", "SolverError", "EstimationError", "InconsistentMeasurementError",
    "CalibrationError",
]
