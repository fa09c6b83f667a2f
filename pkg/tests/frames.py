"""Random sensing frames inside the valid-radicand region."""
import numpy as np

from qrotor.sensor_inversion import FrameState
from qrotor.units import HBAR


def random_frame(cal, rng, rate=5.0, x_range=(0.1, 1.0)):
    """Frame whose splittings are a few rad/s.

    ``B`` and ``Omega`` are drawn freely; the accelerations are chosen so that
    every in-plane term ``X_i = c beta_par B_i + M rho a_i`` lies in
    ``x_range * rate * hbar``, the branch the closed-form inversion assumes.
    """
    c = cal.zeeman_coefficient()
    e = cal.entries[10]
    B = rng.uniform(-1, 1, 3) * rate * HBAR / (c * e.beta_z_half)
    Om = rng.uniform(-1, 1, 3) * rate
    X = rng.uniform(*x_range, 3) * rate * HBAR
    Mr = cal.atom.mass * cal.rho_metres(10)
    a = (X - c * e.beta_parallel * B) / Mr
    return FrameState(B, Om, a)


def vector_errors(f, g):
    """Relative error of each recovered 3-vector."""
    return [np.linalg.norm(u - v) / np.linalg.norm(v)
            for u, v in ((g.B_ex, f.B_ex), (g.Omega, f.Omega), (g.accel, f.accel))]
