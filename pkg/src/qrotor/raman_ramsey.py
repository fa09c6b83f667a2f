"""Two-level Raman dynamics between the split rotor ground states.

The dressed two-level Hamiltonian in the basis ``(|0,1/2>, |0,-1/2>)`` is::

    H = hbar [[0, Omega_g/2], [Omega_g/2, delta]] - (i hbar Gamma / 2) * 1

with equal loss ``Gamma`` on both levels.  Since the decay part is a
multiple of the identity the propagator factorizes into a scalar damping
times an SU(2) rotation, so every quantity here is closed form.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, EstimationError


@dataclass(frozen=True)
class RamanConfig:
    """Raman/Ramsey drive parameters (angular frequencies and times in any
    consistent unit system)."""

    omega_g: float = 1.0
    delta: float = 0.0
    gamma: float = 0.0
    tau_p: float = np.pi / 2
    T_delay: float = 10.0

    def with_(self, **kw) -> "RamanConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class TwoLevelState:
    amplitude_up: complex
    amplitude_down: complex

    @property
    def populations(self):
        return abs(self.amplitude_up) ** 2, abs(self.amplitude_down) ** 2


def generalized_rabi(omega_g, delta):
    return np.hypot(delta, omega_g)


def raman_eigen(config: RamanConfig):
    """Complex eigenvalues (in units of hbar) and mixing coefficients.

    Returns
    -------
    eps_plus, eps_minus : complex
        ``(delta - i Gamma)/2 +/- Omega_tilde/2``.
    (U, V) : float
        ``sqrt((Omega_tilde +/- delta) / (2 Omega_tilde))``.
    """
    W = generalized_rabi(config.omega_g, config.delta)
    centre = 0.5 * (config.delta - 1j * config.gamma)
    if W == 0:
        return centre, centre, (1.0, 0.0)
    U = np.sqrt((W + config.delta) / (2 * W))
    V = np.sqrt((W - config.delta) / (2 * W))
    return centre + W / 2, centre - W / 2, (U, V)


def hamiltonian(config: RamanConfig) -> np.ndarray:
    """Non-Hermitian Hamiltonian matrix over hbar."""
    g = config.omega_g
    return np.array(
        [[-0.5j * config.gamma, g / 2], [g / 2, config.delta - 0.5j * config.gamma]],
        dtype=complex,
    )


def propagator(omega_g, delta, gamma, t):
    """Evolution operator ``exp(-i H t / hbar)``; broadcasts over inputs.

    Returns an array of shape ``broadcast_shape + (2, 2)``.
    """
    omega_g, delta, gamma, t = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (omega_g, delta, gamma, t))
    )
    W = np.hypot(delta, omega_g)
    half = 0.5 * W * t
    c = np.cos(half)
    # sin(W t/2)/W, finite as W -> 0
    s_over_W = np.where(W > 0, np.sin(half) / np.where(W > 0, W, 1.0), 0.5 * t)
    pref = np.exp(-0.5j * delta * t - 0.5 * gamma * t)
    U = np.empty(W.shape + (2, 2), dtype=complex)
    U[..., 0, 0] = pref * (c + 1j * delta * s_over_W)
    U[..., 1, 1] = pref * (c - 1j * delta * s_over_W)
    U[..., 0, 1] = U[..., 1, 0] = pref * (-1j * omega_g * s_over_W)
    return U


def evolve(config: RamanConfig, t, initial=(1.0, 0.0)) -> TwoLevelState:
    """State at time ``t`` starting from ``initial`` (default ``|0,1/2>``)."""
    U = propagator(config.omega_g, config.delta, config.gamma, t)
    psi = U @ np.asarray(initial, dtype=complex)
    return TwoLevelState(complex(psi[0]), complex(psi[1]))


def rabi_probabilities(config: RamanConfig, t):
    """Closed-form populations starting from ``|0,1/2>``.

    ``P_down = P0 sin^2(W t/2) e^{-Gamma t}`` with ``P0 = Omega_g^2 / W^2``
    and ``P_up = (1 - P0 sin^2(W t/2)) e^{-Gamma t}``.
    """
    t = np.asarray(t, dtype=float)
    W = generalized_rabi(config.omega_g, config.delta)
    P0 = rabi_envelope(config.omega_g, config.delta)
    s2 = np.sin(0.5 * W * t) ** 2
    decay = np.exp(-config.gamma * t)
    return (1.0 - P0 * s2) * decay, P0 * s2 * decay


def rabi_envelope(omega_g, delta):
    """Peak transfer probability ``Omega_g^2 / (delta^2 + Omega_g^2)``."""
    omega_g = np.asarray(omega_g, dtype=float)
    den = np.asarray(delta, dtype=float) ** 2 + omega_g**2
    return np.where(den > 0, omega_g**2 / np.where(den > 0, den, 1.0), 0.0)


def ramsey_sequence(config: RamanConfig, delta):
    """Propagator of pulse / free evolution / pulse at detunings ``delta``."""
    delta = np.asarray(delta, dtype=float)
    P = propagator(config.omega_g, delta, config.gamma, config.tau_p)
    F = propagator(0.0, delta, config.gamma, config.T_delay)
    return P @ F @ P


def ramsey_scan(config: RamanConfig, delta_grid):
    """Final ``|0,-1/2>`` population after the Ramsey sequence.

    Returns
    -------
    delta, probability : ndarray
    """
    delta = np.asarray(delta_grid, dtype=float)
    if delta.size == 0:
        raise ConfigError("empty detuning grid")
    U = ramsey_sequence(config, delta)
    return delta, np.abs(U[..., 1, 0]) ** 2


def fringe_spacing(config: RamanConfig) -> float:
    """Nominal fringe period in detuning, ``2 pi / (T + tau_p)``.

    For square pulses the accumulated phase grows with the free time plus
    roughly one pulse length.
    """
    return 2 * np.pi / (config.T_delay + config.tau_p)


def resonance_estimate(delta, probability, half_window: int = 2) -> float:
    """Detuning of the highest fringe maximum.

    The grid point with the largest population is located and a parabola is
    fitted by least squares through ``2 * half_window + 1`` points around
    it; its vertex is returned.
    """
    delta = np.asarray(delta, dtype=float)
    p = np.asarray(probability, dtype=float)
    if delta.size < 3:
        raise EstimationError("need at least three samples")
    i = int(np.argmax(p))
    k = max(1, int(half_window))
    if i - k < 0 or i + k >= delta.size:
        raise EstimationError("fringe maximum lies on the edge of the scan")
    x = delta[i - k : i + k + 1]
    y = p[i - k : i + k + 1]
    x0 = delta[i]
    a, b, _ = np.polyfit(x - x0, y, 2)
    if not a < 0:
        raise EstimationError("no interior maximum")
    return float(x0 - b / (2 * a))


def scan_two_photon(config: RamanConfig, omega_grid, delta_qr):
    """Fringes versus the two-photon frequency ``omega_p - omega_s``."""
    omega_grid = np.asarray(omega_grid, dtype=float)
    _, p = ramsey_scan(config, omega_grid - delta_qr)
    return omega_grid, p


def splitting_from_fringes(omega_grid, probability, half_window: int = 2) -> float:
    """Splitting ``Delta_QR`` read off a two-photon frequency scan."""
    # the peak sits at delta = 0, i.e. omega_p - omega_s = Delta_QR
    return resonance_estimate(omega_grid, probability, half_window)


def fringe_csv(delta, probability, header_lines=()) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["delta", "probability"])
    for d, p in zip(np.asarray(delta), np.asarray(probability)):
        w.writerow([repr(float(d)), repr(float(p))])
    return buf.getvalue()
