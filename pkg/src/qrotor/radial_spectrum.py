"""Coupled two-channel radial eigenproblem for an F = 1/2 atom in one well.

The spinor wavefunction with conserved total angular momentum ``zeta`` is
expanded into two radial channels ``psi_{+}(r)``, ``psi_{-}(r)`` (index
``sigma = +1/2, -1/2``).  In this basis the radial Hamiltonian reads::

    H_sigma = -k d^2/dr^2 + V(r) -/+ B(r)/2 + zeta^2 C(r),   C = k / r^2
    H_{+-}  = -zeta C(r)

with ``k = hbar^2/2M = 1/(4 pi^2)`` in recoil units.  The mixing matrix
of ``C`` has eigenvalues ``(zeta -/+ 1/2)^2``, the orbital angular momenta
of the two spin components ``(psi_+ +/- psi_-)/sqrt(2)``.

Two discretizations are provided, both second order and both giving a
symmetric banded matrix of bandwidth 2 with interleaved ``(r_i, sigma)``
ordering:

``"flux"`` (default)
    Cell-centred nodes ``r_i = (i - 1/2) h``.  The kinetic term is written
    in flux form for ``psi / sqrt(r)``, which handles the ``r^{1/2}``
    behaviour of the orbital s-wave component at the origin exactly and
    gives clean O(h^2) convergence.
``"dirichlet"``
    Nodes ``r_i = i h``, ``psi(0) = 0`` and a three-point second
    difference.  Convergence is only logarithmic whenever one spin
    component carries zero orbital angular momentum.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import eigvals_banded, solve_banded

from .errors import ConfigError, SingularityError, SolverError
from .sdolp_field import LatticeSpec, isotropic_B, isotropic_V
from .units import KINETIC

SCHEMA_VERSION = 1
SCHEMES = ("flux", "dirichlet")


@dataclass(frozen=True)
class RadialGrid:
    """Uniform radial grid on ``(0, r_max)`` with Dirichlet wall at ``r_max``."""

    r_max: float = 0.45
    n_points: int = 1000
    scheme: str = "flux"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}")
        if self.n_points < 100:
            raise ConfigError("grid too coarse: n_points < 100")
        if not self.r_max > 0:
            raise ConfigError("r_max must be positive")

    @property
    def spacing(self) -> float:
        if self.scheme == "flux":
            return self.r_max / self.n_points
        return self.r_max / (self.n_points + 1)

    @property
    def r(self) -> np.ndarray:
        h = self.spacing
        i = np.arange(1, self.n_points + 1)
        return (i - 0.5) * h if self.scheme == "flux" else i * h

    def refined(self, factor: int = 2) -> "RadialGrid":
        return RadialGrid(self.r_max, self.n_points * factor, self.scheme)


def _check_zeta(zeta):
    if (2 * zeta) % 1:
        raise ConfigError("zeta must be an integer or half-integer")


def assemble_hamiltonian(spec: LatticeSpec, zeta: float, grid: RadialGrid) -> np.ndarray:
    """Lower banded storage of the discretized radial Hamiltonian.

    Returns
    -------
    ab : ndarray, shape (3, 2 * n_points)
        ``ab[d, j] = H[j + d, j]`` (the layout of ``scipy.linalg.eig_banded``
        with ``lower=True``).  Even indices are ``sigma = +1/2``.
    """
    _check_zeta(zeta)
    r = grid.r
    h = grid.spacing
    N = grid.n_points
    V = isotropic_V(spec, r)
    B = isotropic_B(spec, r)
    C = KINETIC / r**2
    if grid.scheme == "flux":
        rp, rm = r + h / 2, r - h / 2
        kin_d = KINETIC * (rp + rm) / (r * h * h)
        kin_d[-1] += KINETIC * rp[-1] / (r[-1] * h * h)  # ghost node -psi_N
        kin_o = -KINETIC * rp[:-1] / (np.sqrt(r[:-1] * r[1:]) * h * h)
        cent = (zeta**2 + 0.25) * C
    else:
        kin_d = np.full(N, 2.0 * KINETIC / h**2)
        kin_o = np.full(N - 1, -KINETIC / h**2)
        cent = zeta**2 * C
    ab = np.zeros((3, 2 * N))
    ab[0, 0::2] = kin_d + V - B / 2 + cent
    ab[0, 1::2] = kin_d + V + B / 2 + cent
    ab[1, 0::2] = -zeta * C
    ab[2, 0:-2:2] = kin_o
    ab[2, 1:-2:2] = kin_o
    return ab


def banded_to_dense(ab: np.ndarray) -> np.ndarray:
    n = ab.shape[1]
    H = np.zeros((n, n))
    for d in range(ab.shape[0]):
        idx = np.arange(n - d)
        H[idx + d, idx] = ab[d, : n - d]
        H[idx, idx + d] = ab[d, : n - d]
    return H


def _lower_to_general(ab: np.ndarray) -> np.ndarray:
    """Lower symmetric banded storage -> (l, u) storage for ``solve_banded``."""
    p, n = ab.shape
    w = p - 1
    g = np.zeros((2 * w + 1, n))
    g[w] = ab[0]
    for d in range(1, p):
        g[w + d, : n - d] = ab[d, : n - d]  # sub-diagonal
        g[w - d, d:] = ab[d, : n - d]  # super-diagonal
    return g


def _eigenpairs(ab: np.ndarray, k: int):
    """Lowest ``k`` eigenpairs by banded bisection plus inverse iteration."""
    w = eigvals_banded(ab, lower=True, select="i", select_range=(0, k - 1))
    g = _lower_to_general(ab)
    wd = ab.shape[0] - 1
    n = ab.shape[1]
    rng = np.random.default_rng(12345)
    scale = max(1.0, float(np.max(np.abs(ab))))
    vecs = np.empty((n, k))
    for j, lam in enumerate(w):
        shifted = g.copy()
        shifted[wd] -= lam + 1e-12 * scale
        v = rng.standard_normal(n)
        for _ in range(3):
            v = solve_banded((wd, wd), shifted, v)
            # keep orthogonal to lower vectors (matters only for near-degeneracy)
            v -= vecs[:, :j] @ (vecs[:, :j].T @ v)
            v /= np.linalg.norm(v)
        vecs[:, j] = v
    return w, vecs


def banded_matvec(ab: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = ab[0] * v
    n = v.size
    for d in range(1, ab.shape[0]):
        out[d:] += ab[d, : n - d] * v[: n - d]
        out[: n - d] += ab[d, : n - d] * v[d:]
    return out


@dataclass
class SpectrumResult:
    """Eigenvalues and two-channel radial wavefunctions.

    ``levels`` maps ``(n, zeta)`` to the energy; ``wavefunctions`` maps the
    same key to an array of shape ``(2, n_points)`` holding ``psi_{+1/2}``
    and ``psi_{-1/2}`` normalized so that ``h * sum(psi**2) = 1``.
    """

    spec: LatticeSpec
    grid: RadialGrid
    levels: Dict[Tuple[int, float], float]
    wavefunctions: Dict[Tuple[int, float], np.ndarray]
    convergence: Dict[float, float] = field(default_factory=dict)

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    def energy(self, n: int, zeta: float) -> float:
        return self.levels[(n, float(zeta))]

    def psi(self, n: int, zeta: float) -> np.ndarray:
        try:
            return self.wavefunctions[(n, float(zeta))]
        except KeyError:
            raise KeyError(f"level (n={n}, zeta={zeta}) not in result") from None

    def table(self) -> List[Tuple[int, float, float]]:
        return sorted(((n, z, e) for (n, z), e in self.levels.items()), key=lambda t: (t[1], t[0]))

    def to_json(self, include_wavefunctions: bool = True) -> str:
        doc = {
            "schema": "qrotor.spectrum",
            "version": SCHEMA_VERSION,
            "lattice": self.spec.to_dict(),
            "grid": {"r_max": self.grid.r_max, "n_points": self.grid.n_points,
                     "scheme": self.grid.scheme},
            "levels": [{"n": n, "zeta": z, "energy": e} for n, z, e in self.table()],
            "convergence": {str(z): c for z, c in self.convergence.items()},
            "integrals": [],
        }
        for (n, z) in sorted(self.levels, key=lambda k: (k[1], k[0])):
            o = overlap_integrals(self, n, z)
            doc["integrals"].append({"n": n, "zeta": z, "beta_z": o.beta_z,
                                     "beta_parallel": o.beta_parallel,
                                     "rho_parallel": o.rho_parallel})
        if include_wavefunctions:
            doc["wavefunctions"] = [
                {"n": n, "zeta": z, "psi_up": self.wavefunctions[(n, z)][0].tolist(),
                 "psi_down": self.wavefunctions[(n, z)][1].tolist()}
                for (n, z) in sorted(self.wavefunctions, key=lambda k: (k[1], k[0]))
            ]
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "SpectrumResult":
        doc = json.loads(text)
        if doc.get("schema") != "qrotor.spectrum" or doc.get("version") != SCHEMA_VERSION:
            raise ConfigError("not a spectrum document of a supported version")
        spec = LatticeSpec(**doc["lattice"])
        grid = RadialGrid(**doc["grid"])
        levels = {(d["n"], float(d["zeta"])): d["energy"] for d in doc["levels"]}
        wfs = {}
        for d in doc.get("wavefunctions", []):
            wfs[(d["n"], float(d["zeta"]))] = np.array([d["psi_up"], d["psi_down"]])
        conv = {float(z): c for z, c in doc.get("convergence", {}).items()}
        return cls(spec, grid, levels, wfs, conv)


def _fix_sign(psi: np.ndarray) -> np.ndarray:
    i = np.argmax(np.abs(psi[0]))
    return psi if psi[0, i] > 0 else -psi


def solve_zeta(spec: LatticeSpec, zeta: float, grid: RadialGrid, n_levels: int = 1):
    """Lowest ``n_levels`` eigenpairs at fixed ``zeta`` on one grid.

    Returns
    -------
    energies : ndarray, shape (n_levels,)
    psis : ndarray, shape (n_levels, 2, n_points)
    """
    ab = assemble_hamiltonian(spec, zeta, grid)
    w, v = _eigenpairs(ab, n_levels)
    h = grid.spacing
    psis = np.empty((n_levels, 2, grid.n_points))
    for j in range(n_levels):
        p = np.vstack([v[0::2, j], v[1::2, j]]) / np.sqrt(h)
        psis[j] = _fix_sign(p)
    return w, psis


def zeta_values(zeta_max: float, bosonic: bool = False) -> List[float]:
    if bosonic:
        top = int(round(zeta_max))
        return [float(z) for z in range(-top, top + 1)]
    k = int(round(zeta_max - 0.5))
    pos = [0.5 + j for j in range(k + 1)]
    return [-z for z in reversed(pos)] + pos


def solve_spectrum(spec: LatticeSpec, n_max: int = 2, zeta_max: float = 0.5,
                   grid: Optional[RadialGrid] = None, tol: float = 1e-4,
                   max_refinements: int = 3, bosonic: bool = False,
                   zetas=None, check_convergence: bool = True) -> SpectrumResult:
    """Lowest ``n_max`` levels for every ``zeta`` in ``{-zeta_max, ..., zeta_max}``.

    Each ``zeta`` is solved on ``grid`` and on the doubled grid; the grid is
    doubled further until the lowest ``n_max`` eigenvalues change by less
    than ``tol`` (recoil units).  The finest grid's eigenpairs are returned.

    Raises
    ------
    SolverError
        If ``max_refinements`` doublings do not reach ``tol``.
    """
    import warnings

    grid = grid or RadialGrid()
    if spec.V0 < 5.0:
        warnings.warn("V0 is not deep compared with the recoil energy", stacklevel=2)
    zs = [float(z) for z in zetas] if zetas is not None else zeta_values(zeta_max, bosonic)
    for z in zs:
        _check_zeta(z)
    levels, wfs, conv, used = {}, {}, {}, {}
    for z in zs:
        g = grid
        w, p = solve_zeta(spec, z, g, n_max)
        change = np.nan
        if check_convergence:
            for _ in range(max_refinements):
                g2 = g.refined()
                w2, p2 = solve_zeta(spec, z, g2, n_max)
                change = float(np.max(np.abs(w2 - w)))
                g, w, p = g2, w2, p2
                if change < tol:
                    break
            else:
                raise SolverError(
                    f"zeta={z}: eigenvalues still change by {change:.3g} after "
                    f"{max_refinements} grid doublings (n_points={g.n_points})",
                    residual=change,
                )
        conv[z] = change
        used[z] = (g, w, p)
    # report every zeta on the finest grid any of them needed
    finest = max((u[0] for u in used.values()), key=lambda gg: gg.n_points)
    for z, (g, w, p) in used.items():
        if g.n_points != finest.n_points:
            w, p = solve_zeta(spec, z, finest, n_max)
        for n in range(n_max):
            levels[(n, z)] = float(w[n])
            wfs[(n, z)] = p[n]
    return SpectrumResult(spec, finest, levels, wfs, conv)


def areal_density(result: SpectrumResult, n: int, zeta: float, r=None):
    """Areal probability density ``sum_sigma psi_sigma^2 / (2 pi r)``.

    With ``r=None`` the density on the solver grid is returned.  Other radii
    are linearly interpolated; the density is zero beyond ``r_max``.
    """
    psi = result.psi(n, zeta)
    rg = result.r
    rho = np.sum(psi**2, axis=0) / (2 * np.pi * rg)
    if r is None:
        return rho
    r = np.asarray(r, dtype=float)
    return np.interp(r, rg, rho, left=rho[0], right=0.0)


def density_peak(result: SpectrumResult, n: int = 0, zeta: float = 0.5) -> float:
    """Radius of the density maximum, refined by a parabola through three nodes."""
    rho = areal_density(result, n, zeta)
    i = int(np.argmax(rho))
    rg = result.r
    if 0 < i < rho.size - 1:
        y0, y1, y2 = rho[i - 1 : i + 2]
        den = y0 - 2 * y1 + y2
        off = 0.5 * (y0 - y2) / den if den != 0 else 0.0
        return float(rg[i] + off * result.grid.spacing)
    return float(rg[i])


@dataclass(frozen=True)
class OverlapIntegrals:
    beta_z: float
    beta_parallel: float
    rho_parallel: float


def overlap_integrals(result: SpectrumResult, n: int, zeta: float) -> OverlapIntegrals:
    """Radial integrals entering the first-order Zeeman/acceleration shifts.

    ``beta_z = int psi_+ psi_- dr``,
    ``beta_parallel = 1/2 int (psi_+^2 - psi_-^2) dr``,
    ``rho_parallel = int (psi_+^2 + psi_-^2) r dr`` (units of lambda0).

    The integrands vanish at both ends of the grid, so the trapezoid rule
    reduces to ``h * sum``.
    """
    up, dn = result.psi(n, zeta)
    h = result.grid.spacing
    r = result.r
    return OverlapIntegrals(
        beta_z=float(h * np.sum(up * dn)),
        beta_parallel=float(0.5 * h * np.sum(up**2 - dn**2)),
        rho_parallel=float(h * np.sum((up**2 + dn**2) * r)),
    )


def spin_components(result: SpectrumResult, n: int, zeta: float):
    """Spin-up/down radial amplitudes and their orbital quantum numbers.

    Returns
    -------
    (chi_up, m_up), (chi_down, m_down)
    """
    up, dn = result.psi(n, zeta)
    return ((up + dn) / np.sqrt(2), zeta - 0.5), ((up - dn) / np.sqrt(2), zeta + 0.5)


def exotic_expectations(result: SpectrumResult, n: int, zeta: float):
    """``<l_z>``, ``<l_z^2>`` and ``<F_z>`` for an F = 1/2 rotor state.

    With ``beta = beta_z``: ``<F_z> = beta``, ``<l_z> = zeta - beta`` and
    ``<l_z^2> = zeta^2 + 1/4 - 2 zeta beta``; for ``|zeta| = 1/2`` the last
    reduces to ``1/2 - |beta|``.
    """
    b = overlap_integrals(result, n, zeta).beta_z
    return zeta - b, zeta**2 + 0.25 - 2 * zeta * b, b


def loss_rates(result: SpectrumResult, spec: LatticeSpec, hyperfine=(0.0, 1.0),
               energy_unit: float = 1.0, n: int = 0, zeta: float = 0.5):
    """Lattice loss rate of a rotor level and hyperfine-decay rate.

    ``Gamma = gamma_e / (2 Delta) * sum_sigma int (V + sign(sigma) B/2) psi^2 dr``
    and ``Gamma_hf = gamma_hf / Delta_hf * sum_sigma int (...) psi^2 dr``.

    Parameters
    ----------
    hyperfine : (gamma_hf, Delta_hf)
    energy_unit : float
        Recoil energy over hbar in the units of ``spec.detuning_Delta`` and
        ``Delta_hf``; 1 means detunings are given in recoil units.

    Returns
    -------
    Gamma, Gamma_hf : float
        Signed rates in the units of ``gamma_e`` / ``gamma_hf``.  Red
        detuning with an attractive potential gives a positive rate.
    """
    import warnings

    gamma_hf, delta_hf = hyperfine
    if spec.detuning_Delta == 0 or delta_hf == 0:
        raise SingularityError("zero detuning")
    up, dn = result.psi(n, zeta)
    r = result.r
    h = result.grid.spacing
    V = isotropic_V(spec, r)
    B = isotropic_B(spec, r)
    integral = h * np.sum((V + B / 2) * up**2 + (V - B / 2) * dn**2) * energy_unit
    G = spec.gamma_e / (2.0 * spec.detuning_Delta) * integral
    G_hf = gamma_hf / delta_hf * integral
    if G != 0 and abs(G_hf) >= 0.1 * abs(G):
        warnings.warn("hyperfine decay is not small compared with the lattice loss", stacklevel=2)
    return float(G), float(G_hf)
