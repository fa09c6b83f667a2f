import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from oracles import (SHOOTING_E0_3HALF, SHOOTING_E0_HALF, jacobi_eigenvalues,
                     shooting_determinant)
from qrotor.errors import ConfigError, SingularityError, SolverError
from qrotor.radial_spectrum import (RadialGrid, SpectrumResult, areal_density,
                                    assemble_hamiltonian, banded_matvec, banded_to_dense,
                                    density_peak, exotic_expectations, loss_rates,
                                    overlap_integrals, solve_spectrum, solve_zeta,
                                    spin_components, zeta_values)
from qrotor.sdolp_field import LatticeSpec

SPEC = LatticeSpec(V0=100.0, B0=180.0, nuclear_spin_I=1.0)


@pytest.fixture(scope="module")
def shooting_ground():
    return brentq(shooting_determinant, -99.6, -99.54, xtol=1e-10)


# --- grid and assembly -------------------------------------------------------

def test_grid_layout():
    g = RadialGrid(0.45, 1000)
    assert g.r[0] == pytest.approx(0.5 * g.spacing) and g.r[0] > 0
    d = RadialGrid(0.45, 1000, "dirichlet")
    assert d.r[0] == pytest.approx(d.spacing) and d.r[-1] < d.r_max
    with pytest.raises(ConfigError):
        RadialGrid(0.45, 99)
    with pytest.raises(ConfigError):
        RadialGrid(0.45, 1000, "spectral")


@pytest.mark.parametrize("scheme", ["flux", "dirichlet"])
@pytest.mark.parametrize("zeta", [0.5, -1.5, 2.0])
def test_hamiltonian_exactly_symmetric(scheme, zeta):
    A = banded_to_dense(assemble_hamiltonian(SPEC, zeta, RadialGrid(0.45, 120, scheme)))
    assert np.array_equal(A, A.T)
    assert A.shape == (240, 240)
    assert np.count_nonzero(np.triu(A, 3)) == 0


def test_banded_matvec_matches_dense(rng):
    ab = assemble_hamiltonian(SPEC, 1.5, RadialGrid(0.45, 150))
    v = rng.normal(size=300)
    assert np.allclose(banded_matvec(ab, v), banded_to_dense(ab) @ v, rtol=1e-13, atol=1e-10)


def test_half_integer_check():
    with pytest.raises(ConfigError):
        assemble_hamiltonian(SPEC, 0.3, RadialGrid())


def test_decoupled_channels_are_degenerate():
    spec = SPEC.replace(B0=0.0)
    w, _ = solve_zeta(spec, 0.0, RadialGrid(0.45, 400), 4)
    assert w[0] == pytest.approx(w[1], abs=1e-9)
    assert w[2] == pytest.approx(w[3], abs=1e-9)


# --- eigenvalues against independent oracles -------------------------------

@pytest.mark.parametrize("zeta", [0.5, 1.5])
def test_matches_dense_jacobi(zeta):
    grid = RadialGrid(0.45, 100)
    ab = assemble_hamiltonian(SPEC, zeta, grid)
    ref = jacobi_eigenvalues(banded_to_dense(ab))
    w, _ = solve_zeta(SPEC, zeta, grid, 3)
    assert np.allclose(w, ref[:3], atol=1e-8)


def test_converged_ground_state_matches_shooting(li6_spectrum, shooting_ground):
    assert shooting_ground == pytest.approx(SHOOTING_E0_HALF, abs=1e-6)
    assert li6_spectrum.energy(0, 0.5) == pytest.approx(shooting_ground, abs=1e-4)
    assert li6_spectrum.energy(0, 1.5) == pytest.approx(SHOOTING_E0_3HALF, abs=1e-4)


@pytest.mark.invariant
def test_second_order_convergence(shooting_ground):
    errs = [solve_zeta(SPEC, 0.5, RadialGrid(0.45, n), 1)[0][0] - shooting_ground
            for n in (250, 500, 1000)]
    for a, b in zip(errs, errs[1:]):
        assert a / b == pytest.approx(4.0, rel=0.05)


@pytest.mark.invariant
def test_refinement_contract(li6_spectrum):
    assert li6_spectrum.grid.n_points >= 1000
    assert all(c < 1e-4 for c in li6_spectrum.convergence.values())
    g = li6_spectrum.grid
    w2, _ = solve_zeta(SPEC, 0.5, g.refined(), 2)
    assert abs(w2[0] - li6_spectrum.energy(0, 0.5)) < 1e-4


def test_dirichlet_scheme_converges_slowly(shooting_ground):
    # the literal psi(0) = 0 discretization; error decays only logarithmically
    e = [solve_zeta(SPEC, 0.5, RadialGrid(0.45, n, "dirichlet"), 1)[0][0] for n in (300, 1000)]
    assert e[0] == pytest.approx(-99.198, abs=2e-3)
    assert shooting_ground < e[1] < e[0]
    assert e[1] - shooting_ground > 0.3


def test_outer_wall_insensitive():
    w = [solve_zeta(SPEC, 0.5, RadialGrid(rm, int(round(4000 * rm / 0.45))), 1)[0][0]
         for rm in (0.405, 0.45, 0.495)]
    assert np.ptp(w) < 1e-5


def test_non_convergence_raises():
    with pytest.raises(SolverError) as ei:
        solve_spectrum(SPEC, n_max=1, grid=RadialGrid(0.45, 100), tol=1e-12, max_refinements=1)
    assert ei.value.residual > 0


def test_shallow_lattice_warns():
    with pytest.warns(UserWarning):
        solve_spectrum(SPEC.replace(V0=2.0, B0=3.6), n_max=1, check_convergence=False)


def test_zeta_values():
    assert zeta_values(1.5) == [-1.5, -0.5, 0.5, 1.5]
    assert zeta_values(1, bosonic=True) == [-1.0, 0.0, 1.0]


# --- invariants -------------------------------------------------------------

@pytest.mark.invariant
def test_degeneracy(li6_spectrum):
    for (n, z), e in li6_spectrum.levels.items():
        assert abs(e - li6_spectrum.energy(n, -z)) < 1e-6


@pytest.mark.invariant
def test_channel_symmetry(li6_spectrum):
    for (n, z) in li6_spectrum.levels:
        if z > 0:
            up, dn = li6_spectrum.psi(n, z)
            up_, dn_ = li6_spectrum.psi(n, -z)
            assert np.max(np.abs(up_ - up)) < 1e-8 * np.max(np.abs(up))
            assert np.max(np.abs(dn_ + dn)) < 1e-8 * np.max(np.abs(up))


@pytest.mark.invariant
def test_normalization_and_orthogonality(li6_spectrum):
    h = li6_spectrum.grid.spacing
    for z in (0.5, 1.5, 2.5):
        a, b = li6_spectrum.psi(0, z), li6_spectrum.psi(1, z)
        assert h * np.sum(a**2) == pytest.approx(1.0, abs=1e-12)
        assert abs(h * np.sum(a * b)) < 1e-8
    r = li6_spectrum.r
    rho = areal_density(li6_spectrum, 0, 0.5)
    assert h * np.sum(rho * 2 * np.pi * r) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.invariant
@settings(max_examples=8, deadline=None)
@given(st.lists(st.floats(40.0, 200.0), min_size=2, max_size=4, unique=True))
def test_ground_energy_decreases_with_depth(depths):
    grid = RadialGrid(0.45, 600)
    e = [solve_zeta(SPEC.replace(V0=v), 0.5, grid, 1)[0][0] for v in sorted(depths)]
    assert all(a > b for a, b in zip(e, e[1:]))


@pytest.mark.invariant
def test_overlap_symmetries(li6_spectrum):
    for (n, z) in li6_spectrum.levels:
        a, b = overlap_integrals(li6_spectrum, n, z), overlap_integrals(li6_spectrum, n, -z)
        assert b.beta_z == pytest.approx(-a.beta_z, abs=1e-10)
        assert b.beta_parallel == pytest.approx(a.beta_parallel, abs=1e-10)
        assert b.rho_parallel == pytest.approx(a.rho_parallel, abs=1e-10)


# --- densities, expectations and rates ---------------------------------------

def test_density_peak_location(li6_spectrum):
    rho = areal_density(li6_spectrum, 0, 0.5)
    r = li6_spectrum.r
    peak = density_peak(li6_spectrum)
    assert abs(peak - r[np.argmax(rho)]) <= li6_spectrum.grid.spacing
    assert 0.05 < peak < 0.08
    # s-wave spin component: density finite at the origin
    assert rho[0] > 0.3 * rho.max()
    assert areal_density(li6_spectrum, 0, 0.5, r=[1.0])[0] == 0.0


def test_overlap_values_on_converged_grid(li6_spectrum):
    # continuum values of this discretization (see decisions ledger)
    o = overlap_integrals(li6_spectrum, 0, 0.5)
    assert o.beta_z == pytest.approx(0.130333, abs=2e-5)
    assert o.beta_parallel == pytest.approx(0.466976, abs=2e-5)
    assert o.rho_parallel == pytest.approx(0.094811, abs=2e-5)


def test_exotic_expectations_against_spin_components(li6_spectrum):
    h = li6_spectrum.grid.spacing
    for z in (0.5, -0.5, 1.5, -2.5):
        lz, lz2, fz = exotic_expectations(li6_spectrum, 0, z)
        (cu, mu), (cd, md) = spin_components(li6_spectrum, 0, z)
        wu, wd = h * np.sum(cu**2), h * np.sum(cd**2)
        assert wu + wd == pytest.approx(1.0, abs=1e-12)
        assert lz == pytest.approx(mu * wu + md * wd, abs=1e-12)
        assert lz2 == pytest.approx(mu**2 * wu + md**2 * wd, abs=1e-12)
        assert fz == pytest.approx(0.5 * wu - 0.5 * wd, abs=1e-12)
    b = overlap_integrals(li6_spectrum, 0, 0.5).beta_z
    assert exotic_expectations(li6_spectrum, 0, 0.5)[1] == pytest.approx(0.5 - abs(b))
    a, c = exotic_expectations(li6_spectrum, 0, 0.5), exotic_expectations(li6_spectrum, 0, -0.5)
    assert c[0] == pytest.approx(-a[0]) and c[1] == pytest.approx(a[1])


def test_zero_field_limit_is_pure_s_wave():
    res = solve_spectrum(SPEC.replace(B0=0.0), n_max=1, zetas=(0.5,))
    o = overlap_integrals(res, 0, 0.5)
    assert o.beta_z == pytest.approx(0.5, abs=1e-8)
    assert o.beta_parallel == pytest.approx(0.0, abs=1e-8)


def test_loss_rates(li6_spectrum):
    red = SPEC.replace(detuning_Delta=-1e6, gamma_e=0.0)
    assert loss_rates(li6_spectrum, red)[0] == 0.0
    red = red.replace(gamma_e=3.7e7)
    g, ghf = loss_rates(li6_spectrum, red, hyperfine=(1.586e-17, -1.434e9))
    assert g > 0  # attractive potential, red detuning
    assert 0 < ghf / g < 1e-20
    blue = red.replace(detuning_Delta=1e6)
    assert loss_rates(li6_spectrum, blue)[0] == pytest.approx(-g)
    with pytest.raises(SingularityError):
        loss_rates(li6_spectrum, red.replace(detuning_Delta=0.0))
    with pytest.warns(UserWarning):
        loss_rates(li6_spectrum, red, hyperfine=(3.7e7, -2e6))


def test_json_roundtrip(li6_spectrum):
    back = SpectrumResult.from_json(li6_spectrum.to_json())
    assert back.levels == li6_spectrum.levels
    assert back.grid == li6_spectrum.grid
    assert np.array_equal(back.psi(0, 0.5), li6_spectrum.psi(0, 0.5))
    with pytest.raises(ConfigError):
        SpectrumResult.from_json('{"schema": "other"}')


def test_bosonic_zero_zeta_decouples():
    res = solve_spectrum(SPEC, n_max=1, zeta_max=1, bosonic=True, check_convergence=False)
    assert set(z for _, z in res.levels) == {-1.0, 0.0, 1.0}
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert np.isfinite(res.energy(0, 0.0))
