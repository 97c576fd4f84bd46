"""Shared fixtures: the expensive solves are session-scoped and reused
by both the unit tests and the acceptance suite."""

import numpy as np
import pytest

import blowuplab.bvp as bvp
import blowuplab.oscillation as osc
import blowuplab.patterns as pat
import blowuplab.spectral as spectral
from blowuplab.model import ProblemParams

N02 = ProblemParams(0.2, 1.2, 1e-2)


@pytest.fixture(scope="session")
def half_mesh():
    return bvp.Mesh.uniform(0.0, 50.0, 2000)


@pytest.fixture(scope="session")
def full_mesh():
    return bvp.Mesh.uniform(-50.0, 50.0, 4000)


@pytest.fixture(scope="session")
def kernel_table():
    return spectral.compute_kernel(15.0, 4000)


@pytest.fixture(scope="session")
def kernel_table_wide():
    # the duality pairing integrates polynomial weights up to degree 6
    # against the kernel tail; the domain must hold y^6 exp(-d y^(4/3))
    # below tolerance at the cutoff, and the table must stay dense enough
    # for the derivative ladder
    return spectral.compute_kernel(44.0, 20000)


@pytest.fixture(scope="session")
def orbit_n02():
    return bvp.shoot_periodic_full(0.2, 1, 0.45)


@pytest.fixture(scope="session")
def basic_family(half_mesh):
    """Converged F_0..F_3 at n=0.2, p=n+1."""
    out = {}
    f0 = bvp.solve_profile(N02, pat.guess_factory(
        pat.FamilySpec("basic", 0, n=0.2), half_mesh, N02))
    assert f0.converged
    out[0] = f0
    for l in (1, 2, 3):
        guess = pat.guess_factory(pat.FamilySpec("basic", l, n=0.2),
                                  half_mesh, N02, template=f0)
        sol = bvp.solve_profile(N02, guess)
        assert sol.converged, f"basic({l}) failed to converge"
        out[l] = sol
    return out


@pytest.fixture(scope="session")
def f0_profile(basic_family):
    return basic_family[0]


@pytest.fixture(scope="session")
def periodic_components():
    """Stable oscillatory components at the two amplitudes the figures pin."""
    out = {}
    for n in (0.75, 5.0):
        mu = (2.0 * n + 3.0) / n
        scale = osc.equilibrium_value(n, mu)
        init = osc.OscState(0.0, 0.5 * scale, 0.0, 0.0)
        out[n] = osc.find_periodic_osc(n, mu, init)
    return out


@pytest.fixture(scope="session")
def f4_profile(half_mesh, orbit_n02):
    guess = pat.guess_factory(pat.FamilySpec("osc_plus", 4, n=0.2),
                              half_mesh, N02, orbit=orbit_n02)
    sol = bvp.solve_profile(N02, guess)
    assert sol.converged
    return sol
