import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fraclame import extension as e
from fraclame import fields as fl
from fraclame.errors import AccuracyError, DomainError, PreconditionError
from fraclame.special import bessel_k_cal
from fraclame.symbol import ElasticModuli

GRID = fl.PeriodicGrid(2, 64, 12.0)
PACKET = fl.gaussian_wave_packet(GRID)
MODULI = ElasticModuli(1.0, 0.5)
LEVELS = e.ExtensionSlab.geometric(GRID, 0.1, 2.0, 40)


def test_slab_validation():
    with pytest.raises(DomainError):
        e.ExtensionSlab(GRID, (0.2, 0.1))
    with pytest.raises(DomainError):
        e.ExtensionSlab(GRID, (0.0, 0.1))
    with pytest.raises(DomainError):
        e.extend(PACKET, 0.5, MODULI, e.ExtensionSlab(fl.PeriodicGrid(2, 32, 12.0), (1.0,)))
    with pytest.raises(PreconditionError):
        e.pde_residual(e.extend(PACKET, 0.5, MODULI, e.ExtensionSlab(GRID, (0.1, 0.2, 0.3, 0.4))))


def test_constant_field_extends_to_itself():
    const = fl.Field(GRID, np.broadcast_to([0.3, -1.2], GRID.shape + (2,)).copy())
    U = e.extend(const, 0.4, MODULI, e.ExtensionSlab(GRID, (0.01, 1.0, 50.0)))
    for level in U.levels:
        np.testing.assert_allclose(level.values, const.values, rtol=1e-13)


def test_half_order_semigroup():
    a = e.extend_level(e.extend_level(PACKET, 0.3, 0.5, MODULI), 0.45, 0.5, MODULI)
    b = e.extend_level(PACKET, 0.75, 0.5, MODULI)
    assert np.abs(a.values - b.values).max() <= 1e-10 * np.abs(b.values).max()


def test_scalar_moduli_give_scalar_multiplier():
    m = ElasticModuli(1.4, -1.4)
    s, t = 0.3, 0.7
    got = e.extend_level(PACKET, t, s, m)
    arg = 2 * np.pi * math.sqrt(1.4) * GRID.frequency_norm() * t
    mult = np.ones_like(arg)
    mult[arg > 0] = bessel_k_cal(s, arg[arg > 0])
    ref = fl.apply_scalar_multiplier(PACKET, mult)
    np.testing.assert_allclose(got.values, ref.values, atol=1e-14)


def test_levels_approach_boundary_data():
    errs = [np.abs(e.extend_level(PACKET, t, 0.4, MODULI).values - PACKET.values).max() for t in (1e-2, 1e-3, 1e-4)]
    # the gap closes like t^{2s}
    rates = [math.log10(errs[i] / errs[i + 1]) for i in range(2)]
    assert rates == pytest.approx([0.8, 0.8], abs=0.1)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_extension_solves_degenerate_equation(s):
    assert e.pde_residual(e.extend(PACKET, s, MODULI, LEVELS)) <= 1e-4


def test_single_mode_is_scalar_ode():
    # one longitudinal mode: U = K_s(a t) u with a = 2 pi sqrt(2 mu + lambda) |xi|
    s, k = 0.35, np.array([1 / 3, 0.0])
    x = GRID.points()
    u = fl.Field(GRID, np.cos(2 * np.pi * x @ k)[..., None] * np.array([1.0, 0.0]))
    a = 2 * np.pi * math.sqrt(MODULI.longitudinal) * np.linalg.norm(k)
    for t in (0.2, 1.1):
        got = e.extend_level(u, t, s, MODULI)
        np.testing.assert_allclose(got.values, bessel_k_cal(s, a * t) * u.values, atol=1e-13)
    U = e.extend(u, s, MODULI, LEVELS)
    assert e.pde_residual(U) <= 1e-5


def test_half_order_incompressible_limit_is_harmonic():
    U = e.extend(PACKET, 0.5, ElasticModuli(1.0, -1.0), LEVELS)
    assert e.harmonic_residual(U) <= 1e-6


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_neumann_limit_recovers_operator(s):
    got = e.dtn_neumann(PACKET, s, MODULI)
    ref = fl.frac_lame_apply(PACKET, s, MODULI) * e.neumann_constant(s)
    assert np.abs(got.values - ref.values).max() <= 1e-3 * np.abs(ref.values).max()


def test_neumann_needs_small_decreasing_levels():
    with pytest.raises(PreconditionError):
        e.dtn_neumann(PACKET, 0.5, MODULI, (0.1, 0.05, 0.02))
    with pytest.raises(PreconditionError):
        e.dtn_neumann(PACKET, 0.5, MODULI, (0.01, 0.02, 0.03, 0.04))
    with pytest.raises(AccuracyError):
        e.dtn_neumann(PACKET, 0.5, MODULI, (2.0, 1.0, 0.5, 0.25))


@pytest.mark.parametrize("s", [0.2, 0.5, 0.8])
def test_mode_expansion_exponent(s):
    assert abs(e.mode_expansion_exponent(s) - 2 * s) <= 0.05


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_energy_identity(s):
    U = e.extend(PACKET, s, MODULI, e.ExtensionSlab.graded(GRID))
    lhs = fl.inner(fl.frac_lame_apply(PACKET, s, MODULI), PACKET)
    rhs = e.energy_identity_factor(s) * 2 * e.weighted_energy(U)
    assert rhs == pytest.approx(lhs, rel=1e-2)


def test_energy_mesh_checks():
    with pytest.raises(AccuracyError):
        e.weighted_energy(e.extend(PACKET, 0.5, MODULI, LEVELS))
    coarse = e.ExtensionSlab.graded(GRID, t_max=5.0, t_min=1e-3)
    with pytest.raises(AccuracyError):
        e.weighted_energy(e.extend(PACKET, 0.5, MODULI, coarse))


def test_energy_is_coercive_against_extension_seminorm():
    # the energy of U dominates min(mu, 2mu+lambda) times the Dirichlet energy of the vector harmonic part
    s, m = 0.5, ElasticModuli(0.6, 1.0)
    slab = e.ExtensionSlab.graded(GRID, t_max=100.0, t_min=1e-6)
    energy = e.weighted_energy(e.extend(PACKET, s, m, slab))
    lower = min(m.mu, m.longitudinal) ** s * fl.inner(fl.frac_laplacian(PACKET, s), PACKET) / e.energy_identity_factor(s) / 2
    assert energy >= 0.99 * lower


def test_korn_scalar_case_is_exact():
    for s in (0.2, 0.6):
        m = ElasticModuli(1.7, -1.7)
        u = fl.random_smooth_field(GRID, seed=3)
        assert e.korn_ratio(u, s, m) == pytest.approx(1.7**s / 2, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(
    st.integers(0, 10_000),
    st.floats(0.05, 0.95),
    st.floats(0.2, 3.0),
    st.floats(-0.6, 3.0),
)
def test_korn_ratio_bounds(seed, s, mu, lam_over_mu):
    m = ElasticModuli(mu, lam_over_mu * mu)
    u = fl.random_smooth_field(GRID, seed=seed)
    lo, hi = sorted((m.mu, m.longitudinal))
    ratio = e.korn_ratio(u, s, m)
    assert lo**s / 2 * (1 - 1e-12) <= ratio <= (1 + 2 * s) * hi**s / 2


def test_korn_rejects_constants():
    const = fl.Field(GRID, np.ones(GRID.shape + (2,)))
    with pytest.raises(DomainError):
        e.korn_ratio(const, 0.5, MODULI)


def test_dilation_invariance():
    # u_beta(x) = u(beta x) extends to U(beta x, beta t)
    s, beta = 0.4, 2.0
    x = GRID.points()
    f = fl.wave_packet_function(0.6, np.array([0.5, 0.25]), np.array([1.0, 0.2]), np.zeros(2))
    u = fl.Field(GRID, f(x))
    u_beta = fl.Field(GRID, f(beta * x))
    big = fl.PeriodicGrid(2, 64, 24.0)
    lhs = e.extend_level(u_beta, 0.3, s, MODULI).values
    U = e.extend_level(fl.Field(big, f(big.points())), 0.6, s, MODULI).values
    np.testing.assert_allclose(lhs, U, rtol=1e-10, atol=1e-14)
