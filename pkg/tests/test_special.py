import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fraclame import special
from fraclame.errors import DomainError

# Reference values computed once with scipy.integrate.quad on the defining integrals.
BETA_25_15 = 0.1963495408493625  # int_0^1 t^1.5 (1-t)^0.5 dt
J1_AT_3 = 0.3390589585259365  # (1/pi) int_0^pi cos(t - 3 sin t) dt
KCAL_03_AT_2 = 0.07757599762913238  # r-integral representation of K_s
HYP_07_12_25_M3 = 0.5764942030179978  # Euler integral


def test_gamma_classical_values():
    assert special.gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert special.gamma_fn(3) == pytest.approx(2.0, rel=1e-15)


@pytest.mark.parametrize("a", [0.0, -1.0, -4.0])
def test_gamma_poles_rejected(a):
    with pytest.raises(DomainError):
        special.gamma_fn(a)


@given(st.floats(0.1, 10.0))
def test_legendre_duplication(a):
    g = special.gamma_fn
    lhs = g(a) * g(a + 0.5)
    rhs = 2.0 ** (1 - 2 * a) * math.sqrt(math.pi) * g(2 * a)
    assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


def test_gamma_negative_range_uses_recurrence():
    for a in np.linspace(-9.7, 29.3, 41):
        assert special.gamma_fn(a + 1) == pytest.approx(a * special.gamma_fn(a), rel=1e-12)


def test_beta_values():
    assert special.beta_fn(1, 1) == pytest.approx(1.0)
    assert special.beta_fn(0.3, 0.7) == pytest.approx(math.pi / math.sin(0.3 * math.pi), rel=1e-13)
    assert special.beta_fn(2.5, 1.5) == pytest.approx(BETA_25_15, rel=1e-12)
    with pytest.raises(DomainError):
        special.beta_fn(0.0, 1.0)


def test_bessel_j_values():
    assert special.bessel_j(0, 0.0) == 1.0
    assert special.bessel_j(0.5, 2.0) == pytest.approx(math.sqrt(2 / (math.pi * 2)) * math.sin(2), rel=1e-13)
    assert special.bessel_j(1, 3.0) == pytest.approx(J1_AT_3, rel=1e-10)


@given(st.floats(-0.4, 3.0), st.floats(1e-3, 2.0))
def test_bessel_j_small_argument_bound(nu, z):
    # |J_nu(z)| <= (z/2)^nu / Gamma(nu + 1) for z <= 2
    bound = (z / 2) ** nu / special.gamma_fn(nu + 1)
    assert abs(special.bessel_j(nu, z)) <= bound * (1 + 1e-12)


def test_bessel_k_cal_values():
    assert special.bessel_k_cal(0.5, 1.3) == pytest.approx(math.exp(-1.3), rel=1e-13)
    assert abs(special.bessel_k_cal(0.5, 1e-6) - 1.0) <= 1e-4
    assert special.bessel_k_cal(0.3, 2.0) == pytest.approx(KCAL_03_AT_2, rel=1e-11)
    with pytest.raises(DomainError):
        special.bessel_k_cal(0.3, 0.0)


@pytest.mark.parametrize("s", [0.1, 0.25, 0.5, 0.75, 0.95])
def test_bessel_k_cal_bounded_and_decreasing(s):
    a = np.geomspace(1e-6, 60.0, 300)
    vals = special.bessel_k_cal(s, a)
    assert np.all(vals > 0.0) and np.all(vals <= 1.0)
    assert np.all(np.diff(vals) < 0.0)


@pytest.mark.parametrize("s", [0.2, 0.5, 0.8])
def test_bessel_k_cal_complement_small_argument(s):
    # two terms of the series of I_{-s} - I_s
    a = 1e-3
    q = (a / 2) ** 2
    series = math.gamma(1 - s) / math.gamma(1 + s) * (a / 2) ** (2 * s) * (1 + q / (1 + s)) - q / (1 - s)
    assert special.bessel_k_cal_complement(s, a) == pytest.approx(series, rel=1e-6)


def test_hypergeometric_values():
    assert special.hypergeom_f(0.7, 1.2, 2.5, 0.0) == pytest.approx(1.0, rel=1e-13)
    assert special.hypergeom_f(1, 1, 2, -1.0) == pytest.approx(math.log(2.0), rel=1e-13)
    assert special.hypergeom_f(0.7, 1.2, 2.5, -3.0) == pytest.approx(HYP_07_12_25_M3, rel=1e-10)
    with pytest.raises(DomainError):
        special.hypergeom_f(1, 2, 1.5, -1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(0.1, 2.0), st.floats(0.05, 3.0), st.floats(-50.0, 0.0))
def test_hypergeometric_in_unit_interval(a, b, dc, z):
    val = special.hypergeom_f(a, b, b + dc, z)
    assert 0.0 < val <= 1.0 + 1e-13


def _damped_bessel_quadrature(a, b, mu, nu):
    from scipy import integrate

    f = lambda x: math.exp(-a * x) * special.bessel_j(nu, b * x) * x ** (mu - 1)
    top = 60.0 / a
    val, _ = integrate.quad(f, 0.0, top, limit=2000, epsabs=1e-13, epsrel=1e-10)
    return val


@pytest.mark.parametrize(
    "a,b,mu,nu",
    [(1.0, 1.0, 1.0, 0.0), (0.5, 2.0, 2.5, 0.0), (2.0, 1.0, 3.2, 1.0), (1.0, 3.0, 1.7, 0.5), (0.3, 1.0, 4.0, 1.5)],
)
def test_bessel_laplace_matches_direct_quadrature(a, b, mu, nu):
    ref = _damped_bessel_quadrature(a, b, mu, nu)
    assert special.bessel_laplace_integral(a, b, mu, nu) == pytest.approx(ref, rel=1e-6)


def test_bessel_laplace_classical_transform():
    assert special.bessel_laplace_integral(1.0, 1.0, 1.0, 0.0) == pytest.approx(1 / math.sqrt(2), rel=1e-13)


def test_bessel_laplace_beta_case():
    # with mu = nu + 1 the transform is (2b)^nu Gamma(nu + 1/2) / (sqrt(pi) (a^2 + b^2)^{nu + 1/2})
    a, b, nu = 0.7, 1.9, 1.3
    ref = (2 * b) ** nu * math.gamma(nu + 0.5) / (math.sqrt(math.pi) * (a * a + b * b) ** (nu + 0.5))
    assert special.bessel_laplace_integral(a, b, nu + 1, nu) == pytest.approx(ref, rel=1e-12)


def test_bessel_laplace_large_ratio_stays_bounded():
    # for b/a large the transform behaves like a power of b, independent of a
    vals = [special.bessel_laplace_integral(a, 1.0, 2.2, 0.5) for a in (1e-2, 1e-3, 1e-4)]
    assert max(vals) / min(vals) < 1.1


def test_bessel_laplace_divergent_rejected():
    with pytest.raises(DomainError):
        special.bessel_laplace_integral(1.0, 1.0, -0.5, 0.0)


def test_constants_closed_values():
    assert special.const_c(2, 0.5) == pytest.approx(1 / (2 * math.pi), rel=1e-12)
    assert special.const_gamma_pot(3, 0.5) == pytest.approx(1 / math.pi**2, rel=1e-12)
    for d in (2, 3):
        for s in (0.25, 0.5, 0.75):
            assert special.const_kappa(d, s) == pytest.approx((d + 2 * s) * special.const_c(d, s), rel=1e-15)
            gam = special.const_gamma_pot(d, s)
            assert gam == pytest.approx((d - 2 * s) / (2 * s) * special.const_g(d, s), rel=1e-13)


def test_constants_reject_out_of_range():
    with pytest.raises(DomainError):
        special.const_c(2, 1.0)
    with pytest.raises(DomainError):
        special.const_g(2, 1.0)
    with pytest.raises(DomainError):
        special.const_k(4, 0.5)


def test_sphere_fourier_limits_and_value():
    for d in (2, 3):
        area = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
        assert special.sphere_fourier_radial(1e-9, d, 0) == pytest.approx(area, rel=1e-12)
        assert special.sphere_fourier_radial(1e-6, d, 2) == pytest.approx(area / d, rel=1e-9)
    assert special.sphere_fourier_radial(2.0, 3, 0) == pytest.approx(4 * math.pi * math.sin(2.0) / 2.0, rel=1e-13)


def test_sphere_fourier_second_moment_against_direct_quadrature():
    th = (np.arange(4000) + 0.5) * 2 * np.pi / 4000
    r = 1.7
    direct = np.sum(np.cos(th) ** 2 * np.cos(r * np.cos(th))) * 2 * np.pi / 4000
    assert special.sphere_fourier_radial(r, 2, 2) == pytest.approx(direct, rel=1e-12)
