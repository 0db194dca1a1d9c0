"""Special functions and the normalizing constants of the fractional operators.

Gamma and J_nu are thin wrappers over the standard library and scipy with the
domain checks the rest of the package relies on. The normalized Bessel profile
used by the Poisson symbol, the Euler-integral hypergeometric function and the
Laplace transform of J_nu are evaluated here directly from their integral
representations.
"""

import math

import numpy as np
from scipy import special as sp

from ._rules import real_line_trapezoid, sphere_area
from .errors import DomainError


def _check_dimension(d):
    if d not in (2, 3):
        raise DomainError(f"dimension must be 2 or 3, got {d}")


def gamma_fn(a):
    """Euler Gamma function; raises DomainError at the poles 0, -1, -2, ..."""
    a = float(a)
    if a <= 0.0 and a == math.floor(a):
        raise DomainError(f"Gamma has a pole at {a}")
    return math.gamma(a)


def beta_fn(a, b):
    """Euler Beta function B(a, b) for a, b > 0."""
    if a <= 0.0 or b <= 0.0:
        raise DomainError("Beta requires positive arguments")
    if a + b < 170.0:
        return math.gamma(a) * math.gamma(b) / math.gamma(a + b)
    return math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))


def bessel_j(nu, z):
    """Bessel function of the first kind J_nu(z) for nu > -1/2 and z >= 0."""
    if nu <= -0.5:
        raise DomainError("Bessel order must exceed -1/2")
    z = np.asarray(z, dtype=float)
    if np.any(z < 0.0):
        raise DomainError("Bessel argument must be nonnegative")
    out = sp.jv(nu, z)
    return float(out) if out.ndim == 0 else out


# Normalized modified Bessel profile
#
# With K_s(a) = 1/2 int exp(-a cosh v + s v) dv the profile is
#     K_cal(a) = (a/2)^s / Gamma(s) * int exp(-a cosh v + s v) dv,
# and the complement 1 - K_cal(a) is
#     (1/Gamma(s)) int exp(-e^v) (1 - exp(-a^2 e^{-v} / 4)) e^{s v} dv.
# Both integrands are analytic in a strip around the real axis, so the trapezoid
# rule converges geometrically in the step.


def _kcal_direct(s, a):
    a = np.asarray(a, dtype=float)
    h = np.minimum(0.25, 0.7 / np.sqrt(a))
    vmax = 1.15 * np.arccosh(1.0 + 50.0 / a) + 0.25
    k = int(np.ceil(np.max(vmax / h)))
    j = np.arange(-k, k + 1)
    v = (vmax / k)[..., None] * j
    step = vmax / k
    expo = -a[..., None] * (np.cosh(v) - 1.0) + s * (v + np.log(0.5 * a)[..., None])
    total = np.exp(expo).sum(axis=-1) * step
    return total * np.exp(-a) / math.gamma(s)


def _kcal_complement(s, a):
    a = np.asarray(a, dtype=float)
    c = 0.25 * a * a
    lo = np.log(c) - 41.0 / s
    hi = 4.0
    h = 0.2
    k = int(np.ceil(np.max((hi - lo) / h)))
    j = np.arange(k + 1)
    step = (hi - lo) / k
    v = lo[..., None] + step[..., None] * j
    g = np.exp(-np.exp(v) + s * v) * -np.expm1(-c[..., None] * np.exp(-v))
    ends = 0.5 * (g[..., 0] + g[..., -1])
    return (g.sum(axis=-1) - ends) * step / math.gamma(s)


def bessel_k_cal(s, a):
    """Normalized profile 2^{1-s} a^s K_s(a) / Gamma(s); equals 1 in the limit a -> 0."""
    if not 0.0 < s < 1.0:
        raise DomainError("order s must lie in (0, 1)")
    arr = np.asarray(a, dtype=float)
    if np.any(arr <= 0.0):
        raise DomainError("argument must be positive")
    flat = arr.ravel()
    out = np.empty_like(flat)
    small = flat < 0.5
    if small.any():
        out[small] = 1.0 - _kcal_complement(s, flat[small])
    if (~small).any():
        out[~small] = _kcal_direct(s, flat[~small])
    out = out.reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def bessel_k_cal_complement(s, a):
    """1 - bessel_k_cal(s, a), computed without cancellation for small a."""
    if not 0.0 < s < 1.0:
        raise DomainError("order s must lie in (0, 1)")
    arr = np.asarray(a, dtype=float)
    if np.any(arr <= 0.0):
        raise DomainError("argument must be positive")
    flat = arr.ravel()
    out = np.empty_like(flat)
    small = flat < 0.5
    if small.any():
        out[small] = _kcal_complement(s, flat[small])
    if (~small).any():
        out[~small] = 1.0 - _kcal_direct(s, flat[~small])
    out = out.reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def hypergeom_f(a, b, c, z, tol=1e-13):
    """Gauss hypergeometric F(a, b; c; z) for z <= 0 via the Euler integral (c > b > 0).

    The substitution t = 1 / (1 + e^{-u}) maps (0, 1) to the real line and removes
    the endpoint singularities. `z` may be an array.
    """
    if not c > b > 0.0:
        raise DomainError("Euler integral requires c > b > 0")
    zz = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(zz > 0.0):
        raise DomainError("only z <= 0 is supported")
    # log of the Beta normalization so that F(a, b; c; 0) = 1
    lognorm = math.lgamma(c) - math.lgamma(b) - math.lgamma(c - b)

    def integrand(u):
        # log t and log(1 - t) evaluated stably
        log_t = -np.logaddexp(0.0, -u)
        log_1mt = -np.logaddexp(0.0, u)
        t = np.exp(log_t)
        expo = b * log_t + (c - b) * log_1mt + lognorm
        return np.exp(expo[None, :] - a * np.log1p(-zz[:, None] * t[None, :]))

    out = real_line_trapezoid(integrand, tol=tol)
    return float(out[0]) if np.ndim(z) == 0 else out.reshape(np.shape(z))


def _laplace_bessel_unit(alpha, mu, nu):
    """int_0^inf exp(-alpha x) J_nu(x) x^{mu-1} dx, reducing mu - nu below 2 first.

    The reduction integrates by parts against d/dx[x^{nu+1} J_{nu+1}] = x^{nu+1} J_nu:
        I(mu, nu) = alpha I(mu, nu+1) - (mu - nu - 2) I(mu-1, nu+1).
    """
    if mu - nu >= 2.0:
        out = alpha * _laplace_bessel_unit(alpha, mu, nu + 1.0)
        coef = mu - nu - 2.0
        if coef != 0.0:
            out = out - coef * _laplace_bessel_unit(alpha, mu - 1.0, nu + 1.0)
        return out
    p = 0.5 * (nu + mu)
    pref = math.exp(math.lgamma(nu + mu) - nu * math.log(2.0) - math.lgamma(nu + 1.0))
    f = hypergeom_f(p + 0.5, p, nu + 1.0, -1.0 / alpha**2)
    return pref * alpha ** (-(mu + nu)) * f


def bessel_laplace_integral(a, b, mu, nu):
    """int_0^inf exp(-a x) J_nu(b x) x^{mu-1} dx through the hypergeometric closed form.

    `a` may be an array. Requires a, b > 0, nu > -1/2 and mu + nu > 0.
    """
    if nu <= -0.5:
        raise DomainError("Bessel order must exceed -1/2")
    if mu + nu <= 0.0:
        raise DomainError("integral diverges at the origin unless mu + nu > 0")
    a_arr = np.asarray(a, dtype=float)
    if np.any(a_arr <= 0.0) or b <= 0.0:
        raise DomainError("a and b must be positive")
    out = _laplace_bessel_unit(np.atleast_1d(a_arr) / b, float(mu), float(nu)) * b ** (-mu)
    return float(out[0]) if a_arr.ndim == 0 else out.reshape(a_arr.shape)


def const_c(d, s):
    """c_{d,s}: normalizes the fractional Laplacian to the symbol (2 pi |xi|)^{2s}."""
    _check_dimension(d)
    if not 0.0 < s < 1.0:
        raise DomainError("s must lie in (0, 1)")
    return 2.0 ** (2 * s) * s * math.gamma(d / 2 + s) / (math.pi ** (d / 2) * math.gamma(1 - s))


def const_kappa(d, s):
    """kappa_{d,s} = (d + 2s) c_{d,s}, the constant of the projected-difference operator."""
    return (d + 2 * s) * const_c(d, s)


def const_k(d, s):
    """k_{d,s}: normalizes the nonlocal gradient and divergence."""
    _check_dimension(d)
    if not 0.0 < s < 1.0:
        raise DomainError("s must lie in (0, 1)")
    return 2.0**s * math.gamma((d + s + 1) / 2) / (math.pi ** (d / 2) * math.gamma((1 - s) / 2))


def const_g(d, s):
    """g_{d,s}: constant of the scalar Riesz kernel |x|^{2s-d}."""
    _check_dimension(d)
    if not 0.0 < s < d / 2:
        raise DomainError("s must lie in (0, d/2)")
    return math.gamma(d / 2 - s) / (math.pi ** (d / 2) * 2.0 ** (2 * s) * math.gamma(s))


def const_gamma_pot(d, s):
    """gamma_{d,s}: constant of the elastic fundamental solution."""
    _check_dimension(d)
    if not 0.0 < s < d / 2:
        raise DomainError("s must lie in (0, d/2)")
    return math.gamma((d + 2 - 2 * s) / 2) / (2.0 ** (2 * s) * math.pi ** (d / 2) * math.gamma(1 + s))


def sphere_fourier_radial(r, d, moment):
    """Spherical averages of exp(-i r eta.omega) (moment 0) and (eta.omega)^2 exp(...) (moment 2).

    Returns the integral over S^{d-1} for a unit vector eta; r may be an array and
    r = 0 returns the limiting value.
    """
    _check_dimension(d)
    if moment not in (0, 2):
        raise DomainError("moment must be 0 or 2")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0):
        raise DomainError("radius must be nonnegative")
    nu = (d - 2) / 2
    area = sphere_area(d)
    safe = np.where(r > 0.0, r, 1.0)
    j0 = sp.jv(nu, safe) / safe**nu
    j1 = sp.jv(nu + 1, safe) / safe ** (nu + 1)
    base = (2 * np.pi) ** (d / 2)
    if moment == 0:
        out = np.where(r > 0.0, base * j0, area)
    else:
        out = np.where(r > 0.0, base * (j0 - (d - 1) * j1), area / d)
    return float(out) if out.ndim == 0 else out
