"""Pointwise kernels: fundamental solution, heat and Poisson kernels, DtN integrand, Upsilon.

Every kernel here is isotropic in the matrix sense, K(x) = a(|x|) I + b(|x|) x x^T/|x|^2,
so each function also exposes its two radial profiles for the Fourier and mass checks.
"""

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import special as spf
from ._rules import even_core_rule, gauss_legendre, sphere_area
from .errors import AccuracyError, DomainError, SingularityError
from .quadrature import PolarProfile, even_integrals, map_points
from .symbol import dtn_weights

SIGMA_TOL = 1e-13


def _points(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] not in (2, 3):
        raise DomainError("points must have a last axis of length 2 or 3")
    return x


def _assemble(iso, along, x):
    """iso(r) I + along(r) x x^T / r^2 for points x of shape (..., d)."""
    d = x.shape[-1]
    r2 = np.einsum("...i,...i->...", x, x)
    outer = x[..., :, None] * x[..., None, :] / r2[..., None, None]
    return iso[..., None, None] * np.eye(d) + along[..., None, None] * outer


def _nonzero(x):
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0.0):
        bad = x.reshape(-1, x.shape[-1])[np.argmin(r.ravel())]
        raise SingularityError(f"kernel is singular at x={bad.tolist()}")
    return r


def fundamental_solution_profiles(r, s, m, d):
    """(a, b) with Psi^s(x) = a(|x|) I + b(|x|) x x^T/|x|^2."""
    if not 0.0 < s < d / 2:
        raise DomainError(f"s={s} outside (0, d/2)")
    mu_s, lg_s = m.powers(s)
    pref = spf.const_gamma_pot(d, s) / (mu_s * lg_s)
    rp = np.asarray(r, dtype=float) ** (2 * s - d)
    return pref * ((2 * s - 1) * lg_s + mu_s) / (d - 2 * s) * rp, pref * (lg_s - mu_s) * rp


def fundamental_solution(x, s, m):
    x = _points(x)
    r = _nonzero(x)
    return _assemble(*fundamental_solution_profiles(r, s, m, x.shape[-1]), x)


def _gaussian(r2, sigma, d):
    return (4 * np.pi * sigma) ** (-d / 2) * np.exp(-r2 / (4 * sigma))


def heat_kernel_profiles(r, t, m, d):
    """(a, b) of W(x, t) with the sigma-integrals done by adaptive Gauss-Kronrod."""
    if t <= 0.0:
        raise DomainError("heat kernel needs t > 0")
    r2 = np.asarray(r, dtype=float) ** 2
    lo, hi = m.mu * t, m.longitudinal * t
    iso = _gaussian(r2, lo, d)
    if lo == hi:
        return iso, np.zeros_like(iso)

    def sig(sigma):
        h = _gaussian(r2, sigma, d)
        return np.stack([h / (2 * sigma), h / (4 * sigma**2)])

    vals, _ = integrate.quad_vec(sig, lo, hi, epsabs=0.0, epsrel=SIGMA_TOL)
    return iso - vals[0], vals[1] * r2


def heat_kernel(x, t, m):
    x = _points(x)
    r = np.linalg.norm(x, axis=-1)
    return _assemble(*heat_kernel_profiles(r, t, m, x.shape[-1]), x)


def _poisson_constant(d, s):
    return math.gamma(d / 2 + s) / (math.pi ** (d / 2) * math.gamma(s))


def poisson_kernel_profiles(r, t, s, m, d):
    """(a, b) of P(x, t): the mu^s term, the identity sigma-integral and the x x^T sigma-integral."""
    if t <= 0.0:
        raise DomainError("Poisson kernel needs t > 0")
    if not 0.0 < s < 1.0:
        raise DomainError(f"s={s} outside (0, 1)")
    r2 = np.asarray(r, dtype=float) ** 2
    cst = _poisson_constant(d, s)
    t2s = t ** (2 * s)
    p = (d + 2 * s) / 2
    iso = m.mu**s * cst * t2s * (r2 + m.mu * t * t) ** (-p)
    if m.mu == m.longitudinal:
        return iso, np.zeros_like(iso)

    def sig(sigma):
        base = sigma ** (s - 1) * (r2 + sigma * t * t) ** (-p)
        return np.stack([base, base / (r2 + sigma * t * t)])

    vals, _ = integrate.quad_vec(sig, m.mu, m.longitudinal, epsabs=0.0, epsrel=SIGMA_TOL)
    half = 0.5 * cst * t2s
    return iso - half * vals[0], (d + 2 * s) * half * vals[1] * r2


def poisson_kernel(x, t, s, m):
    x = _points(x)
    r = np.linalg.norm(x, axis=-1)
    return _assemble(*poisson_kernel_profiles(r, t, s, m, x.shape[-1]), x)


def poisson_kernel_gamma_integral(x, t, s, m, tol=1e-12):
    """P(x, t) from its defining subordination integral of the heat kernel (independent route)."""
    x = _points(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise DomainError("evaluate the subordination integral one point at a time")
    d = x.size
    r = float(np.linalg.norm(x))
    # heat time e^u: integrand W(x, e^u) exp(-t^2 e^{-u}/4) e^{-s u}
    def integrand(u):
        rh = math.exp(u)
        return np.array(heat_kernel_profiles(r, rh, m, d), dtype=float) * math.exp(-t * t / (4 * rh) - s * u)

    lo = 2 * math.log(t) - math.log(4 * 40.0)
    hi = 2 * math.log(max(r, t, 1.0)) + math.log(1.0 / tol) / s
    val, _ = integrate.quad_vec(integrand, lo, hi, epsabs=0.0, epsrel=tol, limit=400)
    val = val * t ** (2 * s) / (2 ** (2 * s) * math.gamma(s))
    return _assemble(val[0], val[1], x)


@dataclass(frozen=True)
class RadialGrid:
    """Log-radial rule for radial integrals: nodes per panel, panels per decade and the range in units of t."""

    r_min: float = 1e-8
    r_max: float = 1e4
    nodes: int = 16
    panels_per_decade: int = 2

    def rule(self, scale):
        lo, hi = math.log(self.r_min * scale), math.log(self.r_max * scale)
        n_pan = max(1, math.ceil((hi - lo) / math.log(10) * self.panels_per_decade))
        g, w = gauss_legendre(self.nodes)
        edges = np.linspace(lo, hi, n_pan + 1)
        u = (edges[:-1, None] + (edges[1:] - edges[:-1])[:, None] * g).ravel()
        wu = ((edges[1:] - edges[:-1])[:, None] * w).ravel()
        r = np.exp(u)
        return r, wu * r


def poisson_mass(t, s, m, grid=None, d=2, tol=1e-6):
    """int P(x, t) dx by log-radial quadrature plus the leading far-field tail."""
    grid = grid or RadialGrid()
    r, w = grid.rule(t)
    a, b = poisson_kernel_profiles(r, t, s, m, d)
    area = sphere_area(d)
    body = area * np.sum(w * r ** (d - 1) * (a + b / d))
    # far field: P ~ C t^{2s} (mu^s + delta/d) |x|^{-d-2s}
    cst = _poisson_constant(d, s)
    mu_s, lg_s = m.powers(s)
    lead = cst * (mu_s + (lg_s - mu_s) / d) * t ** (2 * s)
    big = grid.r_max * t
    tail = area * lead * big ** (-2 * s) / (2 * s)
    next_term = tail * (d + 2 * s) / 2 * max(m.mu, m.longitudinal) * t * t / big**2
    small = area * abs(a[0] + b[0] / d) * (grid.r_min * t) ** d / d
    if next_term + small > tol:
        raise AccuracyError(f"mass truncation estimate {next_term + small:.2e} exceeds tol {tol:.2e}")
    return (body + tail) * np.eye(d)


def poisson_dilation_residual(x, t, s, m):
    """max |P(x, t) - t^{-d} P(x/t, 1)| relative to |P(x, t)|."""
    x = _points(x)
    d = x.shape[-1]
    lhs = poisson_kernel(x, t, s, m)
    rhs = t ** (-d) * poisson_kernel(x / t, 1.0, s, m)
    return float(np.abs(lhs - rhs).max() / np.abs(lhs).max())


def sphere_volume_constant(d):
    """omega_d = |S^d|, surface area of the unit sphere one dimension up."""
    return 2 * math.pi ** ((d + 1) / 2) / math.gamma((d + 1) / 2)


def dtn_halfspace_apply(f, x, m_tilde, spec):
    """Half-space DtN map of the classical Lame system as two singular integrals of f."""
    d = f.d
    w1, w2 = dtn_weights(m_tilde)
    omega = sphere_volume_constant(d)

    def one(pt):
        iso, proj = even_integrals(PolarProfile(f, pt, spec, "even"), 0.5, spec.tol)
        return 0.5 * (w1 * 2 / omega * iso + w2 * 2 * (d + 1) / omega * proj)

    return map_points(one, x, spec, d)


def psi_profiles(r, s, d):
    """(psi_1, psi_2) as damped Bessel integrals, closed form via the Bessel-Laplace transform."""
    if not 0.0 < s < 1.0:
        raise DomainError(f"s={s} outside (0, 1)")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0):
        raise DomainError("psi profiles need r >= 0")
    nu = (d - 2) / 2
    pos = np.where(r > 0.0, r, 1.0)
    big = spf.bessel_laplace_integral(pos, 1.0, d / 2 + 2 * s + 1, nu)
    small = spf.bessel_laplace_integral(pos, 1.0, d / 2 + 2 * s, nu + 1)
    norm = (2 * np.pi) ** (-d / 2)
    psi1 = norm * (big + 2 * s * small)
    psi2 = norm * 2 * s * (big - d * small)
    kap = spf.const_kappa(d, s)
    psi1 = np.where(r > 0.0, psi1, 0.0)
    psi2 = np.where(r > 0.0, psi2, -kap)
    if r.ndim == 0:
        return float(psi1), float(psi2)
    return psi1, psi2


def psi1_alternative(r, s, d):
    """psi_1(r) = r (2 pi)^{-d/2} int t^{d/2+2s} e^{-rt} J_{nu+1}(t) dt."""
    r = np.asarray(r, dtype=float)
    nu = (d - 2) / 2
    return r * (2 * np.pi) ** (-d / 2) * spf.bessel_laplace_integral(r, 1.0, d / 2 + 2 * s + 1, nu + 1)


def upsilon_kernel(x, eps, s, d=None):
    x = _points(x)
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    d = x.shape[-1] if d is None else d
    r = _nonzero(x)
    psi1, psi2 = psi_profiles(eps / r, s, d)
    scale = r ** (-d - 2 * s)
    return _assemble(np.asarray(psi1) * scale, np.asarray(psi2) * scale, x)


def upsilon_mass_ratio(s, d, grid=None):
    """|int Upsilon| / int |trace part| for any eps (the eps-dependence factors out).

    int Upsilon dx = |S| eps^{-2s} int rho^{2s-1} (psi_1 + psi_2 / d)(rho) d rho * I.
    """
    grid = grid or RadialGrid(r_min=1e-9, r_max=1e5, nodes=16, panels_per_decade=3)
    rho, w = grid.rule(1.0)
    p1, p2 = psi_profiles(rho, s, d)
    f = rho ** (2 * s - 1) * (p1 + p2 / d)
    # below r_min the integrand tends to -kappa/d rho^{2s-1}
    head = -spf.const_kappa(d, s) / d * grid.r_min ** (2 * s) / (2 * s)
    total = np.sum(w * f) + head
    scale = np.sum(w * np.abs(f)) + abs(head)
    return abs(total) / scale


def radial_kernel_fourier(iso, along, xi, d, r_max, weight_power=0.0, r_core=1.0, n=16):
    """Fourier transform of x -> iso(r) I + along(r) x x^T/r^2 at frequency xi.

    iso/along are called on radius arrays and must be even-smooth in r after removal
    of the factor r^weight_power, which the core rule integrates exactly.
    """
    xi = np.asarray(xi, dtype=float)
    k = float(np.linalg.norm(xi))
    eta = xi / k if k > 0 else np.eye(d)[0]
    beta = weight_power + d - 1
    r0, w0 = even_core_rule(n, beta, r_core)
    step = min(0.25 / max(k, 1e-12), 1.0)
    n_pan = max(1, math.ceil((r_max - r_core) / step))
    edges = np.linspace(r_core, r_max, n_pan + 1)
    g, wg = gauss_legendre(n)
    r1 = (edges[:-1, None] + (edges[1:] - edges[:-1])[:, None] * g).ravel()
    w1 = ((edges[1:] - edges[:-1])[:, None] * wg).ravel() * r1**beta
    r = np.concatenate([r0, r1])
    w = np.concatenate([w0, w1])
    smooth = r ** (-weight_power)
    z = 2 * np.pi * k * r
    phi0 = spf.sphere_fourier_radial(z, d, 0)
    phi2 = spf.sphere_fourier_radial(z, d, 2)
    a = iso(r) * smooth
    b = along(r) * smooth
    parallel = np.sum(w * (a * phi0 + b * phi2))
    perp = np.sum(w * (a * phi0 + b * (phi0 - phi2) / (d - 1)))
    proj = np.outer(eta, eta)
    return parallel * proj + perp * (np.eye(d) - proj)


def fundamental_solution_fourier(xi, s, m, d, window=20.0):
    """Fourier transform of Psi^s tapered by exp(-|x|^2 / window^2)."""

    def taper(fn):
        return lambda r: fn(r) * np.exp(-((r / window) ** 2))

    prof = lambda r: fundamental_solution_profiles(r, s, m, d)
    return radial_kernel_fourier(
        taper(lambda r: prof(r)[0]), taper(lambda r: prof(r)[1]), xi, d, 6.5 * window, weight_power=2 * s - d
    )


KERNELS = ("fundamental", "heat", "poisson", "upsilon")


def evaluate_kernel(name, x, t, s, m, eps=1.0):
    if name == "fundamental":
        return fundamental_solution(x, s, m)
    if name == "heat":
        return heat_kernel(x, t, m)
    if name == "poisson":
        return poisson_kernel(x, t, s, m)
    if name == "upsilon":
        return upsilon_kernel(x, eps, s)
    raise DomainError(f"unknown kernel {name!r}; choose from {', '.join(KERNELS)}")


def tabulate_csv(name, points, t, s, m, eps=1.0):
    """CSV text: columns x1..xd, t, then matrix entries row-major."""
    pts = _points(np.atleast_2d(points))
    d = pts.shape[-1]
    vals = evaluate_kernel(name, pts, t, s, m, eps).reshape(len(pts), d * d)
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow([f"x{i + 1}" for i in range(d)] + ["t"] + [f"k{i + 1}{j + 1}" for i in range(d) for j in range(d)])
    for p, row in zip(pts, vals):
        out.writerow([repr(float(v)) for v in p] + [repr(float(t))] + [repr(float(v)) for v in row])
    return buf.getvalue()
