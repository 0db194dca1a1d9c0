"""Quadrature rules and small numerical helpers used across modules."""

from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache

import numpy as np
from scipy import special as sp

from .errors import AccuracyError


@lru_cache(maxsize=None)
def gauss_legendre(n):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def gauss_jacobi(n, beta):
    """Nodes and weights on [0, 1] for the weight r**beta (beta > -1)."""
    x, w = sp.roots_jacobi(n, 0.0, beta)
    return 0.5 * (x + 1.0), w * 0.5 ** (beta + 1.0)


def panel_rule(breaks, n):
    """Composite Gauss-Legendre rule over consecutive intervals in `breaks`."""
    x, w = gauss_legendre(n)
    a = np.asarray(breaks[:-1], dtype=float)[:, None]
    b = np.asarray(breaks[1:], dtype=float)[:, None]
    return (a + (b - a) * x).ravel(), ((b - a) * w).ravel()


def log_panel_rule(lo, hi, n, panels_per_e=1.0):
    """Gauss-Legendre panels uniform in log(r) over [lo, hi]; returns r and dr weights."""
    k = max(1, int(np.ceil(np.log(hi / lo) * panels_per_e)))
    v, wv = panel_rule(np.linspace(np.log(lo), np.log(hi), k + 1), n)
    r = np.exp(v)
    return r, wv * r


def radial_breaks(r_core, r_max, max_panel=1.0):
    """Panel breakpoints: doubling from r_core up to max_panel length, then uniform."""
    breaks = [r_core]
    r = r_core
    while r < r_max:
        step = min(r, max_panel)
        r = min(r + step, r_max)
        breaks.append(r)
    return np.array(breaks)


@lru_cache(maxsize=None)
def _even_core_weights(n, beta):
    """Product-integration weights on [0, 1] for r**beta * g(r), g even and smooth.

    The nodes are Gauss-Legendre points; g is interpolated as a polynomial in r**2,
    so one set of samples serves every exponent beta.
    """
    r, _ = gauss_legendre(n)
    q = r * r
    k = np.arange(n)
    vander = q[None, :] ** k[:, None]
    moments = 1.0 / (beta + 2.0 * k + 1.0)
    return r, np.linalg.solve(vander, moments)


def even_core_rule(n, beta, r_core):
    """Rule for integral_0^r_core r**beta g(r) dr with g even in r."""
    r, w = _even_core_weights(n, float(beta))
    return r * r_core, w * r_core ** (beta + 1.0)


def half_sphere(d, n_angular):
    """Directions covering half of S^{d-1}, weights summing to |S^{d-1}|.

    Integrands handled by callers are even in the direction, so half the sphere with
    doubled weights integrates over the full sphere.
    """
    if d == 2:
        th = (np.arange(n_angular) + 0.5) * np.pi / n_angular
        dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)
        return dirs, np.full(n_angular, 2.0 * np.pi / n_angular)
    if d == 3:
        z, wz = gauss_legendre(n_angular)
        nphi = 2 * n_angular
        phi = (np.arange(nphi) + 0.5) * 2.0 * np.pi / nphi
        rho = np.sqrt(1.0 - z * z)
        dirs = np.stack(
            [
                (rho[:, None] * np.cos(phi)[None, :]).ravel(),
                (rho[:, None] * np.sin(phi)[None, :]).ravel(),
                np.repeat(z, nphi),
            ],
            axis=-1,
        )
        w = np.repeat(wz, nphi) * (2.0 * np.pi / nphi) * 2.0
        return dirs, w
    raise ValueError(f"unsupported dimension {d}")


def sphere_area(d):
    return 2.0 * np.pi ** (d / 2.0) / sp.gamma(d / 2.0)


def real_line_trapezoid(f, tol=1e-13, h0=0.5, span=8.0, max_halvings=12):
    """Integrate f over the real line for an analytic, two-sided decaying integrand.

    f maps a 1-d array of nodes to an array of shape (..., nodes). The window is grown
    until the integrand at both ends falls below 1e-17 of its running maximum, then the
    step is halved until successive sums agree to `tol` (relative).
    """
    lo, hi = -span, span
    for _ in range(60):
        u = np.arange(lo, hi + 0.5 * h0, h0)
        vals = np.abs(np.asarray(f(u)))
        vals = vals.reshape(-1, u.size)
        peak = vals.max(axis=1, keepdims=True)
        peak[peak == 0.0] = 1.0
        rel = vals / peak
        grow_lo = (rel[:, 0] > 1e-17).any()
        grow_hi = (rel[:, -1] > 1e-17).any()
        if not (grow_lo or grow_hi):
            keep = (rel > 1e-18).any(axis=0)
            idx = np.nonzero(keep)[0]
            if idx.size:
                lo = u[max(idx[0] - 1, 0)]
                hi = u[min(idx[-1] + 1, u.size - 1)]
            break
        if grow_lo:
            lo *= 2.0
        if grow_hi:
            hi *= 2.0
    else:
        raise AccuracyError("integrand does not decay within the search window")

    h = h0
    u = np.arange(lo, hi + 0.5 * h, h)
    total = h * np.asarray(f(u)).sum(axis=-1)
    for _ in range(max_halvings):
        h *= 0.5
        mid = u[:-1] + h
        new = 0.5 * total + h * np.asarray(f(mid)).sum(axis=-1)
        u = np.sort(np.concatenate([u, mid]))
        scale = np.maximum(np.abs(new), 1e-300)
        if np.all(np.abs(new - total) <= tol * scale):
            return new
        total = new
    raise AccuracyError("trapezoid refinement did not converge")


def chunked_map(fn, items, workers=1):
    """Map fn over items, preserving order; threads only change who runs each chunk."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def fornberg_weights(x0, x, m):
    """Finite-difference weights for the m-th derivative at x0 from nodes x."""
    n = len(x)
    c = np.zeros((n, m + 1))
    c1, c4 = 1.0, x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]
