"""Real-space evaluation of the singular integral operators.

Every operator is reduced to a radial integral of angular moments of symmetric
differences around the evaluation point x:

    D2(r, w) = 2 u(x) - u(x + r w) - u(x - r w)     (even operators)
    D1(r, w) = (u(x + r w) - u(x - r w)) / 2        (gradient, divergence)

D2 / r^2 and D1 / r are smooth even functions of r, so no principal-value
cancellation is ever formed numerically. The radial rule is a product rule on
[0, r_core] whose nodes do not depend on s, followed by Gauss-Legendre panels of
doubling length up to 1 and unit length beyond. Samples are taken once per
point and reused for every order s. Panels whose annulus misses the support of
u contribute only through u(x), which is integrated exactly.
"""

import math
from dataclasses import dataclass, field as dc_field, replace
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import ndimage

from . import special as spf
from ._rules import chunked_map, even_core_rule, gauss_legendre, half_sphere, sphere_area
from .errors import AccuracyError, DomainError, PreconditionError
from .fields import Field, fft_forward


@dataclass(frozen=True)
class QuadratureSpec:
    r_inner: float = 0.0
    r_outer: float = 80.0
    n_radial: int = 10
    n_angular: int = 10
    tol: float = 1e-9
    r_core: float = 0.25
    workers: int = 1

    def __post_init__(self):
        if not 0.0 <= self.r_inner < self.r_outer:
            raise DomainError("need 0 <= r_inner < r_outer")
        if self.n_radial < 4 or self.n_angular < 4:
            raise DomainError("resolutions must be at least 4")
        if self.tol <= 0.0 or self.r_core <= 0.0:
            raise DomainError("tol and r_core must be positive")
        if self.workers < 1:
            raise DomainError("workers must be at least 1")


@dataclass(frozen=True)
class SampledField:
    """A field given by an evaluator on points of shape (N, d).

    The caller asserts |u(y)| <= tail_bound whenever |y - center| > support_radius.
    """

    evaluator: Callable
    support_radius: float
    d: int
    center: np.ndarray = dc_field(default=None)
    tail_bound: float = 0.0

    def __post_init__(self):
        if self.d not in (2, 3):
            raise DomainError("dimension must be 2 or 3")
        center = np.zeros(self.d) if self.center is None else np.asarray(self.center, dtype=float)
        object.__setattr__(self, "center", center)

    def __call__(self, points):
        pts = np.asarray(points, dtype=float).reshape(-1, self.d)
        vals = np.asarray(self.evaluator(pts), dtype=float)
        return vals.reshape(pts.shape[0], -1)

    @classmethod
    def from_grid(cls, field, support_radius=None, upsample=1):
        """Cubic-spline interpolant of a grid field, zero outside the box.

        `upsample` > 1 first refines the grid by spectral (zero-padded FFT)
        interpolation, which keeps the spline error far below that of the raw grid.
        """
        grid = field.grid
        vals = field.values.reshape(grid.shape + (-1,))
        if upsample > 1:
            vals = _spectral_upsample(vals, grid.d, upsample)
        n_fine = vals.shape[0]
        h = grid.L / n_fine
        coeffs = [ndimage.spline_filter(vals[..., c], order=3, mode="grid-wrap") for c in range(vals.shape[-1])]
        half = 0.5 * grid.L
        boundary = max(np.abs(np.take(vals, [0, -1], axis=ax)).max() for ax in range(grid.d))

        def evaluate(pts):
            idx = ((pts + half) / h).T
            out = np.stack(
                [ndimage.map_coordinates(cf, idx, order=3, mode="grid-wrap", prefilter=False) for cf in coeffs], -1
            )
            inside = np.all(np.abs(pts) <= half, axis=-1)
            return np.where(inside[:, None], out, 0.0)

        radius = half * math.sqrt(grid.d) if support_radius is None else support_radius
        return cls(evaluate, radius, grid.d, tail_bound=float(boundary))


def _spectral_upsample(vals, d, factor):
    n = vals.shape[0]
    axes = tuple(range(d))
    coef = np.fft.fftshift(np.fft.fftn(vals, axes=axes), axes=axes)
    big = n * factor
    pad = [((big - n) // 2, (big - n) // 2)] * d + [(0, 0)]
    # split the Nyquist bin evenly so the padded spectrum stays Hermitian
    for ax in range(d):
        sl = [slice(None)] * coef.ndim
        sl[ax] = 0
        coef[tuple(sl)] *= 0.5
        mirror = np.take(coef, [0], axis=ax)
        coef = np.concatenate([coef, mirror], axis=ax)
        pad[ax] = ((big - n) // 2, (big - n) // 2 - 1)
    coef = np.pad(coef, pad)
    coef = np.fft.ifftshift(coef, axes=axes)
    return np.fft.ifftn(coef, axes=axes).real * factor**d


def wave_packet_field(d, width=0.8, wavevector=None, polarization=None, center=None, tol=1e-15):
    """Closed-form Gaussian wave packet as a SampledField with a support radius tied to `tol`."""
    from .fields import wave_packet_function

    wavevector = np.asarray(wavevector if wavevector is not None else [1.0] + [0.0] * (d - 1), dtype=float)
    polarization = np.asarray(polarization if polarization is not None else np.ones(d) / np.sqrt(d), dtype=float)
    center = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    radius = width * math.sqrt(2.0 * math.log(1.0 / tol))
    fn = wave_packet_function(width, wavevector, polarization, center)
    amp = float(np.linalg.norm(polarization))
    return SampledField(fn, radius, d, center=center, tail_bound=amp * tol)


# Polar sampling


def _breaks(start, stop, r_core):
    """Panel edges: doubling lengths from `start` (or r_core) up to 1, then unit panels."""
    edges = [start if start > 0.0 else r_core]
    r = edges[0]
    while r < stop - 1e-12:
        r = min(r + min(r, 1.0), stop)
        edges.append(r)
    return edges


def _directions(d, n_angular, b):
    return half_sphere(d, n_angular * max(1, math.ceil(b)))


@lru_cache(maxsize=32)
def _flat_rule(d, n_radial, n_angular, r_core, start, stop, full):
    """All (radius, direction) pairs of the polar rule on (start, stop], flattened.

    Returns panel edges (a, b, is_core), radial nodes, the panel of each node, and
    per pair: unit direction, angular weight and node index.
    """
    panels = [(0.0, r_core, True)] if start == 0.0 else []
    edges = _breaks(start, stop, r_core)
    panels += [(a, b, False) for a, b in zip(edges[:-1], edges[1:])]
    g, _ = gauss_legendre(n_radial)
    nodes, owner, dirs, wts, idx = [], [], [], [], []
    for k, (a, b, core) in enumerate(panels):
        r = even_core_rule(n_radial, 0.0, r_core)[0] if core else a + (b - a) * g
        dv, wv = _directions(d, n_angular, b)
        if full:
            dv, wv = np.concatenate([dv, -dv]), np.concatenate([wv, wv]) * 0.5
        base = len(nodes) and sum(x.size for x in nodes)
        nodes.append(r)
        owner.append(np.full(r.size, k))
        dirs.append(np.tile(dv, (r.size, 1)))
        wts.append(np.tile(wv, r.size))
        idx.append(np.repeat(np.arange(base, base + r.size), dv.shape[0]))
    return (
        tuple(panels),
        np.concatenate(nodes),
        np.concatenate(owner),
        np.concatenate(dirs),
        np.concatenate(wts),
        np.concatenate(idx),
    )


@lru_cache(maxsize=256)
def _radial_weights(d, n_radial, n_angular, r_core, start, stop, full, beta):
    panels, r, owner, *_ = _flat_rule(d, n_radial, n_angular, r_core, start, stop, full)
    _, g = gauss_legendre(n_radial)
    out = np.empty_like(r)
    for k, (a, b, core) in enumerate(panels):
        sel = owner == k
        out[sel] = even_core_rule(n_radial, beta, r_core)[1] if core else (b - a) * g * r[sel] ** beta
    return out


class PolarProfile:
    """Angular moments of symmetric differences at one point, on s-independent radial nodes.

    kind "even": moments of D2 / r^2; "odd": of D1 / r (as comps x d); "eps": of
    the one-sided difference u(x) - u(x + r w) over the full sphere from `start`.
    """

    def __init__(self, u, x, spec, kind, start=0.0):
        self.d = u.d
        self.kind = kind
        x = np.asarray(x, dtype=float)
        self.center_value = u(x[None, :])[0]
        dist = float(np.linalg.norm(x - u.center))
        reach = dist + u.support_radius
        if reach > spec.r_outer:
            raise AccuracyError(f"support reaches radius {reach:.3g} beyond r_outer={spec.r_outer}")
        stop = float(max(math.ceil(reach), 1))
        self.key = (u.d, spec.n_radial, spec.n_angular, spec.r_core, float(start), stop, kind == "eps")
        panels, r, owner, dirs, w, idx = _flat_rule(*self.key)
        self.R = stop
        lo, hi = dist - u.support_radius, dist + u.support_radius
        skip = np.array([a >= 1.0 and (a > hi or b < lo) for a, b, _ in panels])
        self.skipped = [(a, b) for (a, b, _), sk in zip(panels, skip) if sk]
        self.tail_bound = u.tail_bound
        self.first_gap = min([a for a, _ in self.skipped] + [stop])
        live = ~skip[owner[idx]]
        dirs, w, idx = dirs[live], w[live], idx[live]
        offsets = r[idx, None] * dirs
        plus = u(x + offsets)
        comps = plus.shape[1]
        if kind == "eps":
            diff = self.center_value - plus
        elif kind == "even":
            minus = u(x - offsets)
            diff = (2.0 * self.center_value - plus - minus) / (r[idx] ** 2)[:, None]
        else:
            minus = u(x - offsets)
            diff = 0.5 * (plus - minus) / r[idx, None]
        n = r.size

        def collect(vals):
            return np.stack([np.bincount(idx, weights=vals[:, j], minlength=n) for j in range(vals.shape[1])], -1)

        if kind == "odd":
            self.moments = {"grad": collect((diff[:, :, None] * dirs[:, None, :]).reshape(-1, comps * self.d) * w[:, None])
                            .reshape(n, comps, self.d)}
        else:
            along = np.einsum("pi,pi->p", diff, dirs) if comps == self.d else None
            self.moments = {"iso": collect(diff * w[:, None])}
            if along is not None:
                self.moments["proj"] = collect(dirs * (along * w)[:, None])

    def check_tail(self, power, tol):
        """Bound on what the samples assumed zero beyond the support can contribute."""
        if self.tail_bound == 0.0:
            return
        est = 2.0 * self.tail_bound * sphere_area(self.d) * self.first_gap ** (-power) / power
        if est > tol:
            raise AccuracyError(f"tail estimate {est:.2e} exceeds tol {tol:.2e}")

    def radial_sum(self, beta, key):
        """int r^beta * moment(r) dr over the sampled panels."""
        wr = _radial_weights(*self.key, float(beta))
        return np.tensordot(wr, self.moments[key], axes=(0, 0))

    def constant_part(self, power):
        """int r^{-1-power} dr over the skipped panels and beyond the last panel."""
        total = self.R ** (-power) / power
        for a, b in self.skipped:
            total += (a ** (-power) - b ** (-power)) / power
        return total


def _coefficients(s, m):
    mu_s, lg_s = m.powers(s)
    return ((2 * s + 1) * mu_s - lg_s) / (2 * s), (lg_s - mu_s) / (2 * s)


def even_integrals(profile, s, tol):
    """Raw integrals of D2 |z|^{-d-2s}: isotropic and direction-projected, without constants."""
    profile.check_tail(2 * s, tol)
    d = profile.d
    area = sphere_area(d)
    const = 2.0 * profile.center_value * profile.constant_part(2 * s)
    iso = profile.radial_sum(1.0 - 2 * s, "iso") + area * const
    if "proj" not in profile.moments:
        return iso, None
    return iso, profile.radial_sum(1.0 - 2 * s, "proj") + area / d * const


def _even_parts(profile, s, tol):
    """((-Delta)^s u, F^s u) at the profile's point."""
    iso, proj = even_integrals(profile, s, tol)
    lap = 0.5 * spf.const_c(profile.d, s) * iso
    return lap, None if proj is None else 0.5 * spf.const_kappa(profile.d, s) * proj


def map_points(fn, points, spec, d):
    """Apply fn to each point of an (..., d) array in a fixed order."""
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    out = np.stack(chunked_map(fn, list(pts.reshape(-1, d)), spec.workers))
    return out[0] if single else out.reshape(pts.shape[:-1] + out.shape[1:])


def even_profiles(u, points, spec):
    """Second-difference profiles at each point, reusable for any order s."""
    pts = np.asarray(points, dtype=float).reshape(-1, u.d)
    return chunked_map(lambda x: PolarProfile(u, x, spec, "even"), list(pts), spec.workers)


def frac_lame_from_profiles(profiles, s, m, tol=1e-9):
    _order(s)
    a1, a2 = _coefficients(s, m)
    out = []
    for prof in profiles:
        lap, proj = _even_parts(prof, s, tol)
        out.append(a1 * lap + a2 * proj)
    return np.stack(out)


def _even_operator(u, x, s, spec, combine):
    _order(s)

    def one(pt):
        return combine(*_even_parts(PolarProfile(u, pt, spec, "even"), s, spec.tol))

    return map_points(one, x, spec, u.d)


def frac_lame_pv(u, x, s, m, spec):
    """L^s u(x) from the absolutely convergent second-difference form."""
    a1, a2 = _coefficients(s, m) if 0.0 < s < 1.0 else (0.0, 0.0)
    return _even_operator(u, x, s, spec, lambda lap, proj: a1 * lap + a2 * proj)


def frac_laplacian_pv(u, x, s, spec):
    return _even_operator(u, x, s, spec, lambda lap, proj: lap)


def f_operator_apply(u, x, s, spec):
    """Projected-difference operator F^s u(x)."""
    return _even_operator(u, x, s, spec, lambda lap, proj: proj)


def frac_lame_eps(u, x, eps, s, m, spec):
    """L^s_eps u(x): the two integrals of u(x) - u(y) over |x - y| > eps."""
    _order(s)
    eps = spec.r_inner if eps is None else eps
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    a1, a2 = _coefficients(s, m)
    d = u.d

    def one(pt):
        prof = PolarProfile(u, pt, spec, "eps", start=eps)
        prof.check_tail(2 * s, spec.tol)
        area = sphere_area(d)
        const = prof.center_value * prof.constant_part(2 * s)
        iso = prof.radial_sum(-1.0 - 2 * s, "iso") + area * const
        proj = prof.radial_sum(-1.0 - 2 * s, "proj") + area / d * const
        return a1 * spf.const_c(d, s) * iso + a2 * spf.const_kappa(d, s) * proj

    return map_points(one, x, spec, d)


def richardson_limit(eps_values, values, exponents):
    """Extrapolate values(eps) -> eps = 0 for errors sum_k C_k eps^{p_k} (eps halving)."""
    table = [np.asarray(v, dtype=float) for v in values]
    eps = np.asarray(eps_values, dtype=float)
    ratios = eps[:-1] / eps[1:]
    if not np.allclose(ratios, ratios[0]):
        raise DomainError("Richardson extrapolation expects a geometric eps sequence")
    q = ratios[0]
    for p in exponents:
        if len(table) < 2:
            break
        f = q**p
        table = [(f * b - a) / (f - 1.0) for a, b in zip(table[:-1], table[1:])]
    return table[-1]


def observed_order(eps_values, values):
    """log_q of successive difference ratios; approaches the leading error exponent."""
    v = [np.asarray(x, dtype=float) for x in values]
    q = eps_values[0] / eps_values[1]
    d1 = np.linalg.norm(v[0] - v[1])
    d2 = np.linalg.norm(v[1] - v[2])
    return math.log(d1 / d2) / math.log(q)


def frac_lame_eps_limit(u, x, s, m, spec, eps_values=(0.2, 0.1, 0.05, 0.025)):
    """Richardson limit of the eps-truncated operator with exponents 2-2s, 4-2s, 6-2s."""
    vals = [frac_lame_eps(u, x, e, s, m, spec) for e in eps_values]
    exps = [2 - 2 * s + 2 * k for k in range(len(eps_values) - 1)]
    return richardson_limit(eps_values, vals, exps), observed_order(eps_values, vals)


def _gradient_at(u, x, s, spec):
    prof = PolarProfile(u, x, spec, "odd")
    prof.check_tail(s, spec.tol)
    return spf.const_k(u.d, s) * prof.radial_sum(-s, "grad")


def nonlocal_gradient_direct(u, x, s, spec):
    """grad^s u(x) as a (comps, d) matrix: rows are components, columns directions."""
    _order(s, closed=False)
    return map_points(lambda pt: _gradient_at(u, pt, s, spec), x, spec, u.d)


def nonlocal_divergence_direct(u, x, s, spec):
    _order(s, closed=False)
    return map_points(lambda pt: np.trace(_gradient_at(u, pt, s, spec)), x, spec, u.d)


def state_based_constants(s, m):
    """(C1, C2) of the state-based model."""
    mu_s, lg_s = m.powers(s)
    return mu_s, lg_s - (2 * s + 1) * mu_s


def divergence_field(u, grid, s, spec, upsample=8):
    """div^s u sampled on `grid` by direct quadrature, as an interpolated SampledField."""
    pts = grid.points().reshape(-1, grid.d)
    vals = nonlocal_divergence_direct(u, pts, s, spec).reshape(grid.shape)
    return SampledField.from_grid(Field(grid, vals), upsample=upsample)


def state_based_apply(u, x, s, m, spec, grid=None, divergence=None, mode="reduced", literal_spec=None,
                      divergence_tol=1e-5):
    """State-based peridynamic operator at x.

    Reduced mode evaluates mu^s F^s u - C2 grad^s(div^s u), with div^s u computed
    by direct quadrature on `grid` and interpolated. Literal mode evaluates the
    double integral with the inner divergence recomputed at every outer node.
    The interpolated divergence is not compactly supported; `divergence_tol`
    bounds the part of it lying outside the box.
    """
    _order(s, closed=False)
    c1, c2 = state_based_constants(s, m)
    if mode == "reduced":
        if divergence is None:
            if grid is None:
                raise PreconditionError("reduced mode needs a grid or a precomputed divergence field")
            divergence = divergence_field(u, grid, s, spec)
        f_part = f_operator_apply(u, x, s, spec)
        outer = replace(spec, tol=max(spec.tol, divergence_tol))
        grad_div = nonlocal_gradient_direct(divergence, x, s, outer)[..., 0, :]
        return c1 * f_part - c2 * grad_div
    if mode == "literal":
        inner_spec = literal_spec or spec

        def div_at(points):
            return nonlocal_divergence_direct(u, points, s, inner_spec)

        reach = u.support_radius + 2.0
        inner = SampledField(div_at, reach, u.d, center=u.center, tail_bound=0.0)
        f_part = f_operator_apply(u, x, s, spec)
        grad_div = nonlocal_gradient_direct(inner, x, s, spec)[..., 0, :]
        return c1 * f_part - c2 * grad_div
    raise DomainError(f"unknown mode {mode!r}")


def bilinear_form(u, v, s, m, spec):
    """Energy form E^s(u, v) of two grid fields supported inside the box.

    The double integral equals int K(h) S(h) dh with
    S_ab(h) = int (u_a(x) - u_a(x+h)) (v_b(x) - v_b(x+h)) dx, which the Fourier
    series of the fields gives in closed form; the h-integral is done in polar
    coordinates exactly like the operators. Symmetric in (u, v) bit for bit.
    """
    _order(s, closed=False)
    grid = u.grid
    d = grid.d
    radius = max(_support_radius(u), _support_radius(v))
    reach = min(2.0 * radius, grid.L - 2.0 * radius)
    if reach < 2.0 * radius:
        raise PreconditionError(f"fields of support radius {radius:.3g} need a box of side >= {4 * radius:.3g}")
    uh = fft_forward(u).coeffs.reshape(-1, d)
    vh = fft_forward(v).coeffs.reshape(-1, d)
    cross = np.real(np.conj(uh)[:, :, None] * vh[:, None, :])
    cross = 0.5 * (cross + np.swapaxes(cross, 1, 2)) * grid.cell_volume
    weight = np.abs(cross).max(axis=(1, 2))
    keep = weight > 1e-16 * weight.max()
    cross = cross[keep]
    xi = grid.symbol_frequencies().reshape(-1, d)[keep]
    total = 2.0 * cross.sum(axis=0)

    def s_of_h(h):
        # S(h) = 4 sum_k R_k sin^2(pi xi_k . h)
        phase = np.sin(np.pi * (h @ xi.T)) ** 2
        return 4.0 * np.einsum("nk,kab->nab", phase, cross)

    iso_r, proj_r = _polar_form(s_of_h, reach, d, s, spec)
    area = sphere_area(d)
    tail = reach ** (-2 * s) / (2 * s)
    iso = iso_r + np.trace(total) * area * tail
    proj = proj_r + np.trace(total) * area / d * tail
    a1, a2 = _coefficients(s, m)
    c, kap = spf.const_c(d, s), spf.const_kappa(d, s)
    return float(0.5 * a1 * c * iso + 0.5 * a2 * kap * proj)


def _polar_form(s_of_h, reach, d, s, spec):
    """int over |h| < reach of |h|^{-d-2s} tr S(h) and of |h|^{-d-2s} h^T S(h) h / |h|^2."""
    iso, proj = 0.0, 0.0
    panels = [(0.0, spec.r_core, True)] + [
        (a, b, False) for a, b in zip(_breaks(0.0, reach, spec.r_core)[:-1], _breaks(0.0, reach, spec.r_core)[1:])
    ]
    beta = 1.0 - 2.0 * s
    for a, b, core in panels:
        if core:
            r, wr = even_core_rule(spec.n_radial, beta, spec.r_core)
        else:
            g, wg = gauss_legendre(spec.n_radial)
            r = a + (b - a) * g
            wr = (b - a) * wg * r**beta
        dirs, w = _directions(d, spec.n_angular, b)
        h = (r[:, None, None] * dirs[None]).reshape(-1, d)
        smat = s_of_h(h).reshape(r.size, dirs.shape[0], d, d) / (r**2)[:, None, None, None]
        tr = np.einsum("rwaa,w->r", smat, w)
        pr = np.einsum("rwab,wa,wb,w->r", smat, dirs, dirs, w)
        iso += float(wr @ tr)
        proj += float(wr @ pr)
    return iso, proj


def _support_radius(u, rel=1e-10):
    mag = np.linalg.norm(u.values.reshape(u.grid.shape + (-1,)), axis=-1)
    big = mag > rel * mag.max()
    pts = np.linalg.norm(u.grid.points(), axis=-1)
    return float(pts[big].max() + u.grid.spacing) if big.any() else 0.0


def _order(s, closed=True):
    if not (0.0 < s < 1.0 or (closed and s == 1.0)):
        raise DomainError(f"order s={s} outside (0, 1)")
    if s == 1.0:
        raise DomainError("singular-integral forms need s < 1")
