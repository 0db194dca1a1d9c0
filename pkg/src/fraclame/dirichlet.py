"""Galerkin solver for L^s u = f in a bounded domain with u = 0 outside.

The trial space is spanned by piecewise-multilinear hats at the grid nodes inside
the domain. Hats are translates of one another, so the stiffness entry between
nodes i and j depends only on the offset k = (x_j - x_i)/h: it is the
second-difference form of the hat autocorrelation (a tensor cubic B-spline)
evaluated at k. One stencil per order, computed once at h = 1 and rescaled,
drives an FFT matrix-vector product whose zero padding keeps the pairing on R^d
rather than on the periodic box.
"""

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy import ndimage
from scipy.sparse.linalg import LinearOperator, cg
from scipy.spatial import ConvexHull, distance

from . import quadrature as q
from . import special as spf
from ._rules import chunked_map, gauss_legendre
from .errors import AccuracyError, DomainError, PreconditionError, SolverError
from .fields import Field, PeriodicGrid, _check_order

NEAR_RANGE = 3


def cubic_bspline(t):
    """Centered cubic B-spline; the autocorrelation of the unit hat."""
    a = np.abs(t)
    inner = 2.0 / 3.0 - a**2 + 0.5 * a**3
    outer = (2.0 - a) ** 3 / 6.0
    return np.where(a < 1.0, inner, np.where(a < 2.0, outer, 0.0))


def hat_autocorrelation(y):
    """int phi(x) phi(x + y) dx for the unit-spacing tensor hat; y has shape (..., d)."""
    return np.prod(cubic_bspline(y), axis=-1)


@dataclass(frozen=True)
class DomainMask:
    grid: PeriodicGrid
    inside: np.ndarray
    geometry: dict = field(default_factory=lambda: {"type": "arbitrary"})

    def __post_init__(self):
        inside = np.asarray(self.inside, dtype=bool)
        if inside.shape != self.grid.shape:
            raise DomainError("mask shape does not match the grid")
        if not inside.any() or inside.all():
            raise DomainError("mask and its complement must both be nonempty")
        object.__setattr__(self, "inside", inside)
        pts = self.grid.points()[inside]
        margin = 0.5 * self.grid.L - np.abs(pts).max()
        if margin < 0.5 * self.diameter() - 1e-12 * self.grid.L:
            raise DomainError("domain must sit at least half its diameter inside the box")

    @classmethod
    def ball(cls, grid, radius, center=None):
        center = np.zeros(grid.d) if center is None else np.asarray(center, float)
        inside = np.linalg.norm(grid.points() - center, axis=-1) < radius
        return cls(grid, inside, {"type": "ball", "radius": float(radius), "center": center.tolist()})

    @classmethod
    def box(cls, grid, half_widths, center=None):
        center = np.zeros(grid.d) if center is None else np.asarray(center, float)
        half = np.broadcast_to(np.asarray(half_widths, float), (grid.d,))
        inside = np.all(np.abs(grid.points() - center) < half, axis=-1)
        return cls(grid, inside, {"type": "box", "half_widths": half.tolist(), "center": center.tolist()})

    def diameter(self):
        pts = self.grid.points()[self.inside]
        if len(pts) > self.grid.d + 1:
            try:
                pts = pts[ConvexHull(pts).vertices]
            except Exception:  # degenerate (collinear) point sets
                pass
        return float(distance.pdist(pts).max()) if len(pts) > 1 else 0.0

    def galerkin_nodes(self):
        """Inside nodes carry hats; every outside node value is pinned to zero."""
        return self.inside

    def depth(self):
        """Euclidean distance from each node to the nearest outside node."""
        return ndimage.distance_transform_edt(self.inside) * self.grid.spacing


@dataclass(frozen=True)
class GalerkinSpec:
    n_gauss: int = 14
    n_far: int = 8
    tol: float = 1e-10
    cg_rtol: float = 1e-12
    maxiter: int = 20000
    workers: int = 1

    def __post_init__(self):
        if self.n_gauss < 4 or self.n_far < 2:
            raise DomainError("too few quadrature nodes")
        if not (self.tol > 0.0 and self.cg_rtol > 0.0):
            raise DomainError("tolerances must be positive")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")


def _kernel_parts(z, s, d):
    """|z|^{-d-2s} and z z^T |z|^{-d-2s-2} at points z (N, d)."""
    r2 = np.sum(z * z, axis=-1)
    iso = r2 ** (-(d + 2 * s) / 2)
    proj = z[:, :, None] * z[:, None, :] * (iso / r2)[:, None, None]
    return iso, proj


def _cell_rule(d, n):
    x, w = gauss_legendre(n)
    nodes = np.stack(np.meshgrid(*([x] * d), indexing="ij"), -1).reshape(-1, d)
    weights = np.prod(np.stack(np.meshgrid(*([w] * d), indexing="ij"), -1).reshape(-1, d), axis=-1)
    return nodes, weights


def _near_entry(k, s, d, n):
    """Second-difference integrals of the autocorrelation at offset k, any distance."""
    k = np.asarray(k, float)
    a_k = hat_autocorrelation(k)
    second = lambda z: 2 * a_k - hat_autocorrelation(k + z) - hat_autocorrelation(k - z)
    reach = int(np.abs(k).max()) + 2
    iso = 0.0
    proj = np.zeros((d, d))
    # every other cell keeps distance >= 1 from the singularity; farther cells need fewer nodes
    lowers = np.array(list(product(range(-reach, reach), repeat=d)))
    gap = np.linalg.norm(np.maximum(np.maximum(lowers, -(lowers + 1)), 0), axis=1)
    singular = np.all((lowers == 0) | (lowers == -1), axis=1)
    for lo_gap, hi_gap, count in ((0.0, 2.0, n), (2.0, 4.0, max(4, 2 * n // 3)), (4.0, np.inf, max(4, n // 2))):
        group = lowers[~singular & (gap >= lo_gap) & (gap < hi_gap)]
        if not len(group):
            continue
        nodes, weights = _cell_rule(d, count)
        z = (group[:, None, :] + nodes[None]).reshape(-1, d)
        g = 0.5 * np.tile(weights, len(group)) * second(z)
        ki, kp = _kernel_parts(z, s, d)
        iso += np.sum(g * ki)
        proj += np.einsum("n,nij->ij", g, kp)
    # cells touching the origin: pyramid split z = rho * e with e_j = 1 on the pyramid axis.
    # There G(rho e) / rho^2 is a polynomial of degree 3d - 2 in rho, recovered from samples
    # at moderate rho (no cancellation) and integrated against rho^{1-2s} exactly.
    deg = 3 * d - 2
    rho = 0.625 + 0.375 * np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))
    vander = np.vander(rho, deg + 1, increasing=True)
    moments = 1.0 / (np.arange(deg + 1) + 2.0 - 2.0 * s)
    radial = np.linalg.solve(vander.T, moments)
    v, w_v = _cell_rule(d - 1, n)
    for sign in product((-1.0, 1.0), repeat=d):
        sign = np.array(sign)
        for axis in range(d):
            e = np.insert(v, axis, 1.0, axis=1) * sign
            ki, kp = _kernel_parts(e, s, d)
            z = rho[:, None, None] * e[None]
            vals = second(z.reshape(-1, d)).reshape(len(rho), len(e)) / rho[:, None] ** 2
            g = 0.5 * w_v * (radial @ vals)
            iso += np.sum(g * ki)
            proj += np.einsum("n,nij->ij", g, kp)
    ext = _cube_exterior(s, d, n)
    iso += a_k * reach ** (-2 * s) * ext
    proj += a_k * reach ** (-2 * s) * ext / d * np.eye(d)
    return iso, proj


def _cube_exterior(s, d, n):
    """int over |z|_inf > 1 of |z|^{-d-2s} dz."""
    # quarter-width panels: the integrand has poles at distance 1 from the face
    v, w = _cell_rule(d - 1, n)
    pieces = [(v + np.array(c)) / 4.0 for c in product(range(-4, 4), repeat=d - 1)]
    v = np.concatenate(pieces)
    w = np.tile(w, len(pieces)) / 4.0 ** (d - 1)
    return 2 * d / (2 * s) * np.sum(w * (1.0 + np.sum(v * v, axis=-1)) ** (-(d + 2 * s) / 2))


def _far_entries(offsets, s, d, n):
    """-int K(k - y) A(y) dy, valid once the support [-2, 2]^d of A stays clear of k."""
    nodes, weights = _cell_rule(d, n)
    ys, ws = [], []
    for lower in product(range(-2, 2), repeat=d):
        y = np.array(lower) + nodes
        ys.append(y)
        ws.append(weights * hat_autocorrelation(y))
    y = np.concatenate(ys)
    w = np.concatenate(ws)
    keep = w != 0.0
    y, w = y[keep], w[keep]
    iso = np.empty(len(offsets))
    proj = np.empty((len(offsets), d, d))
    for start in range(0, len(offsets), 256):
        block = offsets[start : start + 256]
        z = (block[:, None, :] - y[None]).reshape(-1, d)
        ki, kp = _kernel_parts(z, s, d)
        iso[start : start + 256] = -(ki.reshape(len(block), -1) @ w)
        proj[start : start + 256] = -np.einsum("bn,bnij->bij", np.broadcast_to(w, (len(block), len(w))), kp.reshape(len(block), -1, d, d))
    return iso, proj


@dataclass(frozen=True)
class Stencil:
    """Unit-spacing second-difference integrals on the offsets [-(e-1), e-1]^d."""

    s: float
    d: int
    extent: int
    iso: np.ndarray
    proj: np.ndarray

    def matrix(self, s, m, h):
        """Stiffness stencil h^{d-2s} (a1 c iso I + a2 kappa proj), shape offsets + (d, d)."""
        mu_s, lg_s = m.powers(s)
        a1 = ((2 * s + 1) * mu_s - lg_s) / (2 * s)
        a2 = (lg_s - mu_s) / (2 * s)
        c, kap = spf.const_c(self.d, s), spf.const_kappa(self.d, s)
        eye = np.eye(self.d)
        return h ** (self.d - 2 * s) * (a1 * c * self.iso[..., None, None] * eye + a2 * kap * self.proj)


def compute_stencil(s, d, extent, spec=GalerkinSpec()):
    """Second-difference integrals of the hat autocorrelation at all offsets up to extent - 1."""
    _check_order(s, closed_hi=False)
    if extent < 1:
        raise DomainError("extent must be >= 1")
    reach = extent - 1
    orthant = np.array(list(product(range(reach + 1), repeat=d)), dtype=float)
    near = np.abs(orthant).max(axis=1) <= NEAR_RANGE
    iso = np.empty(len(orthant))
    proj = np.empty((len(orthant), d, d))

    # the central entry is the hardest; if it has settled, so have its neighbours
    fine = _near_entry(np.zeros(d), s, d, spec.n_gauss)[0]
    coarse = _near_entry(np.zeros(d), s, d, spec.n_gauss - 2)[0]
    if abs(fine - coarse) > spec.tol * abs(fine):
        raise AccuracyError("near-field stencil not converged at the requested node count")
    near_one = lambda k: _near_entry(k, s, d, spec.n_gauss)

    for idx, (a, b) in zip(np.flatnonzero(near), chunked_map(near_one, orthant[near], spec.workers)):
        iso[idx], proj[idx] = a, b
    far = ~near
    if far.any():
        chunks = np.array_split(orthant[far], max(1, min(spec.workers * 4, far.sum() // 256 + 1)))
        results = chunked_map(lambda blk: _far_entries(blk, s, d, spec.n_far), chunks, spec.workers)
        iso[far] = np.concatenate([r[0] for r in results])
        proj[far] = np.concatenate([r[1] for r in results])
    # a zero component makes the mixed entries odd under reflection, hence exactly zero
    on_plane = orthant == 0.0
    mixed = (on_plane[:, :, None] | on_plane[:, None, :]) & ~np.eye(d, dtype=bool)
    proj[mixed] = 0.0
    shape = (2 * reach + 1,) * d
    full_iso = np.empty(shape)
    full_proj = np.empty(shape + (d, d))
    for sign in product((-1, 1), repeat=d):
        sign_arr = np.array(sign)
        idx = tuple((sign_arr[None] * orthant.astype(int) + reach).T)
        full_iso[idx] = iso
        flip = np.outer(sign_arr, sign_arr)
        full_proj[idx] = proj * flip
    full_proj = 0.5 * (full_proj + np.swapaxes(full_proj, -1, -2))
    return Stencil(s, d, extent, full_iso, full_proj)


def _mass_apply(values, d, h):
    """Consistent mass of the hat space, tensor [1, 4, 1] h / 6 along each axis."""
    out = values
    for ax in range(d):
        out = (4.0 * out + np.roll(out, 1, axis=ax) + np.roll(out, -1, axis=ax)) * (h / 6.0)
    return out


@dataclass
class GalerkinSystem:
    mask: DomainMask
    s: float
    moduli: object
    nodes: np.ndarray
    stencil: np.ndarray
    box: tuple
    _fft: np.ndarray = None

    @property
    def size(self):
        return int(self.nodes.sum()) * self.mask.grid.d

    def _local(self, coeffs):
        d = self.mask.grid.d
        local = np.zeros(self.nodes[self.box].shape + (d,))
        local[self.nodes[self.box]] = coeffs.reshape(-1, d)
        return local

    def matvec(self, coeffs):
        """Stiffness times coefficient vector (ordered node-major, component-minor)."""
        d = self.mask.grid.d
        local = self._local(np.asarray(coeffs, float))
        shape = self._fft_shape()
        if self._fft is None:
            self._fft = np.fft.rfftn(self.stencil, s=shape, axes=range(d))
        spec = np.fft.rfftn(local, s=shape, axes=range(d))
        prod_ = np.einsum("...ab,...b->...a", self._fft, spec)
        full = np.fft.irfftn(prod_, s=shape, axes=range(d))
        reach = (self.stencil.shape[0] - 1) // 2
        window = tuple(slice(reach, reach + n) for n in local.shape[:d])
        return full[window][self.nodes[self.box]].reshape(-1)

    def _fft_shape(self):
        d = self.mask.grid.d
        return tuple(self.stencil.shape[i] + self.nodes[self.box].shape[i] - 1 for i in range(d))

    def dense(self):
        """Explicit stiffness; exactly symmetric since stencil(-k) = stencil(k)^T."""
        d = self.mask.grid.d
        idx = np.argwhere(self.nodes[self.box])
        reach = (self.stencil.shape[0] - 1) // 2
        diff = idx[None, :, :] - idx[:, None, :] + reach
        blocks = self.stencil[tuple(np.moveaxis(diff, -1, 0))]
        n = len(idx)
        return blocks.transpose(0, 2, 1, 3).reshape(n * d, n * d)

    def mass_matvec(self, coeffs):
        local = self._local(np.asarray(coeffs, float))
        pad = np.pad(local, [(1, 1)] * self.mask.grid.d + [(0, 0)])
        out = _mass_apply(pad, self.mask.grid.d, self.mask.grid.spacing)
        inner = tuple(slice(1, -1) for _ in range(self.mask.grid.d))
        return out[inner][self.nodes[self.box]].reshape(-1)

    def load(self, f):
        """<f, phi_i> for the multilinear interpolant of f restricted to the domain."""
        grid = self.mask.grid
        vals = np.where(self.mask.inside[..., None], f.values, 0.0)
        if not np.all(np.isfinite(vals)):
            raise PreconditionError("f must be finite on the domain")
        return _mass_apply(vals, grid.d, grid.spacing)[self.nodes].reshape(-1)

    def to_field(self, coeffs):
        grid = self.mask.grid
        vals = np.zeros(grid.shape + (grid.d,))
        vals[self.nodes] = np.asarray(coeffs).reshape(-1, grid.d)
        return Field(grid, vals)

    def coefficients(self, u):
        return u.values[self.nodes].reshape(-1)

    def operator(self):
        return LinearOperator((self.size, self.size), matvec=self.matvec, dtype=float)

    def spectrum(self):
        """Generalized eigenvalues of (stiffness, mass), ascending; dense, so small systems only."""
        from scipy.linalg import eigh

        if self.size > 4000:
            raise PreconditionError("dense spectrum only for systems with at most 4000 unknowns")
        eye = np.eye(self.size)
        mass = np.stack([self.mass_matvec(col) for col in eye], axis=1)
        return eigh(self.dense(), 0.5 * (mass + mass.T), eigvals_only=True)

    def coercivity(self):
        """theta_h = min u^T K u / ||u_h||_2^2 over the trial space."""
        return float(self.spectrum()[0])

    def condition_number(self):
        ev = np.linalg.eigvalsh(self.dense())
        return float(ev[-1] / ev[0])


def assemble(mask, s, m, spec=GalerkinSpec()):
    _check_order(s, closed_hi=False)
    nodes = mask.galerkin_nodes()
    if not nodes.any():
        raise PreconditionError("domain too small for any interior hat function")
    where = np.argwhere(nodes)
    lo, hi = where.min(axis=0), where.max(axis=0) + 1
    box = tuple(slice(a, b) for a, b in zip(lo, hi))
    extent = int((hi - lo).max())
    stencil = compute_stencil(s, mask.grid.d, extent, spec)
    return GalerkinSystem(mask, s, m, nodes, stencil.matrix(s, m, mask.grid.spacing), box)


@dataclass(frozen=True)
class DirichletSolution:
    field: Field
    system: GalerkinSystem
    coefficients: np.ndarray
    load: np.ndarray
    iterations: int
    residual: float

    @property
    def energy(self):
        """E^s(u_h, u_h)."""
        return float(self.coefficients @ self.system.matvec(self.coefficients))

    @property
    def work(self):
        """<f, u_h>."""
        return float(self.coefficients @ self.load)

    def l2_norm(self):
        return math.sqrt(self.coefficients @ self.system.mass_matvec(self.coefficients))


def solve_system(system, f, spec=GalerkinSpec(), residual_tol=1e-10):
    b = system.load(f)
    if not np.any(b):
        zero = np.zeros_like(b)
        return DirichletSolution(system.to_field(zero), system, zero, b, 0, 0.0)
    count = [0]

    def tick(_):
        count[0] += 1

    x, info = cg(system.operator(), b, rtol=spec.cg_rtol, maxiter=spec.maxiter, callback=tick)
    residual = float(np.linalg.norm(system.matvec(x) - b) / np.linalg.norm(b))
    if residual > residual_tol:
        raise SolverError(f"conjugate gradients stalled at relative residual {residual:.2e}")
    return DirichletSolution(system.to_field(x), system, x, b, count[0], residual)


def solve_dirichlet(mask, f, s, m, spec=GalerkinSpec()):
    """Galerkin solution extended by zero outside the domain."""
    return solve_system(assemble(mask, s, m, spec), f, spec).field


def residual_check(u_h, mask, f, s, m, spec=None, depth=0.5, max_points=25):
    """Max deviation |L^s u_h - f| / max|f| at nodes deeper than depth * (max depth).

    L^s is applied pointwise by polar quadrature to the cubic-spline interpolant
    of the nodal values; the hat interpolant itself has kinks at every node.
    """
    spec = spec or q.QuadratureSpec(n_radial=8, n_angular=8)
    depths = mask.depth()
    pick = np.argwhere(depths >= depth * depths.max())
    stride = max(1, len(pick) // max_points)
    pick = pick[::stride][:max_points]
    pts = mask.grid.points()[tuple(pick.T)]
    radius = float(np.linalg.norm(mask.grid.points()[mask.inside], axis=-1).max()) + 2 * mask.grid.spacing
    sampled = q.SampledField.from_grid(u_h, support_radius=radius)
    got = q.frac_lame_pv(sampled, pts, s, m, spec)
    ref = f.values[tuple(pick.T)]
    scale = np.abs(ref).max()
    return float(np.abs(got - ref).max() / (scale if scale > 0 else 1.0))


def getoor_constant(d, s):
    """(-Delta)^s [C (R^2 - |x|^2)_+^s] = 1 in the ball of radius R."""
    return math.gamma(d / 2) / (2 ** (2 * s) * math.gamma(1 + s) * math.gamma(d / 2 + s))


def ball_solution(points, radius, s, mu, force):
    """Exact solution for lambda = -mu, constant force, ball centred at the origin."""
    d = points.shape[-1]
    r2 = np.sum(points**2, axis=-1)
    prof = getoor_constant(d, s) * np.clip(radius**2 - r2, 0.0, None) ** s / mu**s
    return prof[..., None] * np.asarray(force, float)
