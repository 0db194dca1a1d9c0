"""Verification suites: every criterion is a function returning measured-vs-tolerance records.

A record is {"criterion", "test", "status", "measured", "tolerance"}; a check
passes when measured <= tolerance. Records carry no timings, so a report is a
pure function of (suite, seed) and serializes to the same bytes for any number
of workers.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.linalg import expm
from scipy.spatial.transform import Rotation

from . import dirichlet as dr
from . import extension as ex
from . import fields as fl
from . import kernels as kn
from . import quadrature as q
from . import special as spf
from . import symbol as sy
from .errors import DomainError

ORDERS = (0.25, 0.5, 0.75)
MODULI = sy.ElasticModuli(1.0, 0.5)


@dataclass
class Context:
    seed: int = 0
    workers: int = 1
    cache: dict = field(default_factory=dict)

    def rng(self, salt):
        return np.random.default_rng([self.seed, salt])

    @property
    def quad_spec(self):
        return q.QuadratureSpec(n_radial=8, n_angular=8, workers=self.workers)

    @property
    def galerkin_spec(self):
        return dr.GalerkinSpec(workers=self.workers)

    def memo(self, key, fn):
        if key not in self.cache:
            self.cache[key] = fn()
        return self.cache[key]


def record(criterion, test, measured, tolerance):
    measured = float(measured)
    ok = math.isfinite(measured) and measured <= tolerance
    return {
        "criterion": criterion,
        "test": test,
        "status": "pass" if ok else "fail",
        "measured": measured,
        "tolerance": float(tolerance),
    }


def _rel(a, b):
    return float(np.abs(np.asarray(a) - np.asarray(b)).max() / np.abs(np.asarray(b)).max())


def _rel_l2(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(np.asarray(b)))


def _random_moduli(rng):
    mu = rng.uniform(0.2, 5.0)
    return sy.ElasticModuli(mu, rng.uniform(0.05, 5.0) - 2 * mu)


def _random_frequencies(rng, count, d):
    xi = rng.normal(size=(count, d))
    return xi[np.linalg.norm(xi, axis=-1) > 1e-2]


# 1. symbol algebra


def symbol_algebra(ctx):
    rng = ctx.rng(1)
    worst = dict.fromkeys(("semigroup", "inverse", "heat_exponential", "rotation"), 0.0)
    for trial in range(12):
        d = 2 + trial % 2
        m = _random_moduli(rng)
        xi = _random_frequencies(rng, 16, d)
        s, t = rng.uniform(-0.45, 0.5, size=2)
        prod = sy.lame_symbol_power(xi, s, m) @ sy.lame_symbol_power(xi, t, m)
        worst["semigroup"] = max(worst["semigroup"], _rel(prod, sy.lame_symbol_power(xi, s + t, m)))
        r = rng.uniform(0.05, 0.95)
        eye = np.broadcast_to(np.eye(d), (len(xi), d, d))
        ident = sy.lame_symbol_inverse_power(xi, r, m) @ sy.lame_symbol_power(xi, r, m)
        worst["inverse"] = max(worst["inverse"], float(np.abs(ident - eye).max()))
        tau = rng.uniform(0.01, 0.5)
        heat = sy.heat_symbol(xi[:4], tau, m)
        series = np.stack([expm(-tau * sy.lame_symbol(v, m)) for v in xi[:4]])
        worst["heat_exponential"] = max(worst["heat_exponential"], float(np.abs(heat - series).max()))
        rot = Rotation.random(random_state=int(rng.integers(2**31))).as_matrix()[:d, :d] if d == 3 else _rot2(rng)
        for fn in (lambda v: sy.lame_symbol_power(v, r, m), lambda v: sy.heat_symbol(v, tau, m),
                   lambda v: sy.poisson_symbol(v, tau, r, m)):
            lhs, rhs = fn(xi @ rot.T), rot @ fn(xi) @ rot.T
            worst["rotation"] = max(worst["rotation"], _rel(lhs, rhs))
    return [record(1, f"symbol_{name}", val, 1e-12) for name, val in worst.items()]


def _rot2(rng):
    a = rng.uniform(0, 2 * np.pi)
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


# 2. normalizing constants against their defining integrals


def _quad(fn, lo, hi, epsabs=1e-14, **kw):
    return integrate.quad(fn, lo, hi, limit=400, epsabs=epsabs, epsrel=1e-12, **kw)[0]


def _transverse_factor(d, power):
    """int over R^{d-1} of (1 + |t|^2)^{-power/2} dt."""
    if d == 2:
        return 2.0 * _quad(lambda r: (1 + r * r) ** (-power / 2), 0, np.inf)
    return 2 * np.pi * _quad(lambda r: r * (1 + r * r) ** (-power / 2), 0, np.inf)


def laplacian_constant_integral(d, s):
    """int_{R^d} (1 - cos h_1) |h|^{-d-2s} dh, which the constant c_{d,s} must invert."""
    # (1 - cos x) / x^2 is smooth; the x^{1-2s} singularity goes into the weight
    near = _quad(lambda x: 2 * (math.sin(x / 2) / x) ** 2 if x > 0 else 0.5, 0, 1, weight="alg", wvar=(1 - 2 * s, 0))
    far = 1 / (2 * s) - _quad(lambda x: x ** (-1 - 2 * s), 1, np.inf, weight="cos", wvar=1.0, epsabs=1e-11)
    return 2 * (near + far) * _transverse_factor(d, d + 2 * s)


def gradient_constant_integral(d, s):
    """int_{R^d} h_1 sin(h_1) |h|^{-d-s-1} dh, which the gradient constant must invert."""
    near = _quad(lambda x: np.sinc(x / np.pi), 0, 1, weight="alg", wvar=(-s, 0))
    far = _quad(lambda x: x ** (-1 - s), 1, np.inf, weight="sin", wvar=1.0, epsabs=1e-11)
    return 2 * (near + far) * _transverse_factor(d, d + s + 1)


def constants(ctx):
    out = []
    for d in (2, 3):
        for s in ORDERS:
            out.append(record(2, f"c_d{d}_s{s}", abs(spf.const_c(d, s) * laplacian_constant_integral(d, s) - 1), 1e-5))
            out.append(record(2, f"k_d{d}_s{s}", abs(spf.const_k(d, s) * gradient_constant_integral(d, s) - 1), 1e-5))
    out.append(record(2, "c_2_half_is_inverse_two_pi", abs(spf.const_c(2, 0.5) * 2 * np.pi - 1), 1e-12))
    return out


# 3-6. real-space routes


GRID = fl.PeriodicGrid(2, 64, 12.0)


def _packet_pair():
    return fl.gaussian_wave_packet(GRID), q.wave_packet_field(2, tol=1e-13)


def _sample_points(ctx, count=20):
    return ctx.rng(5).uniform(-2.0, 2.0, size=(count, 2))


def cross_route(ctx):
    packet, sampled = _packet_pair()
    pts = GRID.points().reshape(-1, 2)
    profiles = q.even_profiles(sampled, pts, ctx.quad_spec)
    out = []
    for s in ORDERS:
        got = q.frac_lame_from_profiles(profiles, s, MODULI)
        ref = fl.frac_lame_apply(packet, s, MODULI).values.reshape(-1, 2)
        out.append(record(3, f"spectral_vs_pv_s{s}", _rel_l2(got, ref), 1e-3))
    return out


PERI_ORDER = 0.5


def _divergence(ctx):
    _, sampled = _packet_pair()
    return ctx.memo("divergence", lambda: q.divergence_field(sampled, GRID, PERI_ORDER, ctx.quad_spec))


def decomposition(ctx):
    out = []
    u = fl.random_smooth_field(GRID, ctx.seed)
    for s in ORDERS:
        lap = fl.frac_laplacian(u, s).values
        div = fl.frac_divergence(u, s).values
        grad_div = fl.frac_gradient(fl.Field(GRID, np.stack([div, div], -1)), s).values[..., 0, :]
        mu_s, lg_s = MODULI.powers(s)
        out.append(record(4, f"spectral_decomposition_s{s}",
                          _rel(mu_s * lap - (lg_s - mu_s) * grad_div, fl.frac_lame_apply(u, s, MODULI).values), 1e-12))
    _, sampled = _packet_pair()
    pts, s, spec = _sample_points(ctx), PERI_ORDER, ctx.quad_spec
    lap = q.frac_laplacian_pv(sampled, pts, s, spec)
    grad_div = q.nonlocal_gradient_direct(_divergence(ctx), pts, s, q.QuadratureSpec(
        n_radial=8, n_angular=8, tol=1e-5, workers=ctx.workers))[..., 0, :]
    mu_s, lg_s = MODULI.powers(s)
    ref = q.frac_lame_pv(sampled, pts, s, MODULI, spec)
    out.append(record(4, "quadrature_decomposition", _rel(mu_s * lap - (lg_s - mu_s) * grad_div, ref), 2e-3))
    return out


def peridynamic(ctx):
    _, sampled = _packet_pair()
    pts, spec = _sample_points(ctx), ctx.quad_spec
    ref = q.frac_lame_pv(sampled, pts, PERI_ORDER, MODULI, spec)
    got = q.state_based_apply(sampled, pts, PERI_ORDER, MODULI, spec, divergence=_divergence(ctx))
    out = [record(5, "state_based_reduced", _rel(got, ref), 2e-3)]
    coarse = q.QuadratureSpec(n_radial=6, n_angular=6, workers=ctx.workers)
    literal = q.state_based_apply(sampled, pts[:1], 0.4, MODULI, coarse, mode="literal")
    out.append(record(5, "state_based_literal", _rel(literal, q.frac_lame_pv(sampled, pts[:1], 0.4, MODULI, spec)), 5e-2))
    return out


def dtn_halfspace(ctx):
    rng = ctx.rng(6)
    worst = 0.0
    for trial in range(20):
        mt = _random_moduli(rng)
        xi = _random_frequencies(rng, 8, 2 + trial % 2)
        a = sy.dtn_halfspace_symbol(xi, mt)
        worst = max(worst, _rel(a, sy.lame_symbol_power(xi, 0.5, sy.dtn_equivalent_moduli(mt))))
    # real-space DtN kernel at grid nodes against the spectral half power
    mt = sy.ElasticModuli(1.2, 0.4)
    packet, sampled = _packet_pair()
    idx = ctx.rng(6).integers(20, 44, size=(6, 2))
    got = kn.dtn_halfspace_apply(sampled, GRID.points()[idx[:, 0], idx[:, 1]], mt, ctx.quad_spec)
    ref = fl.frac_lame_apply(packet, 0.5, sy.dtn_equivalent_moduli(mt)).values[idx[:, 0], idx[:, 1]]
    return [record(6, "dtn_symbol_is_half_power", worst, 1e-12), record(6, "dtn_real_space_vs_spectral", _rel(got, ref), 2e-3)]


# 7-9. kernels


def fundamental_solution(ctx):
    out = []
    worst = 0.0
    for s in ORDERS:
        for xi in ([0.5, 0.0], [0.3, 0.4], [0.0, 1.0]):
            got = kn.fundamental_solution_fourier(np.array(xi), s, MODULI, 2)
            worst = max(worst, _rel(got, sy.lame_symbol_inverse_power(np.array(xi), s, MODULI)))
    out.append(record(7, "windowed_transform_vs_inverse_symbol", worst, 1e-2))
    u = fl.random_smooth_field(GRID, ctx.seed + 1)
    worst = max(_rel(fl.frac_lame_apply(fl.riesz_potential_apply(u, s, MODULI), s, MODULI).values, u.values)
                for s in ORDERS)
    out.append(record(7, "operator_inverts_potential", worst, 1e-11))
    scalar = sy.ElasticModuli(1.7, -1.7)
    worst = 0.0
    for d in (2, 3):
        x = ctx.rng(7).normal(size=(10, d))
        for s in (0.2, 0.5, 0.9):
            riesz = spf.const_g(d, s) / 1.7**s * np.linalg.norm(x, axis=-1) ** (2 * s - d)
            worst = max(worst, _rel(kn.fundamental_solution(x, s, scalar), riesz[:, None, None] * np.eye(d)))
    out.append(record(7, "scalar_reduction_is_riesz_kernel", worst, 1e-13))
    return out


def poisson(ctx):
    mass = max(float(np.abs(kn.poisson_mass(t, s, MODULI) - np.eye(2)).max()) for t in (0.5, 1.0, 2.0) for s in ORDERS)
    x = ctx.rng(8).normal(size=(20, 2)) * 3
    dil = max(kn.poisson_dilation_residual(x, t, s, MODULI) for t in (0.3, 1.7) for s in ORDERS)
    xi = ctx.rng(9).normal(size=(10, 3))
    prod = sy.poisson_symbol(xi, 0.3, 0.5, MODULI) @ sy.poisson_symbol(xi, 0.45, 0.5, MODULI)
    semi = float(np.abs(prod - sy.poisson_symbol(xi, 0.75, 0.5, MODULI)).max())
    closed = 0.0
    for pt, t, s in [([0.7, -0.4], 0.8, 0.4), ([2.0, 1.0, 0.5], 1.3, 0.7), ([0.1, 0.3], 0.5, 0.25)]:
        closed = max(closed, _rel(kn.poisson_kernel_gamma_integral(np.array(pt), t, s, MODULI),
                                  kn.poisson_kernel(np.array(pt), t, s, MODULI)))
    return [
        record(8, "poisson_mass_is_identity", mass, 1e-4),
        record(8, "poisson_dilation", dil, 1e-12),
        record(8, "poisson_half_order_semigroup", semi, 1e-12),
        record(8, "poisson_closed_form_vs_gamma_integral", closed, 1e-8),
    ]


def psi_upsilon(ctx):
    out = []
    for d in (2, 3):
        for s in ORDERS:
            kap = spf.const_kappa(d, s)
            out.append(record(9, f"psi1_vanishes_d{d}_s{s}", abs(kn.psi_profiles(1e-5, s, d)[0]) / kap, 1e-2))
            out.append(record(9, f"psi2_limit_d{d}_s{s}", abs(kn.psi_profiles(1e-3, s, d)[1] + kap) / kap, 1e-2))
            out.append(record(9, f"upsilon_integral_d{d}_s{s}", kn.upsilon_mass_ratio(s, d), 1e-3))
    return out


# 10-11. extension


def extension(ctx):
    packet, _ = _packet_pair()
    out = []
    levels = ex.ExtensionSlab.geometric(GRID, 0.1, 2.0, 40)
    for s in ORDERS:
        got = ex.dtn_neumann(packet, s, MODULI)
        ref = fl.frac_lame_apply(packet, s, MODULI) * ex.neumann_constant(s)
        out.append(record(10, f"neumann_limit_s{s}", _rel(got.values, ref.values), 1e-3))
        out.append(record(10, f"pde_residual_s{s}", ex.pde_residual(ex.extend(packet, s, MODULI, levels)), 1e-4))
        out.append(record(10, f"mode_exponent_s{s}", abs(ex.mode_expansion_exponent(s) - 2 * s), 0.05))
    return out


def korn(ctx):
    rng = ctx.rng(11)
    grid = fl.PeriodicGrid(2, 32, 8.0)
    violations = 0
    for k in range(100):
        m, s = _random_moduli(rng), rng.uniform(0.05, 0.95)
        u = fl.random_smooth_field(grid, int(rng.integers(2**31)))
        lo, hi = sorted((m.mu, m.longitudinal))
        ratio = 2.0 * ex.korn_ratio(u, s, m)
        violations += not (lo**s * (1 - 1e-12) <= ratio <= (1 + 2 * s) * hi**s * (1 + 1e-12))
    return [record(11, "korn_sandwich_violations", violations, 0)]


# 12. Dirichlet


def dirichlet(ctx):
    grid = fl.PeriodicGrid(2, 64, 4.0)
    mask = dr.DomainMask.ball(grid, 1.0)
    scalar = sy.ElasticModuli(1.3, -1.3)
    force = np.array([1.0, 0.5])
    f = fl.Field(grid, np.broadcast_to(force, grid.shape + (2,)).copy())
    out = []
    for s in ORDERS:
        sol = dr.solve_system(dr.assemble(mask, s, scalar, ctx.galerkin_spec), f, ctx.galerkin_spec)
        exact = dr.ball_solution(grid.points(), 1.0, s, scalar.mu, force)
        out.append(record(12, f"ball_l2_error_s{s}", _rel_l2(sol.field.values, exact), 5e-2))
        if s == 0.5:
            out.append(record(12, "energy_identity", abs(sol.energy - sol.work) / abs(sol.work), 1e-9))
            zero = dr.solve_system(sol.system, fl.Field(grid, np.zeros(grid.shape + (2,))), ctx.galerkin_spec)
            out.append(record(12, "zero_force_zero_solution", float(np.abs(zero.field.values).max()), 0.0))
    return out


CRITERIA = {
    1: symbol_algebra,
    2: constants,
    3: cross_route,
    4: decomposition,
    5: peridynamic,
    6: dtn_halfspace,
    7: fundamental_solution,
    8: poisson,
    9: psi_upsilon,
    10: extension,
    11: korn,
    12: dirichlet,
}

SUITES = {
    "symbols": (1,),
    "constants": (2,),
    "peridynamics": (3, 4, 5, 6),
    "kernels": (7, 8, 9),
    "extension": (10, 11),
    "dirichlet": (12,),
}
SUITES["all"] = tuple(sorted(CRITERIA))


def run_suite(name, seed=0, workers=1):
    if name not in SUITES:
        raise DomainError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    ctx = Context(seed=seed, workers=workers)
    records = []
    for number in SUITES[name]:
        records.extend(CRITERIA[number](ctx))
    return records


def report_json(name, records, seed=0):
    failed = sum(r["status"] == "fail" for r in records)
    body = {"suite": name, "seed": seed, "passed": len(records) - failed, "failed": failed, "results": records}
    return json.dumps(body, indent=2, sort_keys=True) + "\n"
