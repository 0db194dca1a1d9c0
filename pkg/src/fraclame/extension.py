"""Half-space extension of a periodic field and its Dirichlet-to-Neumann limit.

Levels of the extension are exact Fourier multipliers (the Poisson symbol); finite
differences in t appear only in the residual, Neumann and energy checks.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import fields as fl
from ._rules import fornberg_weights
from .errors import AccuracyError, DomainError, PreconditionError
from .fields import Field, PeriodicGrid
from .symbol import poisson_symbol, poisson_symbol_complement


def neumann_constant(s):
    """2 Gamma(1-s) / (2^{2s} Gamma(s)): weighted normal derivative per unit of L^s u."""
    return 2 * math.gamma(1 - s) / (2 ** (2 * s) * math.gamma(s))


@dataclass(frozen=True)
class ExtensionSlab:
    base: PeriodicGrid
    t_levels: tuple

    def __post_init__(self):
        levels = tuple(float(t) for t in self.t_levels)
        if not levels:
            raise DomainError("a slab needs at least one level")
        if min(levels) <= 0.0 or any(b <= a for a, b in zip(levels, levels[1:])):
            raise DomainError("levels must be positive and strictly increasing")
        object.__setattr__(self, "t_levels", levels)

    @classmethod
    def geometric(cls, base, t_min, t_max, count):
        return cls(base, tuple(np.geomspace(t_min, t_max, count)))

    @classmethod
    def graded(cls, base, t_max=200.0, ratio=0.7, t_min=1e-7):
        """t_k = t_max ratio^k down to t_min, ascending."""
        count = int(math.floor(math.log(t_min / t_max) / math.log(ratio))) + 1
        return cls(base, tuple(t_max * ratio ** np.arange(count)[::-1]))


@dataclass(frozen=True)
class SlabField:
    slab: ExtensionSlab
    s: float
    moduli: object
    boundary: Field
    levels: tuple

    def values(self):
        return np.stack([f.values for f in self.levels])


def extend_level(u, t, s, m):
    """U(., t) for a single t > 0."""
    return fl.apply_multiplier(u, lambda xi: poisson_symbol(xi, t, s, m))


def extend(u, s, m, slab):
    """Poisson extension of u at every level of the slab."""
    fl._check_order(s, closed_hi=False)
    if u.grid != slab.base:
        raise DomainError("field and slab live on different grids")
    levels = tuple(extend_level(u, t, s, m) for t in slab.t_levels)
    return SlabField(slab, s, m, u, levels)


def _t_derivatives(values, t, order, width):
    """d^order/dt^order at each interior level with centered Fornberg stencils of `width` points."""
    half = width // 2
    out = {}
    for k in range(half, len(t) - half):
        idx = np.arange(k - half, k + half + 1)
        w = fornberg_weights(t[k], t[idx], order)
        out[k] = np.tensordot(w, values[idx], axes=(0, 0))
    return out


def _residual_parts(U, m, width):
    t = np.array(U.slab.t_levels)
    if len(t) < 5:
        raise PreconditionError("need at least 5 levels for finite differences in t")
    width = min(width, len(t) - (1 - len(t) % 2))
    vals = U.values()
    first = _t_derivatives(vals, t, 1, width)
    second = _t_derivatives(vals, t, 2, width)
    for k in first:
        lame = fl.lame_apply(U.levels[k], m).values
        res = second[k] + (1 - 2 * U.s) / t[k] * first[k] - lame
        yield k, np.sum(res**2), np.sum(lame**2) + np.sum(second[k] ** 2)


def pde_residual(U, m=None, width=7):
    """Relative grid norm of U_tt + (1-2s)/t U_t - L U over levels with centered stencils."""
    parts = list(_residual_parts(U, m or U.moduli, width))
    den = sum(p[2] for p in parts)
    if den == 0.0:
        return 0.0
    return math.sqrt(sum(p[1] for p in parts) / den)


def pde_residual_levels(U, m=None, width=7):
    """Per-level relative residual; NaN at the edge levels without a centered stencil."""
    out = np.full(len(U.levels), np.nan)
    for k, num, den in _residual_parts(U, m or U.moduli, width):
        out[k] = math.sqrt(num / den) if den > 0.0 else 0.0
    return out


def harmonic_residual(U):
    """Relative residual of the full (x, t) Laplacian of U; zero for s = 1/2 and lambda = -mu, mu = 1."""
    t = np.array(U.slab.t_levels)
    vals = U.values()
    second = _t_derivatives(vals, t, 2, 7)
    num = den = 0.0
    for k, utt in second.items():
        lap = -fl.frac_laplacian(U.levels[k], 1.0).values
        num += np.sum((utt + lap) ** 2)
        den += np.sum(utt**2) + np.sum(lap**2)
    return math.sqrt(num / den)


def neumann_quotient(u, t, s, m):
    """2s (u - U(., t)) / t^{2s}, formed from the complement symbol to avoid cancellation."""
    diff = fl.apply_multiplier(u, lambda xi: poisson_symbol_complement(xi, t, s, m))
    return diff * (2 * s / t ** (2 * s))


def dtn_neumann(u, s, m, t_sequence=None, tol=1e-3):
    """Extrapolated t -> 0 limit of the Neumann quotient.

    Fits a + b t^{2-2s} by least squares over the four smallest levels, and checks
    that dropping the smallest level moves the limit by less than `tol` (relative).
    """
    fl._check_order(s, closed_hi=False)
    t_sequence = tuple(0.003 * 0.5 ** np.arange(4)) if t_sequence is None else tuple(t_sequence)
    if len(t_sequence) < 4:
        raise PreconditionError("need at least 4 values of t")
    if any(b >= a for a, b in zip(t_sequence, t_sequence[1:])):
        raise PreconditionError("t_sequence must decrease")
    ts = np.array(t_sequence[-4:])
    quotients = np.stack([neumann_quotient(u, t, s, m).values for t in ts])
    best = _fit_limit(ts, quotients, s)
    check = _fit_limit(ts[:3], quotients[:3], s)
    scale = np.abs(best).max()
    if scale > 0.0 and np.abs(best - check).max() > tol * scale:
        raise AccuracyError("Neumann extrapolation does not settle on the given levels")
    return Field(u.grid, best)


def _fit_limit(ts, quotients, s):
    design = np.stack([np.ones_like(ts), ts ** (2 - 2 * s)], axis=1)
    flat = quotients.reshape(len(ts), -1)
    coef, *_ = np.linalg.lstsq(design, flat, rcond=None)
    return coef[0].reshape(quotients.shape[1:])


def mode_expansion_exponent(s, a=1.0, t_values=None):
    """Least-squares slope of log(1 - K_s(a t)) against log t at small t; tends to 2s."""
    from .special import bessel_k_cal_complement

    t_values = np.geomspace(1e-7, 1e-4, 8) if t_values is None else np.asarray(t_values)
    y = np.log([bessel_k_cal_complement(s, a * t) for t in t_values])
    slope, _ = np.polyfit(np.log(t_values), y, 1)
    return float(slope)


def _quadratic(u, m):
    """int mu |grad u|^2 + (mu + lambda) |div u|^2 dx = <L u, u>."""
    return fl.inner(fl.lame_apply(u, m), u)


def weighted_energy(U, s=None, m=None, max_correction=0.05):
    """(1/2) int int t^{1-2s} (|U_t|^2 + mu |grad U|^2 + (mu+lambda)|div U|^2) dx dt.

    The levels must be geometric (uniform in log t); t-derivatives use 5-point
    stencils in log t and the t-integral the trapezoid rule in log t. Below the
    smallest level the leading small-t behaviour is integrated exactly.
    """
    s = U.s if s is None else s
    m = m or U.moduli
    t = np.array(U.slab.t_levels)
    logs = np.log(t)
    step = np.diff(logs)
    if len(t) < 8 or not np.allclose(step, step[0], rtol=1e-9) or step[0] > math.log(2.0):
        raise AccuracyError("weighted energy needs >= 8 geometric levels with ratio at most 2")
    h = step[0]
    vals = U.values()
    dv = np.empty_like(vals)
    centered = np.array([1, -8, 0, 8, -1]) / (12 * h)
    for k in range(len(t)):
        lo = min(max(k - 2, 0), len(t) - 5)
        w = fornberg_weights(logs[k], logs[lo : lo + 5], 1) if k < 2 or k > len(t) - 3 else centered
        dv[k] = np.tensordot(w, vals[lo : lo + 5], axes=(0, 0))
    cell = U.slab.base.cell_volume
    density = np.empty(len(t))
    for k, level in enumerate(U.levels):
        ut = dv[k] / t[k]
        density[k] = cell * np.sum(ut**2) + _quadratic(level, m)
    # dt = t d(log t)
    integrand = density * t ** (2 - 2 * s)
    body = h * (np.sum(integrand) - 0.5 * (integrand[0] + integrand[-1]))
    t0 = t[0]
    lu = fl.frac_lame_apply(U.boundary, s, m)
    head = neumann_constant(s) ** 2 * fl.inner(lu, lu) * t0 ** (2 * s) / (2 * s)
    head += _quadratic(U.boundary, m) * t0 ** (2 - 2 * s) / (2 - 2 * s)
    total = 0.5 * (body + head)
    if total > 0.0 and 0.5 * head > max_correction * total:
        raise AccuracyError("smallest level too large: small-t correction dominates the energy")
    if integrand[-1] > 1e-8 * max(integrand.max(), 1e-300):
        raise AccuracyError("largest level too small: energy density has not decayed")
    return total


def energy_identity_factor(s):
    """E^s(u, u) = factor * 2 D(U)."""
    return 1.0 / neumann_constant(s)


def korn_ratio(u, s, m):
    """E^s(u, u) / (c [u]^2) computed spectrally; c [u]^2 = 2 ||(-Delta)^{s/2} u||^2."""
    fl._check_order(s, closed_hi=False)
    semi = fl.inner(fl.frac_laplacian(u, s), u)
    if semi <= 0.0:
        raise DomainError("u has zero fractional seminorm")
    return fl.inner(fl.frac_lame_apply(u, s, m), u) / (2.0 * semi)
