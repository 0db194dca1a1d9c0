"""Periodic-grid spectral engine for vector and matrix fields.

A periodic box of side L stands in for R^d. Node j along each axis sits at
-L/2 + j L/n, so the origin is a grid node. Multipliers are evaluated at the
discrete frequencies k/L and applied mode by mode with the unitary FFT.
"""

from dataclasses import dataclass

import numpy as np

from . import symbol as sy
from .errors import AccuracyError, DomainError, PreconditionError

REAL_RESIDUE_TOL = 1e-12


@dataclass(frozen=True)
class PeriodicGrid:
    d: int
    n: int
    L: float

    def __post_init__(self):
        if self.d not in (2, 3):
            raise DomainError(f"dimension must be 2 or 3, got {self.d}")
        if self.n < 8 or self.n & (self.n - 1):
            raise DomainError(f"points per axis must be a power of two >= 8, got {self.n}")
        if not self.L > 0.0:
            raise DomainError("box length must be positive")

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def spacing(self):
        return self.L / self.n

    @property
    def cell_volume(self):
        return self.spacing**self.d

    def axis(self):
        return -0.5 * self.L + self.spacing * np.arange(self.n)

    def points(self):
        """Node coordinates, shape grid.shape + (d,)."""
        ax = self.axis()
        return np.stack(np.meshgrid(*([ax] * self.d), indexing="ij"), axis=-1)

    def frequencies(self):
        """Frequencies k/L in FFT order, shape grid.shape + (d,)."""
        k = np.fft.fftfreq(self.n, d=self.spacing)
        return np.stack(np.meshgrid(*([k] * self.d), indexing="ij"), axis=-1)

    def frequency_norm(self):
        return np.linalg.norm(self.frequencies(), axis=-1)

    def symbol_frequencies(self):
        """Frequencies at which symbols are evaluated.

        On the Nyquist planes a mode k and its conjugate partner -k differ in more
        than sign, so a matrix symbol taken at the raw frequency breaks either
        reality or the exact symbol algebra. Keeping |xi| but taking the direction
        from xi with its Nyquist components removed makes the partner frequency
        exactly -xi, so every symbol calculus identity holds mode by mode.
        """
        xi = self.frequencies()
        nyquist = np.isclose(np.abs(xi), 0.5 / self.spacing)
        tame = np.where(nyquist, 0.0, xi)
        tame_norm = np.linalg.norm(tame, axis=-1, keepdims=True)
        direction = np.where(tame_norm > 0.0, tame / np.where(tame_norm > 0.0, tame_norm, 1.0), 0.0)
        keep_raw = (tame_norm == 0.0)
        return np.where(keep_raw, xi, direction * np.linalg.norm(xi, axis=-1, keepdims=True))


@dataclass(frozen=True)
class Field:
    """Grid values with trailing component axes: () scalar, (d,) vector, (d, d) matrix."""

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape[: self.grid.d] != self.grid.shape:
            raise DomainError(f"values shape {vals.shape} does not start with grid shape {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("field values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def comp_shape(self):
        return self.values.shape[self.grid.d :]

    @classmethod
    def from_function(cls, grid, fn):
        """Sample fn(points) where points has shape grid.shape + (d,)."""
        return cls(grid, fn(grid.points()))

    def mean(self):
        return self.values.mean(axis=tuple(range(self.grid.d)))

    def norm(self):
        """Grid L2 norm with cell-volume weight."""
        return float(np.sqrt(np.sum(self.values**2) * self.grid.cell_volume))

    def __add__(self, other):
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other):
        return Field(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return Field(self.grid, self.values * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True)
class SpectralField:
    grid: PeriodicGrid
    coeffs: np.ndarray

    @property
    def comp_shape(self):
        return self.coeffs.shape[self.grid.d :]


def inner(u, v):
    """Grid L2 inner product sum u.v h^d."""
    return float(np.sum(u.values * v.values) * u.grid.cell_volume)


def fft_forward(u):
    axes = tuple(range(u.grid.d))
    return SpectralField(u.grid, np.fft.fftn(u.values, axes=axes, norm="ortho"))


def fft_inverse(spec):
    axes = tuple(range(spec.grid.d))
    vals = np.fft.ifftn(spec.coeffs, axes=axes, norm="ortho")
    return Field(spec.grid, _real_part(vals))


def _real_part(vals, scale=None):
    """Drop the imaginary part after checking it is roundoff relative to `scale`."""
    if scale is None:
        scale = np.abs(vals.real).max() if vals.size else 0.0
    residue = np.abs(vals.imag).max() if vals.size else 0.0
    if residue > REAL_RESIDUE_TOL * scale and residue > 0.0:
        raise AccuracyError(f"imaginary residue {residue:.3e} exceeds {REAL_RESIDUE_TOL} relative to {scale:.3e}")
    return np.ascontiguousarray(vals.real)


def _mirror(arr, d):
    """arr evaluated at -k for every mode k (indices taken mod n)."""
    for ax in range(d):
        arr = np.roll(np.flip(arr, axis=ax), 1, axis=ax)
    return arr


def _hermitian(mult, d):
    # With symbol_frequencies this is exact for every paired mode; it only zeroes
    # odd multipliers on self-conjugate modes (all nonzero indices at Nyquist).
    return 0.5 * (mult + np.conj(_mirror(mult, d)))


def _apply(u, mult, subscripts):
    mult = _hermitian(np.asarray(mult), u.grid.d)
    coeffs = fft_forward(u).coeffs
    out = np.einsum(subscripts, mult, coeffs)
    vals = np.fft.ifftn(out, axes=tuple(range(u.grid.d)), norm="ortho")
    # the residue is measured against what the output could be, not what it is
    scale = np.abs(coeffs).max() * np.abs(mult).max() * np.sqrt(u.grid.n**u.grid.d)
    return Field(u.grid, _real_part(vals, scale))


def apply_multiplier(u, sym):
    """Apply a matrix symbol xi -> (..., p, q) to a field with q components (or (q, r) matrix rows).

    `sym` is a callable on the frequency array or a precomputed array of shape
    grid.shape + (p, q).
    """
    mult = sym(u.grid.symbol_frequencies()) if callable(sym) else np.asarray(sym)
    if u.comp_shape == mult.shape[-1:]:
        return _apply(u, mult, "...ij,...j->...i")
    if len(u.comp_shape) == 2 and u.comp_shape[0] == mult.shape[-1]:
        return _apply(u, mult, "...ij,...jk->...ik")
    raise DomainError(f"symbol shape {mult.shape[-2:]} does not act on components {u.comp_shape}")


def apply_scalar_multiplier(u, mult):
    """Multiply every component by the same scalar multiplier array of shape grid.shape."""
    extra = (None,) * len(u.comp_shape)
    return _apply(u, np.asarray(mult)[(...,) + extra], "...,...->...")


def _radial_power(grid, power):
    """(2 pi |xi|)^power on the grid, zero at xi = 0."""
    norm = grid.frequency_norm()
    safe = np.where(norm > 0.0, norm, 1.0)
    return np.where(norm > 0.0, (2.0 * np.pi * safe) ** power, 0.0)


def _check_order(s, lo=0.0, hi=1.0, closed_hi=True):
    ok = lo < s <= hi if closed_hi else lo < s < hi
    if not ok:
        raise DomainError(f"order s={s} outside the admissible range")


def lame_apply(u, m):
    """Classical Lame-Navier operator -mu Delta u - (mu + lambda) grad div u."""
    return apply_multiplier(u, lambda xi: sy.lame_symbol(xi, m))


def frac_lame_apply(u, s, m):
    _check_order(s)
    return apply_multiplier(u, lambda xi: sy.lame_symbol_power(xi, s, m))


def frac_laplacian(u, s):
    """(-Delta)^s componentwise; s = 0 returns u unchanged."""
    if s == 0.0:
        return u
    return apply_scalar_multiplier(u, _radial_power(u.grid, 2.0 * s))


def f_operator(u, s):
    """Projected-difference operator with symbol (2 pi|xi|)^{2s} (2s xi xi^T/|xi|^2 + I)."""
    _check_order(s, closed_hi=False)
    return apply_multiplier(u, lambda xi: sy.f_operator_symbol(xi, s))


def _gradient_multiplier(grid, s):
    """2 pi i xi (2 pi |xi|)^{s-1}, zero at xi = 0."""
    return 1j * 2.0 * np.pi * grid.symbol_frequencies() * _radial_power(grid, s - 1.0)[..., None]


def frac_gradient(u, s):
    """Nonlocal gradient: entry (i, j) has symbol u_i 2 pi i xi_j (2 pi|xi|)^{s-1}."""
    _check_order(s, closed_hi=False)
    if u.comp_shape != (u.grid.d,):
        raise DomainError("gradient expects a vector field")
    return _apply(u, _gradient_multiplier(u.grid, s), "...j,...i->...ij")


def frac_divergence(u, s):
    """Nonlocal divergence; for matrix fields it contracts the last index."""
    _check_order(s, closed_hi=False)
    d = u.grid.d
    g = _gradient_multiplier(u.grid, s)
    if u.comp_shape == (d,):
        return _apply(u, g, "...j,...j->...")
    if u.comp_shape == (d, d):
        return _apply(u, g, "...j,...ij->...i")
    raise DomainError("divergence expects a vector or matrix field")


def frac_stress(u, s, m):
    """2 mu^s sym(grad^s u) + ((2 mu + lambda)^s - 2 mu^s) tr(grad^s u) I."""
    grad = frac_gradient(u, s).values
    sym_grad = 0.5 * (grad + np.swapaxes(grad, -1, -2))
    trace = np.einsum("...ii->...", grad)
    mu_s, lg_s = m.powers(s)
    eye = np.eye(u.grid.d)
    return Field(u.grid, 2.0 * mu_s * sym_grad + (lg_s - 2.0 * mu_s) * trace[..., None, None] * eye)


def riesz_potential_apply(u, s, m):
    """Lame-Navier-Riesz potential (inverse of the s-power) on mean-zero fields."""
    d = u.grid.d
    if not 0.0 < s < d / 2.0:
        raise DomainError(f"potential order s={s} outside (0, d/2)")
    mean = u.mean()
    if np.max(np.abs(mean)) * np.sqrt(u.grid.n**d) > 1e-12 * max(np.sqrt(np.sum(u.values**2)), 1e-300):
        raise PreconditionError(f"field mean {np.asarray(mean).tolist()} is not zero")
    xi = u.grid.symbol_frequencies()
    norm = np.linalg.norm(xi, axis=-1)
    nonzero = norm > 0.0
    mult = np.zeros(u.grid.shape + (d, d))
    mult[nonzero] = sy.lame_symbol_inverse_power(xi[nonzero], s, m)
    return apply_multiplier(u, mult)


def solve_resolvent(f, s, q, m):
    """Solve L^s u + q u = f mode by mode."""
    _check_order(s)
    return apply_multiplier(f, lambda xi: sy.resolvent_symbol(xi, s, q, m))


def gaussian_wave_packet(grid, width=0.8, wavevector=None, polarization=None, center=None):
    """v exp(-|x - c|^2 / (2 width^2)) cos(2 pi xi0 . (x - c)) sampled on the grid."""
    d = grid.d
    wavevector = np.asarray(wavevector if wavevector is not None else [1.0] + [0.0] * (d - 1), dtype=float)
    polarization = np.asarray(polarization if polarization is not None else np.ones(d) / np.sqrt(d), dtype=float)
    center = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    return Field.from_function(grid, wave_packet_function(width, wavevector, polarization, center))


def wave_packet_function(width, wavevector, polarization, center):
    """Closed-form evaluator of the Gaussian wave packet at points (..., d)."""
    wavevector = np.asarray(wavevector, dtype=float)
    polarization = np.asarray(polarization, dtype=float)
    center = np.asarray(center, dtype=float)

    def evaluate(x):
        y = np.asarray(x, dtype=float) - center
        env = np.exp(-np.sum(y * y, axis=-1) / (2.0 * width * width))
        phase = np.cos(2.0 * np.pi * (y @ wavevector))
        return (env * phase)[..., None] * polarization

    return evaluate


def random_smooth_field(grid, seed, cutoff=None, comps=None):
    """Band-limited random field: Gaussian spectral decay, zero mean, no Nyquist content."""
    rng = np.random.default_rng(seed)
    comps = grid.d if comps is None else comps
    cutoff = grid.n / (6.0 * grid.L) if cutoff is None else cutoff
    noise = rng.standard_normal(grid.shape + (comps,))
    damp = np.exp(-((grid.frequency_norm() / cutoff) ** 2))
    damp.flat[0] = 0.0
    nyquist = np.isclose(np.abs(grid.frequencies()), 0.5 / grid.spacing).any(axis=-1)
    damp[nyquist] = 0.0
    return apply_scalar_multiplier(Field(grid, noise), damp)
