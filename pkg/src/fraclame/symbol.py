"""Per-frequency matrix symbols of the Lame-Navier family.

Every symbol here has the form T(|xi|) I + (L(|xi|) - T(|xi|)) xi xi^T / |xi|^2: it
acts by T on the plane orthogonal to xi and by L along xi. Functions accept a
single frequency of shape (d,) or a stack of shape (..., d) and return (..., d, d).
Frequencies are in cycles per unit length (transform kernel exp(-2 pi i x.xi)).
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularityError
from .special import bessel_k_cal, bessel_k_cal_complement


@dataclass(frozen=True)
class ElasticModuli:
    """Lame moduli with the ellipticity conditions mu > 0 and 2 mu + lambda > 0."""

    mu: float
    lam: float

    def __post_init__(self):
        if not (np.isfinite(self.mu) and np.isfinite(self.lam)):
            raise DomainError("moduli must be finite")
        if self.mu <= 0.0:
            raise DomainError(f"shear modulus must be positive, got {self.mu}")
        if 2.0 * self.mu + self.lam <= 0.0:
            raise DomainError(f"2 mu + lambda must be positive, got {2 * self.mu + self.lam}")

    @property
    def longitudinal(self):
        return 2.0 * self.mu + self.lam

    def powers(self, s):
        """(mu^s, (2 mu + lambda)^s)."""
        return self.mu**s, self.longitudinal**s


def _geometry(xi):
    xi = np.asarray(xi, dtype=float)
    r2 = np.sum(xi * xi, axis=-1)
    safe = np.where(r2 > 0.0, r2, 1.0)
    proj = xi[..., :, None] * xi[..., None, :] / safe[..., None, None]
    proj = np.where((r2 > 0.0)[..., None, None], proj, 0.0)
    return np.sqrt(r2), proj, np.eye(xi.shape[-1])


def _assemble(transverse, longitudinal, proj, eye):
    t = np.asarray(transverse)[..., None, None]
    l = np.asarray(longitudinal)[..., None, None]
    return t * eye + (l - t) * proj


def _first_zero(xi, norm):
    idx = np.argwhere(np.atleast_1d(norm) == 0.0)[0]
    return np.atleast_2d(np.asarray(xi, dtype=float))[tuple(idx)] if np.ndim(norm) else np.asarray(xi)


def spectral_radius_power(norm, s):
    """(2 pi |xi|)^{2s} with the convention 0 for s > 0 at xi = 0."""
    return (2.0 * np.pi * norm) ** (2.0 * s)


def lame_symbol(xi, m):
    """mu (2 pi |xi|)^2 I + (mu + lambda) (2 pi)^2 xi xi^T."""
    norm, proj, eye = _geometry(xi)
    a = (2.0 * np.pi * norm) ** 2
    return _assemble(m.mu * a, m.longitudinal * a, proj, eye)


def lame_symbol_power(xi, s, m):
    """Fractional power M^s(xi) for s in (-d/2, 1]; zero matrix at xi = 0 when s > 0."""
    xi = np.asarray(xi, dtype=float)
    d = xi.shape[-1]
    if not (-d / 2.0 < s <= 1.0):
        raise DomainError(f"power s={s} outside (-d/2, 1]")
    norm, proj, eye = _geometry(xi)
    if s <= 0.0 and np.any(norm == 0.0):
        if s == 0.0:
            return np.broadcast_to(eye, proj.shape).copy()
        raise SingularityError(f"negative power is singular at xi={_first_zero(xi, norm).tolist()}")
    a = spectral_radius_power(np.where(norm > 0.0, norm, 1.0), s)
    a = np.where(norm > 0.0, a, 0.0)
    mu_s, lg_s = m.powers(s)
    return _assemble(mu_s * a, lg_s * a, proj, eye)


def f_operator_symbol(xi, s):
    """(2 pi|xi|)^{2s} (I + 2s xi xi^T/|xi|^2): the symbol of the projected-difference operator."""
    norm, proj, eye = _geometry(xi)
    a = spectral_radius_power(norm, s)
    return _assemble(a, (1.0 + 2.0 * s) * a, proj, eye)


def lame_symbol_inverse_power(xi, s, m):
    """[M^s(xi)]^{-1} for s in (0, d/2) and xi != 0."""
    xi = np.asarray(xi, dtype=float)
    d = xi.shape[-1]
    if not (0.0 < s < d / 2.0):
        raise DomainError(f"power s={s} outside (0, d/2)")
    norm, proj, eye = _geometry(xi)
    if np.any(norm == 0.0):
        raise SingularityError(f"inverse power is singular at xi={_first_zero(xi, norm).tolist()}")
    a = spectral_radius_power(norm, -s)
    mu_s, lg_s = m.powers(s)
    return _assemble(a / mu_s, a / lg_s, proj, eye)


def heat_symbol(xi, t, m):
    """exp(-t M(xi)); identity at xi = 0."""
    if t <= 0.0:
        raise DomainError("time must be positive")
    norm, proj, eye = _geometry(xi)
    a = (2.0 * np.pi * norm) ** 2
    return _assemble(np.exp(-m.mu * a * t), np.exp(-m.longitudinal * a * t), proj, eye)


def _kcal_or_one(s, arg, complement=False):
    arg = np.asarray(arg, dtype=float)
    out = np.full(arg.shape, 0.0 if complement else 1.0)
    pos = arg > 0.0
    if pos.any():
        fn = bessel_k_cal_complement if complement else bessel_k_cal
        out[pos] = fn(s, arg[pos])
    return out


def poisson_symbol(xi, t, s, m):
    """Fourier transform of the Poisson kernel at height t; identity at xi = 0."""
    if t <= 0.0:
        raise DomainError("height t must be positive")
    norm, proj, eye = _geometry(xi)
    base = 2.0 * np.pi * norm * t
    tr = _kcal_or_one(s, base * np.sqrt(m.mu))
    lg = _kcal_or_one(s, base * np.sqrt(m.longitudinal))
    return _assemble(tr, lg, proj, eye)


def poisson_symbol_complement(xi, t, s, m):
    """I - poisson_symbol, accurate when t |xi| is small."""
    if t <= 0.0:
        raise DomainError("height t must be positive")
    norm, proj, eye = _geometry(xi)
    base = 2.0 * np.pi * norm * t
    tr = _kcal_or_one(s, base * np.sqrt(m.mu), complement=True)
    lg = _kcal_or_one(s, base * np.sqrt(m.longitudinal), complement=True)
    return _assemble(tr, lg, proj, eye)


def resolvent_symbol(xi, s, q, m):
    """(M^s(xi) + q I)^{-1} for q > 0; equals I / q at xi = 0."""
    if q <= 0.0:
        raise DomainError("resolvent parameter must be positive")
    norm, proj, eye = _geometry(xi)
    a = spectral_radius_power(norm, s)
    mu_s, lg_s = m.powers(s)
    inv_t = 1.0 / (mu_s * a + q)
    inv_l = 1.0 / (lg_s * a + q)
    return _assemble(inv_t, inv_l, proj, eye)


def dtn_weights(m_tilde):
    """Weights of the two singular integrals of the half-space Dirichlet-to-Neumann map."""
    mu, lam = m_tilde.mu, m_tilde.lam
    return 2.0 * mu * mu / (3.0 * mu + lam), mu * (mu + lam) / (3.0 * mu + lam)


def dtn_halfspace_symbol(xi, m_tilde):
    """Symbol of the classical half-space Dirichlet-to-Neumann map.

    The map is w1 (-Delta)^{1/2} + w2 F^{1/2}, and F^{1/2} has symbol
    2 pi |xi| (I + xi xi^T / |xi|^2).
    """
    xi = np.asarray(xi, dtype=float)
    norm, proj, eye = _geometry(xi)
    if np.any(norm == 0.0):
        raise SingularityError(f"Dirichlet-to-Neumann symbol is singular at xi={_first_zero(xi, norm).tolist()}")
    w1, w2 = dtn_weights(m_tilde)
    a = 2.0 * np.pi * norm
    return (w1 * a)[..., None, None] * eye + (w2 * a)[..., None, None] * (eye + proj)


def dtn_equivalent_moduli(m_tilde):
    """Moduli (mu, lambda) for which the half-power operator equals the half-space map."""
    mu = m_tilde.mu**2
    lg = (2.0 * m_tilde.mu * m_tilde.longitudinal / (3.0 * m_tilde.mu + m_tilde.lam)) ** 2
    return ElasticModuli(mu, lg - 2.0 * mu)
