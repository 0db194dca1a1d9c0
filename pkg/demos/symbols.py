"""
Symbol algebra of the fractional Lame-Navier operator
======================================================

The operator acts on a plane wave through a 2x2 (or 3x3) matrix. Its s-th
power splits into a longitudinal part, weighted by (2 mu + lambda)^s, and a
transverse part, weighted by mu^s.
"""

import numpy as np

from fraclame.symbol import ElasticModuli, heat_symbol, lame_symbol_inverse_power, lame_symbol_power

m = ElasticModuli(mu=1.0, lam=0.5)
xi = np.array([0.3, 0.4])
unit = xi / np.linalg.norm(xi)
a = (2 * np.pi * np.linalg.norm(xi)) ** 1.0  # (2 pi |xi|)^{2s} at s = 1/2

half = lame_symbol_power(xi, 0.5, m)
print("M^{1/2}(xi) =\n", half)

# Eigenvectors: the direction of xi (longitudinal) and its perpendicular.
print("longitudinal eigenvalue", unit @ half @ unit, "expected", m.longitudinal**0.5 * a)
perp = np.array([-unit[1], unit[0]])
print("transverse eigenvalue  ", perp @ half @ perp, "expected", m.mu**0.5 * a)

# Powers compose: M^{1/2} M^{1/2} = M and the inverse power undoes the power.
print("semigroup residual", np.abs(half @ half - lame_symbol_power(xi, 1.0, m)).max())
print("inverse residual  ", np.abs(lame_symbol_inverse_power(xi, 0.3, m) @ lame_symbol_power(xi, 0.3, m) - np.eye(2)).max())

# Heat symbol: exp(-t M) stays between the two scalar heat factors.
print("heat symbol at t = 0.1:\n", heat_symbol(xi, 0.1, m))
