"""
Kernels in real space
=====================

The fundamental solution, the Poisson kernel of the extension problem and the
profiles behind the kernel of the inverse operator, evaluated in closed form.
"""

import numpy as np

from fraclame import kernels as kn
from fraclame import special as spf
from fraclame.symbol import ElasticModuli, lame_symbol_inverse_power

m = ElasticModuli(1.0, 0.5)
s = 0.4

# Psi^s is homogeneous of degree 2s - d.
x = np.array([0.6, -0.2])
ratio = kn.fundamental_solution(2 * x, s, m) / kn.fundamental_solution(x, s, m)
print("Psi(2x)/Psi(x) =", ratio[0, 0], "expected", 2 ** (2 * s - 2))

# Its (tapered) Fourier transform is the inverse symbol.
xi = np.array([0.3, 0.4])
print("windowed transform:\n", kn.fundamental_solution_fourier(xi, s, m, 2))
print("inverse symbol:\n", lame_symbol_inverse_power(xi, s, m))

# The Poisson kernel carries unit mass at every height t.
for t in (0.5, 2.0):
    print(f"mass of P(., {t}) =\n", kn.poisson_mass(t, s, m))

# psi_2(r) approaches -kappa as r -> 0
print("psi_2(1e-3) / kappa =", kn.psi_profiles(1e-3, s, 2)[1] / spf.const_kappa(2, s))
