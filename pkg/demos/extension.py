"""
The extension problem and its Neumann trace
===========================================

Extend a field into the half-space (x, t) with the Poisson symbol, check that
the levels solve U_tt + (1-2s)/t U_t = L U, and recover L^s u from the
weighted normal derivative at t -> 0.
"""

import numpy as np

from fraclame import extension as ex
from fraclame import fields as fl
from fraclame.symbol import ElasticModuli

grid = fl.PeriodicGrid(2, 64, 12.0)
u = fl.gaussian_wave_packet(grid)
m = ElasticModuli(1.0, 0.5)

for s in (0.25, 0.5, 0.75):
    U = ex.extend(u, s, m, ex.ExtensionSlab.geometric(grid, 0.1, 2.0, 40))
    target = fl.frac_lame_apply(u, s, m) * ex.neumann_constant(s)
    limit = ex.dtn_neumann(u, s, m)
    err = np.abs(limit.values - target.values).max() / np.abs(target.values).max()
    print(f"s={s}: PDE residual {ex.pde_residual(U):.1e}, Neumann limit error {err:.1e}")

# Energy identity: the weighted Dirichlet energy of U equals the form of u, up to 1/C_s.
s = 0.5
U = ex.extend(u, s, m, ex.ExtensionSlab.graded(grid))
lhs = fl.inner(fl.frac_lame_apply(u, s, m), u)
rhs = ex.energy_identity_factor(s) * 2 * ex.weighted_energy(U)
print("energy identity", lhs, rhs)
