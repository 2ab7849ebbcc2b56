"""Solving the Jacobi equation L u = f mode by mode.

Run:  python demos/02_linear_solver.py
"""

import numpy as np

from scalarflat.angular import AngularGrid
from scalarflat.fields import ConeField, RadialGrid
from scalarflat.link_geometry import solve_scalar_flat_radii
from scalarflat.radial import harmonic_extension, iteration_norm, solve_linear
from scalarflat.spectrum import ModeBasis, select_threshold

link = solve_scalar_flat_radii(2, 1)
sel = select_threshold(link, 4)
rad = RadialGrid(1e-3, 129)
basis = ModeBasis(link, AngularGrid.for_link(link, 33), 4)

# Manufactured solution u* = t^3 phi with phi the (1,1) mode: L u* = S1 (12 - mu) phi.
j = basis.index((1, 1, "cos"))
f = np.zeros((rad.count, len(basis)))
f[:, j] = basis.S1 * (12 - basis.mu[j])
psi = np.zeros(len(basis))
psi[j] = 1.0
u, diag = solve_linear(ConeField(basis, rad, profiles=f), psi, sel, rad)
err = np.abs(u.profiles[:, j] - rad.t**3).max()
print(f"manufactured t^3 phi_(1,1): max profile error {err:.2e}")
print(f"weighted sup / (data norms) = {diag.prop1_ratio:.3f}")

# The L-harmonic extension of boundary data living on one high mode.
psi = np.zeros(len(basis))
psi[sel.J] = 1.0
H = harmonic_extension(psi, basis, sel, rad)
g = sel.modes[sel.J].gamma_plus.real
print(f"\nH_J psi for mode {sel.modes[sel.J].label}: profile t^{g:.4f}")
for t in (1e-3, 1e-2, 1e-1, 1.0):
    i = np.argmin(np.abs(rad.t - t))
    print(f"  t={rad.t[i]:.3g}  a(t)={H.profiles[i, sel.J]:.4e}")
print(f"iteration norm of H_J psi: {iteration_norm(H, sel.m):.4f}")
