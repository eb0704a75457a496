"""
Largest eigenvalue of a two-mode Gaussian mixture
=================================================

The mixtures M and M* are centred two-mode Gaussian operators, so their
operator norm follows from two symplectic eigenvalues. Here the covariance
route is compared with a brute-force Fock-space eigensolve.
"""

import numpy as np

from cvlimits import gaussian_core as gc
from cvlimits import fock_numerics as fn

# covariance of M for s = 1, kappa = 1: both symplectic eigenvalues equal sqrt(5)
spec = gc.GaussianMixtureSpec(s=1.0, kappa=1.0)
gamma = gc.mixture_covariance(spec)
print("covariance:\n", gamma)
print("symplectic eigenvalues:", gc.symplectic_eigenvalues(gamma))

# a two-mode squeezer with tanh 2r = 2 kappa / (1 + s + kappa^2) diagonalises it
td = gc.thermal_decomposition(spec)
print("squeeze parameter r =", gc.diagonalizing_squeeze_param(spec))
print("S gamma S^T =\n", np.round(td.diagonalizer @ gamma @ td.diagonalizer.T, 12))

# the norm is the vacuum weight of the product thermal state
closed = gc.gaussian_max_eigenvalue(td.nu_plus, td.nu_minus)

# the same number from the Fock matrix of the defining coherent-state integral
op = fn.build_mixture_operator(spec, fn.TruncationSpec(dim=60))
print(f"||M|| closed form {closed:.12f}  Fock oracle {fn.hermitian_max_eigenvalue(op):.12f}")

# M* mixes the modes passively, so a beamsplitter diagonalises it instead
star = gc.GaussianMixtureSpec(s=2.0, kappa=1.0, conjugate_mode_b=False)
op = fn.build_mixture_operator(star, fn.TruncationSpec(dim=60))
print(f"||M*|| s/(s+1+k^2) = {2 / 4:.12f}  Fock oracle {fn.hermitian_max_eigenvalue(op):.12f}")
