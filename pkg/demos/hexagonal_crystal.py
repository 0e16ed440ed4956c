"""
Walk on the hexagonal lattice
=============================

The honeycomb as a two-vertex quotient graph with three edges. We compute the
invariant measure, a harmonic realization and the limit covariance, then check
the covariance against a Monte-Carlo run.
"""

import numpy as np

from trotterlab.crystal import (HEXAGONAL_BASIS, harmonic_realization, harmonic_residual,
                                hexagonal, invariant_measure, limit_covariance,
                                monte_carlo_covariance)

G = hexagonal()
m = invariant_measure(G)
print("invariant measure:", m)

phi = harmonic_realization(G, m)
print("vertex positions (lattice coordinates):\n", phi.positions)
print("harmonic residual:", harmonic_residual(G, phi))

# in the Euclidean frame the three bonds are 120 degrees apart
vecs = phi.edge_vectors(G) @ HEXAGONAL_BASIS.T
print("bond lengths:", np.round(np.linalg.norm(vecs[:3], axis=1), 12))

sigma = limit_covariance(G, m, phi, basis=HEXAGONAL_BASIS)
print("limit covariance:\n", sigma)

est, se = monte_carlo_covariance(G, phi, n_steps=2000, n_paths=100_000, seed=7,
                                 basis=HEXAGONAL_BASIS)
print("Monte-Carlo estimate:\n", est)
print("z-scores:\n", np.round((est - sigma) / se, 2))
