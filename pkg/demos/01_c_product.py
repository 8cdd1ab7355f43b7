"""
The c-product and self-orthogonal vectors
=========================================

Complex symmetric matrices are diagonalised with the bilinear product
(u|v) = sum u_k v_k, without complex conjugation.  A nonzero vector can then
have zero length, which is exactly what happens to the eigenvector at an
exceptional point.
"""

import numpy as np

from eptrack.linalg import c_normalize, c_product, diag_2x2, self_overlap_ratio

u = np.array([1.0, 1j])
print("(u|u) =", c_product(u, u))                 # 0: u is self-orthogonal
print("ordinary norm^2 =", np.vdot(u, u).real)    # 2
print("self-overlap ratio =", self_overlap_ratio(u))

# normalisation uses the principal square root of (v|v)
v = c_normalize(np.array([0.0, 3j]))
print("normalised (0, 3i) ->", v, " (v|v) =", c_product(v, v))

# a 2x2 complex symmetric block is brought to diagonal form by a
# c-orthogonal rotation, as long as it is not at its own exceptional point
m = np.array([[1.0, 0.4j], [0.4j, -1.0]])
vals, w = diag_2x2(m)
print("eigenvalues", vals)
print("w m w^T =\n", np.round(w @ m @ w.T, 12))

# the same block with coupling i*1 is defective: both eigenvalues are 0
ep = np.array([[1.0, 1j], [1j, -1.0]])
print("defective block eigenvalues:", np.linalg.eigvals(ep))
