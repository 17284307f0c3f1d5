"""Show that the D2D rate term is neither convex nor concave: its Hessian
has one positive and one negative eigenvalue everywhere in the domain.

Run: python3 demos/03_nonconvexity.py
"""

import numpy as np

from coopd2d import nonconvexity_probe

xs = np.logspace(-3, 2, 6)
ys = np.array([0.1, 0.25, 0.4])
for beta in (0.1, 10.0):
    lam = np.asarray(nonconvexity_probe(beta, xs, ys))
    print(f"beta = {beta}: lambda1 in [{lam[:, 0].min():.2e}, {lam[:, 0].max():.2e}], "
          f"lambda2 in [{lam[:, 1].min():.2e}, {lam[:, 1].max():.2e}]")
    print(f"  indefinite at every point: {bool(np.all((lam[:, 0] > 0) & (lam[:, 1] < 0)))}")
