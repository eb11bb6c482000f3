"""Maxvol submatrix selection and TT-cross interpolation of a black-box
function on a 10-D grid.  Run: python3 demos/cross_interpolation.py
"""

import numpy as np

from ttdiv import CrossConfig, maxvol, skeleton, tt_cross, tt_elements

rng = np.random.default_rng(1)
A = rng.standard_normal((50, 3))
res = maxvol(A)
print(f"maxvol rows {sorted(res.row_indices.tolist())}, |det| {res.volume:.3f}, swaps {res.swaps}")

B = rng.standard_normal((60, 4)) @ rng.standard_normal((4, 40)) + 1e-6 * rng.standard_normal((60, 40))
_, _, approx = skeleton(B, 4)
print(f"skeleton rank 4: max error {np.abs(B - approx).max():.1e}")

modes = [12] * 10
x = np.linspace(0.0, 1.0, 12)


def f(idx):
    pts = x[idx]
    return 1.0 / (1.0 + np.sum(pts, axis=1))


tt, info = tt_cross(f, modes, CrossConfig(tol=1e-8), return_info=True)
test = rng.integers(0, 12, size=(2000, 10))
err = np.abs(tt_elements(tt, test) - f(test)).max()
print(f"cross: ranks {tt.ranks}, {info.n_evals} evaluations of {12**10:.1e} entries, held-out max error {err:.1e}")
