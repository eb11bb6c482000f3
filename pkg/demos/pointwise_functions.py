"""Entrywise functions of a compressed tensor compared with numpy on the
full array.  Run: python3 demos/pointwise_functions.py
"""

import numpy as np

from ttdiv import (
    IterationConfig,
    TruncationConfig,
    had_exp,
    had_inverse,
    had_log,
    had_max,
    had_sign,
    had_sqrt_pair,
    tt_add,
    tt_ones,
    tt_random,
    tt_scale,
    tt_to_dense,
)

rng = np.random.default_rng(0)
modes = [8] * 4
w = tt_random(modes, [2] * 3, rng)
scale = np.abs(tt_to_dense(w)).max()
# a positive tensor with values in [1, 2]
pos = tt_add(tt_scale(tt_ones(modes), 1.5), tt_scale(w, 0.5 / scale))
P = tt_to_dense(pos)
cfg = IterationConfig(tol=1e-9, trunc=TruncationConfig(1e-10))


def rel(x, ref):
    return np.linalg.norm(tt_to_dense(x) - ref) / np.linalg.norm(ref)


inv = had_inverse(pos, cfg)
root, inv_root = had_sqrt_pair(pos, cfg)
log = had_log(pos, cfg)
print(f"inverse       rel.err {rel(inv.value, 1 / P):.1e}  iterations {inv.iterations}")
print(f"sqrt          rel.err {rel(root.value, np.sqrt(P)):.1e}  iterations {root.iterations}")
print(f"inverse sqrt  rel.err {rel(inv_root.value, 1 / np.sqrt(P)):.1e}")
print(f"log           rel.err {rel(log.value, np.log(P)):.1e}  terms {log.iterations}")
print(f"exp(log)      rel.err {rel(had_exp(log.value, cfg).value, P):.1e}")

signed = tt_scale(w, 1 / scale)
W = tt_to_dense(signed)
sign = had_sign(signed, cfg)
mismatch = np.mean(np.sign(tt_to_dense(sign.value)) != np.sign(W))
top, _ = had_max(signed, cfg)
print(f"sign          converged {sign.converged}  sign mismatches {mismatch:.1%}")
print(f"max           {top:.6f}  numpy {W.max():.6f}")
